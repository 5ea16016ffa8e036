#include "wmbench/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wmbench {

std::string to_string(ObservationKind k) { return k == ObservationKind::Ego ? "ego" : "pano"; }

ObservationKind observation_kind_from_string(const std::string& s) {
  if (s == "ego") return ObservationKind::Ego;
  if (s == "pano") return ObservationKind::Panorama;
  throw std::invalid_argument("unknown observation kind '" + s + "'");
}

double Observation::column_offset_deg(double column) const {
  if (kind == ObservationKind::Panorama) return -(column + 0.5) * (360.0 / width());
  return fov_deg / 2.0 - (column + 0.5) * (fov_deg / width());
}

namespace {

double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  return r;
}

// Signed angle in (-180, 180].
double wrap_deg(double deg) {
  double r = normalize_deg(deg);
  if (r > 180.0) r -= 360.0;
  return r;
}

double to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

bool inside_wall(const GridScene& scene, double x, double y) {
  const Cell c = scene.cell_of(x, y);
  return scene.in_bounds(c) && scene.occupancy(c) == Occupancy::Wall;
}

void check_pose(const GridScene& scene, const Pose& pose) {
  if (!scene.in_bounds(scene.cell_of(pose))) throw RenderError("pose outside scene");
  if (inside_wall(scene, pose.x, pose.y)) throw RenderError("pose inside an occupied cell");
}

Observation render_columns(const GridScene& scene, const Pose& pose, ObservationKind kind, double fov_deg,
                           int width) {
  Observation o;
  o.kind = kind;
  o.fov_deg = fov_deg;
  o.pose = pose;
  o.columns.resize(static_cast<std::size_t>(width));
  const double h = pose.heading.degrees();
  for (int i = 0; i < width; ++i) {
    const double bearing = normalize_deg(h + o.column_offset_deg(i));
    o.columns[static_cast<std::size_t>(i)] = cast_ray(scene, pose.x, pose.y, to_rad(bearing));
  }
  return o;
}

}  // namespace

Column cast_ray(const GridScene& scene, double x, double y, double bearing_rad) {
  const double cs = scene.cell_size();
  const double dx = std::cos(bearing_rad), dy = std::sin(bearing_rad);
  Cell c = scene.cell_of(x, y);
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x == 0 ? inf : ((c.x + (step_x > 0 ? 1 : 0)) * cs - x) / dx;
  double t_max_y = step_y == 0 ? inf : ((c.y + (step_y > 0 ? 1 : 0)) * cs - y) / dy;
  const double t_delta_x = step_x == 0 ? inf : cs / std::abs(dx);
  const double t_delta_y = step_y == 0 ? inf : cs / std::abs(dy);
  double t = 0.0;
  while (true) {
    if (t_max_x <= t_max_y) {
      t = t_max_x;
      c.x += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      c.y += step_y;
      t_max_y += t_delta_y;
    }
    if (t >= kMaxRangeM || !scene.in_bounds(c)) return Column{};
    if (scene.occupancy(c) == Occupancy::Wall) {
      return Column{static_cast<float>(t), scene.class_at(c), scene.instance_at(c)};
    }
  }
}

EgoView raycast_view(const GridScene& scene, const Pose& pose, double fov_deg, int width) {
  if (width < 1) throw std::invalid_argument("view width must be positive");
  if (!(fov_deg > 0.0 && fov_deg <= 360.0)) throw std::invalid_argument("fov must be in (0, 360]");
  check_pose(scene, pose);
  return render_columns(scene, pose, ObservationKind::Ego, fov_deg, width);
}

Panorama render_panorama(const GridScene& scene, const Pose& pose, int width) {
  if (width < 1) throw std::invalid_argument("panorama width must be positive");
  check_pose(scene, pose);
  return render_columns(scene, pose, ObservationKind::Panorama, 360.0, width);
}

Observation render(const GridScene& scene, const Pose& pose, ObservationKind kind) {
  return kind == ObservationKind::Panorama ? render_panorama(scene, pose)
                                           : raycast_view(scene, pose, kDefaultFovDeg, kDefaultEgoWidth);
}

std::vector<EgoView> panorama_to_views(const Panorama& p, int n_views) {
  if (p.kind != ObservationKind::Panorama) throw std::invalid_argument("not a panorama");
  const int w = p.width();
  if (n_views < 1 || w % n_views != 0) throw std::invalid_argument("n_views must divide the panorama width");
  const int span = w / n_views;
  const int half = span / 2;
  if (span % 2 != 0) throw std::invalid_argument("view width must be even to centre on a heading");
  std::vector<EgoView> views;
  for (int k = 0; k < n_views; ++k) {
    EgoView v;
    v.kind = ObservationKind::Ego;
    v.fov_deg = 360.0 / n_views;
    v.columns.reserve(static_cast<std::size_t>(span));
    for (int i = 0; i < span; ++i) {
      const int j = ((k * span - half + i) % w + w) % w;
      v.columns.push_back(p.columns[static_cast<std::size_t>(j)]);
    }
    if (p.pose) {
      const double turn = -k * (360.0 / n_views) / kTurnStepDeg;
      if (turn == std::floor(turn)) {
        Pose vp = *p.pose;
        vp.heading = vp.heading.turned(static_cast<int>(turn));
        v.pose = vp;
      }
    }
    views.push_back(std::move(v));
  }
  return views;
}

Panorama stitch_views(const std::vector<EgoView>& views) {
  if (views.empty()) throw std::invalid_argument("no views to stitch");
  const int span = views.front().width();
  const int n = static_cast<int>(views.size());
  const int w = span * n;
  Panorama p;
  p.kind = ObservationKind::Panorama;
  p.fov_deg = 360.0;
  p.columns.resize(static_cast<std::size_t>(w));
  for (int k = 0; k < n; ++k) {
    if (views[static_cast<std::size_t>(k)].width() != span) throw std::invalid_argument("ragged views");
    for (int i = 0; i < span; ++i) {
      const int j = ((k * span - span / 2 + i) % w + w) % w;
      p.columns[static_cast<std::size_t>(j)] = views[static_cast<std::size_t>(k)].columns[static_cast<std::size_t>(i)];
    }
  }
  p.pose = views.front().pose;
  return p;
}

EgoView front_view(const Panorama& p, double fov_deg) {
  if (p.kind == ObservationKind::Ego) return p;
  const int w = p.width();
  const double cols = w * fov_deg / 360.0;
  const int span = static_cast<int>(std::lround(cols));
  if (std::abs(cols - span) > 1e-9 || span % 2 != 0) {
    throw std::invalid_argument("field of view does not map to an even column count");
  }
  EgoView v;
  v.kind = ObservationKind::Ego;
  v.fov_deg = fov_deg;
  v.pose = p.pose;
  v.columns.reserve(static_cast<std::size_t>(span));
  for (int i = 0; i < span; ++i) {
    const int j = ((i - span / 2) % w + w) % w;
    v.columns.push_back(p.columns[static_cast<std::size_t>(j)]);
  }
  return v;
}

Panorama rotate_panorama(const Panorama& p, int steps) {
  const int w = p.width();
  if (w % kHeadingCount != 0) throw std::invalid_argument("panorama width must be a multiple of 16");
  const int shift = steps * (w / kHeadingCount);
  Panorama out = p;
  for (int j = 0; j < w; ++j) {
    out.columns[static_cast<std::size_t>(j)] = p.columns[static_cast<std::size_t>(((j - shift) % w + w) % w)];
  }
  if (out.pose) out.pose->heading = out.pose->heading.turned(steps);
  return out;
}

double view_distance(const Observation& a, const Observation& b) {
  if (a.kind != b.kind || a.width() != b.width()) {
    throw std::invalid_argument("view_distance requires observations of the same kind and width");
  }
  if (a.width() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    const auto& ca = a.columns[i];
    const auto& cb = b.columns[i];
    const double cls = ca.class_id != cb.class_id ? 1.0 : 0.0;
    const double dep = std::min(1.0, std::abs(static_cast<double>(ca.depth_m) - cb.depth_m) / kDepthScaleM);
    sum += kClassWeight * cls + (1.0 - kClassWeight) * dep;
  }
  return sum / a.width();
}

double overlap_ratio(const EgoView& a, const Pose& pose_a, const EgoView& b, const Pose& pose_b,
                     double cell_size) {
  if (a.width() == 0) return 0.0;
  const double tol = 2.0 * cell_size;
  const double ha = pose_a.heading.degrees();
  const double hb = pose_b.heading.degrees();
  int matched = 0;
  for (int i = 0; i < a.width(); ++i) {
    const auto& col = a.columns[static_cast<std::size_t>(i)];
    if (col.depth_m >= kMaxRangeM) continue;
    const double bearing = to_rad(normalize_deg(ha + a.column_offset_deg(i)));
    const double px = pose_a.x + col.depth_m * std::cos(bearing);
    const double py = pose_a.y + col.depth_m * std::sin(bearing);
    const double vx = px - pose_b.x, vy = py - pose_b.y;
    const double range = std::hypot(vx, vy);
    const double rel = wrap_deg(std::atan2(vy, vx) * 180.0 / std::numbers::pi - hb);
    double k = 0.0;
    if (b.kind == ObservationKind::Panorama) {
      k = normalize_deg(-rel) / (360.0 / b.width()) - 0.5;
    } else {
      if (std::abs(rel) > b.fov_deg / 2.0) continue;
      k = (b.fov_deg / 2.0 - rel) / (b.fov_deg / b.width()) - 0.5;
    }
    int col_b = static_cast<int>(std::lround(k));
    col_b = b.kind == ObservationKind::Panorama ? ((col_b % b.width()) + b.width()) % b.width()
                                                : std::clamp(col_b, 0, b.width() - 1);
    if (std::abs(b.columns[static_cast<std::size_t>(col_b)].depth_m - range) <= tol) ++matched;
  }
  return static_cast<double>(matched) / a.width();
}

double overlap_ratio(const EgoView& a, const EgoView& b, double cell_size) {
  if (!a.pose || !b.pose) throw std::invalid_argument("overlap_ratio requires posed views");
  return overlap_ratio(a, *a.pose, b, *b.pose, cell_size);
}

double central_visibility(const Observation& o, int instance_id, double fov_deg) {
  if (instance_id == 0 || o.width() == 0) return 0.0;
  int total = 0, hits = 0;
  for (int i = 0; i < o.width(); ++i) {
    const double off = wrap_deg(o.column_offset_deg(i));
    if (std::abs(off) >= fov_deg / 2.0) continue;
    ++total;
    if (o.columns[static_cast<std::size_t>(i)].instance_id == instance_id) ++hits;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

}  // namespace wmbench
