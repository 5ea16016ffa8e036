#include "wmbench/count_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wmbench {

namespace {

double bearing_rad(const Observation& o, int column, const Pose& pose) {
  double deg = std::fmod(pose.heading.degrees() + o.column_offset_deg(column), 360.0);
  if (deg < 0) deg += 360.0;
  return deg * std::numbers::pi / 180.0;
}

// Grid traversal shared by integration and casting; mirrors cast_ray so that
// replaying an observation from its own pose revisits the same cells.
template <typename Visit>
void traverse(double cs, double x, double y, double bearing, Visit&& visit) {
  const double dx = std::cos(bearing), dy = std::sin(bearing);
  int cx = static_cast<int>(std::floor(x / cs));
  int cy = static_cast<int>(std::floor(y / cs));
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x == 0 ? inf : ((cx + (step_x > 0 ? 1 : 0)) * cs - x) / dx;
  double t_max_y = step_y == 0 ? inf : ((cy + (step_y > 0 ? 1 : 0)) * cs - y) / dy;
  const double t_delta_x = step_x == 0 ? inf : cs / std::abs(dx);
  const double t_delta_y = step_y == 0 ? inf : cs / std::abs(dy);
  if (!visit(cx, cy, 0.0)) return;
  while (true) {
    double t;
    if (t_max_x <= t_max_y) {
      t = t_max_x;
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      t = t_max_y;
      cy += step_y;
      t_max_y += t_delta_y;
    }
    if (t >= kMaxRangeM) return;
    if (!visit(cx, cy, t)) return;
  }
}

constexpr double kHitTolerance = 1e-5;

}  // namespace

// ---------------------------------------------------------------------------
// ObservationMemory

ObservationMemory::ObservationMemory(double cell_size)
    : cell_size_(cell_size), cells_(static_cast<std::size_t>(kSide) * kSide) {}

bool ObservationMemory::local(int gx, int gy, int& lx, int& ly) const {
  lx = gx - origin_x_;
  ly = gy - origin_y_;
  return anchored_ && lx >= 0 && ly >= 0 && lx < kSide && ly < kSide;
}

ObservationMemory::MemCell* ObservationMemory::at(int gx, int gy) {
  int lx, ly;
  if (!local(gx, gy, lx, ly)) return nullptr;
  return &cells_[static_cast<std::size_t>(ly) * kSide + lx];
}

const ObservationMemory::MemCell* ObservationMemory::at(int gx, int gy) const {
  int lx, ly;
  if (!local(gx, gy, lx, ly)) return nullptr;
  return &cells_[static_cast<std::size_t>(ly) * kSide + lx];
}

void ObservationMemory::clear() {
  for (int i : touched_) cells_[static_cast<std::size_t>(i)] = MemCell{};
  touched_.clear();
  anchored_ = false;
}

void ObservationMemory::integrate(const Observation& obs, const Pose& pose) {
  if (!anchored_) {
    origin_x_ = static_cast<int>(std::floor(pose.x / cell_size_)) - kSide / 2;
    origin_y_ = static_cast<int>(std::floor(pose.y / cell_size_)) - kSide / 2;
    anchored_ = true;
  }
  auto touch = [&](MemCell* c) {
    if (c->state == State::Unknown) {
      touched_.push_back(static_cast<int>(c - cells_.data()));
    }
  };
  for (int i = 0; i < obs.width(); ++i) {
    const auto& col = obs.columns[static_cast<std::size_t>(i)];
    const double depth = col.depth_m;
    const bool has_hit = depth < kMaxRangeM;
    traverse(cell_size_, pose.x, pose.y, bearing_rad(obs, i, pose), [&](int gx, int gy, double t) {
      MemCell* c = at(gx, gy);
      if (!c) return false;
      if (has_hit && t >= depth - kHitTolerance) {
        touch(c);
        c->state = State::Occupied;
        c->class_id = static_cast<std::uint8_t>(std::clamp(col.class_id, 0, 255));
        c->instance_id = col.instance_id;
        return false;
      }
      if (c->state == State::Unknown) {
        touch(c);
        c->state = State::Free;
      }
      return true;
    });
  }
}

ObservationMemory::RayResult ObservationMemory::cast(double x, double y, double bearing) const {
  RayResult r;
  r.hit = true;
  r.distance = kMaxRangeM;
  traverse(cell_size_, x, y, bearing, [&](int gx, int gy, double t) {
    const MemCell* c = at(gx, gy);
    if (!c || c->state == State::Unknown) {
      r.hit = false;
      r.distance = t;
      r.context_class = 0;
      if (c) {
        for (int oy = -1; oy <= 1 && r.context_class == 0; ++oy) {
          for (int ox = -1; ox <= 1; ++ox) {
            const MemCell* n = at(gx + ox, gy + oy);
            if (n && n->state == State::Occupied && n->class_id != 0) {
              r.context_class = n->class_id;
              break;
            }
          }
        }
      }
      return false;
    }
    if (c->state == State::Occupied) {
      r.distance = t;
      r.class_id = c->class_id;
      r.instance_id = c->instance_id;
      return false;
    }
    return true;
  });
  return r;
}

bool ObservationMemory::blocked(double x0, double y0, double x1, double y1) const {
  const double len = std::hypot(x1 - x0, y1 - y0);
  if (len == 0.0) return false;
  const double bearing = std::atan2(y1 - y0, x1 - x0);
  bool hit = false;
  traverse(cell_size_, x0, y0, bearing, [&](int gx, int gy, double t) {
    if (t > len) return false;
    const MemCell* c = at(gx, gy);
    if (c && c->state == State::Occupied) {
      hit = true;
      return false;
    }
    return true;
  });
  return hit;
}

// ---------------------------------------------------------------------------
// CountPriorStats

CountPriorStats::CountPriorStats()
    : depth_counts_(static_cast<std::size_t>(kFrontierBins) * kClasses * kDepthBins, 0),
      class_counts_(static_cast<std::size_t>(kFrontierBins) * kClasses * kClasses, 0) {}

int CountPriorStats::context_index(double frontier_m, int context_class) {
  const int bin = std::clamp(static_cast<int>(frontier_m / kFrontierBinM), 0, kFrontierBins - 1);
  const int cls = std::clamp(context_class, 0, kClasses - 1);
  return bin * kClasses + cls;
}

void CountPriorStats::add_sample(double frontier_m, int context_class, double residual_m, int class_id) {
  const auto ctx = static_cast<std::size_t>(context_index(frontier_m, context_class));
  const int dbin = std::clamp(static_cast<int>(std::max(0.0, residual_m) / kDepthBinM), 0, kDepthBins - 1);
  const int cls = std::clamp(class_id, 0, kClasses - 1);
  ++depth_counts_[ctx * kDepthBins + static_cast<std::size_t>(dbin)];
  ++class_counts_[ctx * kClasses + static_cast<std::size_t>(cls)];
  ++samples_;
}

Column CountPriorStats::predict(double frontier_m, int context_class) const {
  const auto ctx = static_cast<std::size_t>(context_index(frontier_m, context_class));
  double weighted = 0.0, total = 0.0;
  for (int b = 0; b < kDepthBins; ++b) {
    const double n = depth_counts_[ctx * kDepthBins + static_cast<std::size_t>(b)] + 1.0;
    weighted += n * (b + 0.5) * kDepthBinM;
    total += n;
  }
  int best_cls = 0;
  std::uint32_t best = 0;
  for (int c = 0; c < kClasses; ++c) {
    const auto n = class_counts_[ctx * kClasses + static_cast<std::size_t>(c)];
    if (n > best) {
      best = n;
      best_cls = c;
    }
  }
  Column col;
  col.depth_m = static_cast<float>(std::min(kMaxRangeM, frontier_m + weighted / total));
  col.class_id = best_cls;
  col.instance_id = 0;
  return col;
}

void CountPriorStats::fit(std::span<const TrajectoryRecord> records, double cell_size) {
  ObservationMemory memory(cell_size);
  for (const auto& rec : records) {
    ++trajectories_;
    const auto n = rec.steps.size();
    for (std::size_t k = 0; k < n; ++k) {
      for (int gap = 1; gap <= kMaxGap && k + static_cast<std::size_t>(gap) < n; ++gap) {
        const auto& src = rec.steps[k];
        const auto& dst = rec.steps[k + static_cast<std::size_t>(gap)];
        if (src.pose == dst.pose) continue;
        memory.clear();
        memory.integrate(src.panorama, src.pose);
        for (int j = 0; j < dst.panorama.width(); ++j) {
          const auto r = memory.cast(dst.pose.x, dst.pose.y, bearing_rad(dst.panorama, j, dst.pose));
          if (r.hit) continue;
          const auto& truth = dst.panorama.columns[static_cast<std::size_t>(j)];
          add_sample(r.distance, r.context_class, truth.depth_m - r.distance, truth.class_id);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Rendering and the model

Observation render_from_memory(const ObservationMemory& memory, const CountPriorStats& stats, const Pose& pose,
                               ObservationKind kind) {
  Observation o;
  o.kind = kind;
  const int width = kind == ObservationKind::Panorama ? kDefaultPanoramaWidth : kDefaultEgoWidth;
  o.fov_deg = kind == ObservationKind::Panorama ? 360.0 : kDefaultFovDeg;
  o.columns.resize(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) {
    const auto r = memory.cast(pose.x, pose.y, bearing_rad(o, i, pose));
    auto& col = o.columns[static_cast<std::size_t>(i)];
    if (r.hit) {
      col = Column{static_cast<float>(r.distance), r.class_id, r.instance_id};
    } else {
      col = stats.predict(r.distance, r.context_class);
    }
  }
  return o;
}

CountPriorModel::CountPriorModel(WorldModelConfig config, double cell_size)
    : config_(std::move(config)), memory_(cell_size), stats_(config_.prior) {
  if (!stats_) stats_ = std::make_shared<const CountPriorStats>();
}

PredictedRollout CountPriorModel::rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                                          std::uint64_t /*seed*/) {
  const ActionSequence plan = check_request(*this, control, horizon);
  if (!last_integrated_ || !(*last_integrated_ == ctx.pose_estimate)) {
    memory_.integrate(ctx.observation, ctx.pose_estimate);
    last_integrated_ = ctx.pose_estimate;
  }
  PredictedRollout out;
  out.source = name();
  out.aligned_actions = plan;
  Pose pose = ctx.pose_estimate;
  for (auto a : plan) {
    Pose next = apply_action_unobstructed(pose, a);
    if (a == ActionPrimitive::Forward && memory_.blocked(pose.x, pose.y, next.x, next.y)) next = pose;
    pose = next;
    out.frames.push_back(render_from_memory(memory_, *stats_, pose, config_.observation_kind));
  }
  return out;
}

}  // namespace wmbench
