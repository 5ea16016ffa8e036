#include "wmbench/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wmbench/render.hpp"
#include "wmbench/wire.hpp"

namespace wmbench {

using nlohmann::json;
namespace fs = std::filesystem;

void DatagenParams::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be non-negative");
  if (!(r_f > 0.0)) throw std::invalid_argument("r_f must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in (0, 1]");
  if (floor_min < 1) throw std::invalid_argument("floor_min must be at least 1");
  if (!(scale > 0.0)) throw std::invalid_argument("scale must be positive");
}

std::vector<double> leaf_scores(const DistanceMatrix& D, double alpha) {
  const std::size_t n = D.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (D[i].size() != n) throw std::invalid_argument("distance matrix is not square");
    if (D[i][i] != 0.0) throw std::invalid_argument("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < i; ++j) {
      if (D[i][j] != D[j][i]) throw std::invalid_argument("distance matrix is not symmetric");
    }
  }
  std::vector<double> s(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double ecc = 0.0, sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !std::isfinite(D[i][j])) continue;
      ecc = std::max(ecc, D[i][j]);
      sum += D[i][j];
      ++count;
    }
    s[i] = ecc + alpha * (count ? sum / count : 0.0);
  }
  return s;
}

DistanceMatrix geodesic_matrix(const GridScene& scene, std::span<const Cell> cells) {
  const std::size_t n = cells.size();
  DistanceMatrix D(n, std::vector<double>(n, kNoPath));
  for (std::size_t i = 0; i < n; ++i) {
    const GeodesicField field(scene, cells[i]);
    for (std::size_t j = 0; j < n; ++j) {
      const auto d = field.distance(cells[j]);
      if (d) D[i][j] = *d;
    }
    D[i][i] = 0.0;
  }
  // Dijkstra is symmetric up to summation order; pin both halves to one value.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) D[i][j] = D[j][i] = std::min(D[i][j], D[j][i]);
  return D;
}

namespace {

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

DistanceMatrix submatrix(const DistanceMatrix& D, std::span<const std::size_t> idx) {
  DistanceMatrix out(idx.size(), std::vector<double>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) out[a][b] = D[idx[a]][idx[b]];
  return out;
}

}  // namespace

std::vector<std::size_t> prune_by_radius(const DistanceMatrix& D, std::span<const double> scores, double r_f) {
  std::vector<std::size_t> kept;
  for (std::size_t i : order_by_score(scores)) {
    const bool far = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) { return D[i][k] >= r_f; });
    if (far) kept.push_back(i);
  }
  return kept;
}

WaypointSet sample_waypoints(const GridScene& scene, double rho, double alpha, double r_f, int floor_min, Rng& rng) {
  auto free = scene.free_cells();
  if (free.empty()) throw std::invalid_argument("scene has no navigable area");
  const double area = static_cast<double>(free.size()) * scene.cell_size() * scene.cell_size();
  const auto n_wp = std::max<long long>(floor_min, static_cast<long long>(std::floor(rho * area)));
  const std::size_t take = std::min<std::size_t>(free.size(), static_cast<std::size_t>(n_wp));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(i), static_cast<int>(free.size()) - 1));
    std::swap(free[i], free[j]);
  }
  free.resize(take);

  const DistanceMatrix D = geodesic_matrix(scene, free);
  const auto scores = leaf_scores(D, alpha);
  const auto kept = prune_by_radius(D, scores, r_f);

  WaypointSet ws;
  ws.sampled = static_cast<int>(n_wp);
  ws.rho = rho;
  ws.alpha = alpha;
  ws.r_f = r_f;
  for (std::size_t k : kept) {
    ws.points.push_back(free[k]);
    ws.scores.push_back(scores[k]);
  }
  ws.D = submatrix(D, kept);
  return ws;
}

std::vector<TrajectoryRecord> generate_trajectories(const GridScene& scene, const WaypointSet& ws, double eta, Rng& rng,
                                                    const std::string& scene_ref, std::uint64_t seed,
                                                    GenerationLog* log) {
  if (ws.points.empty()) throw std::invalid_argument("waypoint set is empty");
  const std::size_t n = ws.points.size();
  const auto n_leaf = static_cast<std::size_t>(std::max(1.0, std::ceil(eta * ws.sampled)));

  std::vector<GeodesicField> fields;
  fields.reserve(n);
  for (const auto& c : ws.points) fields.emplace_back(scene, c);

  std::vector<std::size_t> remaining(n);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<double> scores = ws.scores;
  std::vector<std::size_t> U;
  auto refresh = [&] {
    U.clear();
    for (std::size_t k : order_by_score(scores)) {
      if (U.size() == n_leaf) break;
      U.push_back(remaining[k]);
    }
  };
  auto remove = [&](auto pred) {
    std::vector<std::size_t> kept;
    for (std::size_t w : remaining)
      if (!pred(w)) kept.push_back(w);
    const bool changed = kept.size() != remaining.size();
    remaining = std::move(kept);
    if (changed) scores = leaf_scores(submatrix(ws.D, remaining), ws.alpha);
    refresh();
  };
  auto covered_by = [&](std::span<const TrajectoryStep> steps) {
    return [&, steps](std::size_t w) {
      return std::any_of(steps.begin(), steps.end(), [&](const TrajectoryStep& s) {
        const auto d = fields[w].distance(scene.cell_of(s.pose));
        return d && *d <= ws.r_f;
      });
    };
  };

  std::vector<TrajectoryRecord> out;
  auto new_record = [&] {
    TrajectoryRecord r;
    r.scene = scene_ref;
    r.rho = ws.rho;
    r.alpha = ws.alpha;
    r.filter_radius = ws.r_f;
    r.eta = eta;
    r.seed = seed;
    return r;
  };
  auto record_degenerate = [&](const Pose& p) {
    TrajectoryRecord r = new_record();
    r.steps.push_back({p, ActionPrimitive::Null, render_panorama(scene, p)});
    r.id = record_id(r);
    remove(covered_by(r.steps));
    out.push_back(std::move(r));
  };

  refresh();
  std::size_t c = U[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(U.size()) - 1))];
  Pose pose = scene.center_of(ws.points[c], Heading(uniform_int(rng, 0, kHeadingCount - 1)));
  bool pending = true;  // start not yet part of any record
  remove([&](std::size_t w) { return w == c; });

  while (!U.empty()) {
    std::optional<std::size_t> next;
    for (std::size_t u : U) {
      if (!std::isfinite(ws.D[c][u])) continue;
      if (!next || ws.D[c][u] < ws.D[c][*next]) next = u;
    }
    if (!next) {
      // Nothing left in this component: close it and restart elsewhere.
      if (pending) record_degenerate(pose);
      if (U.empty()) {
        pending = false;
        break;
      }
      c = U[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(U.size()) - 1))];
      pose = scene.center_of(ws.points[c], Heading(uniform_int(rng, 0, kHeadingCount - 1)));
      pending = true;
      remove([&](std::size_t w) { return w == c; });
      if (log) ++log->resampled_starts;
      continue;
    }
    const std::size_t target = *next;
    ShortestPath sp;
    try {
      sp = shortest_path(scene, pose, ws.points[target]);
    } catch (const UnreachableError& e) {
      if (log) log->warnings.push_back(std::string("skipping unreachable waypoint: ") + e.what());
      remove([&](std::size_t w) { return w == target; });
      continue;
    }
    TrajectoryRecord r = new_record();
    r.steps.push_back({sp.poses.front(), ActionPrimitive::Null, render_panorama(scene, sp.poses.front())});
    for (std::size_t k = 0; k < sp.actions.size(); ++k) {
      r.steps.push_back({sp.poses[k + 1], sp.actions[k], render_panorama(scene, sp.poses[k + 1])});
    }
    r.id = record_id(r);
    const auto end_d = fields[target].distance(scene.cell_of(sp.poses.back()));
    if (!end_d || *end_d > ws.r_f) {
      if (log) log->warnings.push_back("path to waypoint ended outside the coverage radius");
    }
    remove([&](std::size_t w) { return w == target || covered_by(r.steps)(w); });
    out.push_back(std::move(r));
    c = target;
    pose = sp.poses.back();
    pending = false;
  }
  if (pending) record_degenerate(pose);
  return out;
}

std::vector<TrajectoryRecord> generate_dataset(const GridScene& scene, const std::string& scene_ref,
                                               const DatagenParams& params, std::uint64_t seed, GenerationLog* log) {
  params.validate();
  Rng rng(derive_seed({seed, 0x64617461ULL}));
  const auto ws = sample_waypoints(scene, params.effective_rho(), params.alpha, params.effective_rf(),
                                   params.floor_min, rng);
  auto records = generate_trajectories(scene, ws, params.eta, rng, scene_ref, seed, log);
  if (params.filter) records = filter_overlap(records, params.filter_threshold, scene.cell_size());
  return records;
}

double mean_consecutive_overlap(const TrajectoryRecord& r, double cell_size) {
  if (r.steps.size() < 2) return 1.0;
  double sum = 0.0;
  for (std::size_t k = 1; k < r.steps.size(); ++k) {
    const auto& a = r.steps[k - 1];
    const auto& b = r.steps[k];
    sum += overlap_ratio(front_view(a.panorama), a.pose, front_view(b.panorama), b.pose, cell_size);
  }
  return sum / static_cast<double>(r.steps.size() - 1);
}

std::vector<TrajectoryRecord> filter_overlap(std::span<const TrajectoryRecord> records, double threshold,
                                             double cell_size) {
  std::vector<TrajectoryRecord> out;
  for (const auto& r : records)
    if (mean_consecutive_overlap(r, cell_size) >= threshold) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json body_json(const TrajectoryRecord& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"pose", wire::to_json(s.pose)}, {"action", std::string(to_string(s.action))},
                     {"pano", wire::to_json(s.panorama)}});
  }
  return {{"scene", r.scene}, {"rho", r.rho},   {"alpha", r.alpha}, {"filter_radius", r.filter_radius},
          {"eta", r.eta},     {"seed", r.seed}, {"steps", std::move(steps)}};
}

TrajectoryRecord record_from_json(const json& j) {
  TrajectoryRecord r;
  r.id = j.at("id").get<std::string>();
  r.scene = j.at("scene").get<std::string>();
  r.rho = j.at("rho").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.filter_radius = j.at("filter_radius").get<double>();
  r.eta = j.at("eta").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& s : j.at("steps")) {
    TrajectoryStep step;
    step.pose = wire::pose_from_json(s.at("pose"));
    const auto a = action_from_string(s.at("action").get<std::string>());
    if (!a) throw std::invalid_argument("unknown action");
    step.action = *a;
    step.panorama = wire::observation_from_json(s.at("pano"));
    step.panorama.pose = step.pose;  // the wire form carries no pose
    r.steps.push_back(std::move(step));
  }
  return r;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json params_json(const DatagenParams& p) {
  return {{"rho", p.rho},     {"alpha", p.alpha},           {"r_f", p.r_f},
          {"eta", p.eta},     {"floor_min", p.floor_min},   {"scale", p.scale},
          {"filter", p.filter}, {"filter_threshold", p.filter_threshold}};
}

}  // namespace

std::string record_id(const TrajectoryRecord& r) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(body_json(r).dump())));
  return buf;
}

DatasetManifest manifest_of(std::span<const TrajectoryRecord> records, const DatagenParams& params) {
  DatasetManifest m;
  m.params = params;
  std::vector<std::string> scenes;
  for (const auto& r : records) {
    scenes.push_back(r.scene);
    m.frames += static_cast<long long>(r.steps.size());
    m.poses += static_cast<long long>(r.steps.size());
    m.actions += static_cast<long long>(r.steps.size());
    m.ids.push_back(r.id);
  }
  std::sort(scenes.begin(), scenes.end());
  m.scenes = static_cast<int>(std::unique(scenes.begin(), scenes.end()) - scenes.begin());
  m.trajectories = static_cast<int>(records.size());
  return m;
}

void write_dataset(std::span<const TrajectoryRecord> records, const DatagenParams& params, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "records");
  const auto m = manifest_of(records, params);
  json entries = json::array();
  for (const auto& r : records) {
    if (r.id != record_id(r)) throw DatasetIntegrityError(r.id, "record id does not match its content");
    json j = body_json(r);
    j["id"] = r.id;
    const std::string file = "records/" + r.id + ".json";
    std::ofstream out(fs::path(dir) / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << j.dump() << '\n';
    entries.push_back({{"id", r.id}, {"file", file}, {"frames", r.steps.size()}});
  }
  const json manifest = {{"version", 1},
                         {"params", params_json(params)},
                         {"counts",
                          {{"scenes", m.scenes},
                           {"trajectories", m.trajectories},
                           {"frames", m.frames},
                           {"poses", m.poses},
                           {"actions", m.actions}}},
                         {"records", std::move(entries)}};
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  out << manifest.dump(2) << '\n';
}

std::vector<TrajectoryRecord> read_dataset(const std::string& dir, DatasetManifest* manifest) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw std::runtime_error("cannot open manifest in " + dir);
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetIntegrityError("manifest.json", e.what());
  }
  std::vector<TrajectoryRecord> records;
  for (const auto& entry : m.at("records")) {
    const std::string id = entry.at("id").get<std::string>();
    std::ifstream rf(fs::path(dir) / entry.at("file").get<std::string>(), std::ios::binary);
    if (!rf) throw DatasetIntegrityError(id, "record file missing");
    std::stringstream ss;
    ss << rf.rdbuf();
    TrajectoryRecord r;
    try {
      r = record_from_json(json::parse(ss.str()));
    } catch (const std::exception& e) {
      throw DatasetIntegrityError(id, std::string("unreadable record: ") + e.what());
    }
    if (r.id != id || record_id(r) != id) throw DatasetIntegrityError(id, "content hash mismatch");
    if (r.steps.size() != entry.at("frames").get<std::size_t>()) throw DatasetIntegrityError(id, "frame count mismatch");
    records.push_back(std::move(r));
  }
  const auto& p = m.at("params");
  DatagenParams params;
  params.rho = p.at("rho").get<double>();
  params.alpha = p.at("alpha").get<double>();
  params.r_f = p.at("r_f").get<double>();
  params.eta = p.at("eta").get<double>();
  params.floor_min = p.at("floor_min").get<int>();
  params.scale = p.at("scale").get<double>();
  params.filter = p.value("filter", false);
  params.filter_threshold = p.value("filter_threshold", 0.55);
  const auto computed = manifest_of(records, params);
  const auto& counts = m.at("counts");
  if (counts.at("trajectories").get<int>() != computed.trajectories ||
      counts.at("frames").get<long long>() != computed.frames) {
    throw DatasetIntegrityError("manifest.json", "counts do not match records");
  }
  if (manifest) *manifest = computed;
  return records;
}

}  // namespace wmbench
