#include "wmbench/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>

#include "wmbench/palette.hpp"
#include "wmbench/render.hpp"
#include "wmbench/rng.hpp"

namespace wmbench {

namespace fs = std::filesystem;

void SceneGenParams::validate() const {
  if (width < 10 || height < 10) throw std::invalid_argument("scene must be at least 10 cells on each side");
  if (room_count < 1) throw std::invalid_argument("room_count must be at least 1");
  if (!(object_density >= 0.0)) throw std::invalid_argument("object_density must be non-negative");
}

bool free_space_connected(const GridScene& scene) {
  const auto free = scene.free_cells();
  if (free.empty()) return true;
  std::vector<char> seen(static_cast<std::size_t>(scene.width()) * scene.height(), 0);
  std::queue<Cell> q;
  q.push(free.front());
  seen[scene.index(free.front())] = 1;
  std::size_t reached = 1;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (const Cell d : {Cell{1, 0}, Cell{-1, 0}, Cell{0, 1}, Cell{0, -1}}) {
      const Cell n{c.x + d.x, c.y + d.y};
      if (!scene.is_free(n) || seen[scene.index(n)]) continue;
      seen[scene.index(n)] = 1;
      ++reached;
      q.push(n);
    }
  }
  return reached == free.size();
}

namespace {

struct Rect {
  int x0, y0, x1, y1;  // inclusive interior bounds
  int w() const { return x1 - x0 + 1; }
  int h() const { return y1 - y0 + 1; }
};

constexpr int kMinRoom = 15;
constexpr int kDoorWidth = 6;
constexpr int kDoorClearance = 4;
constexpr int kMaxInstances = 26;

std::optional<GridScene> try_layout(Rng& rng, const SceneGenParams& p) {
  GridScene s(p.width, p.height, 0.1);
  for (int x = 0; x < p.width; ++x) {
    s.set_wall({x, 0});
    s.set_wall({x, p.height - 1});
  }
  for (int y = 0; y < p.height; ++y) {
    s.set_wall({0, y});
    s.set_wall({p.width - 1, y});
  }
  std::vector<Rect> rooms = {{1, 1, p.width - 2, p.height - 2}};
  std::vector<Cell> doors;
  while (static_cast<int>(rooms.size()) < p.room_count) {
    auto it = std::max_element(rooms.begin(), rooms.end(),
                               [](const Rect& a, const Rect& b) { return a.w() * a.h() < b.w() * b.h(); });
    const Rect r = *it;
    const bool vertical = r.w() >= r.h();  // wall runs along y
    const int span = vertical ? r.w() : r.h();
    if (span < 2 * kMinRoom + 1) break;
    const int off = uniform_int(rng, kMinRoom, span - kMinRoom - 1);
    const int along = vertical ? r.h() : r.w();
    if (along < kDoorWidth + 2) break;
    const int door = uniform_int(rng, 1, along - kDoorWidth - 1);
    Rect a = r, b = r;
    if (vertical) {
      const int wx = r.x0 + off;
      for (int y = r.y0; y <= r.y1; ++y) {
        if (y - r.y0 >= door && y - r.y0 < door + kDoorWidth) {
          doors.push_back({wx, y});
        } else {
          s.set_wall({wx, y});
        }
      }
      a.x1 = wx - 1;
      b.x0 = wx + 1;
    } else {
      const int wy = r.y0 + off;
      for (int x = r.x0; x <= r.x1; ++x) {
        if (x - r.x0 >= door && x - r.x0 < door + kDoorWidth) {
          doors.push_back({x, wy});
        } else {
          s.set_wall({x, wy});
        }
      }
      a.y1 = wy - 1;
      b.y0 = wy + 1;
    }
    *it = a;
    rooms.push_back(b);
  }

  const double area = static_cast<double>(s.free_cell_count()) * 0.01;
  const int want = std::min(kMaxInstances, static_cast<int>(std::lround(p.object_density * area)));
  std::vector<Rect> placed;
  int next_id = 1;
  for (int attempt = 0; attempt < 400 && next_id <= want; ++attempt) {
    const Rect room = rooms[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(rooms.size()) - 1))];
    const int ow = uniform_int(rng, 3, 5), od = uniform_int(rng, 3, 4);
    const int side = uniform_int(rng, 0, 3);
    Rect o{};
    if (side < 2) {  // against the bottom or top wall
      if (room.w() < ow + 2) continue;
      const int x = uniform_int(rng, room.x0, room.x1 - ow + 1);
      o = side == 0 ? Rect{x, room.y0, x + ow - 1, room.y0 + od - 1} : Rect{x, room.y1 - od + 1, x + ow - 1, room.y1};
    } else {  // against the left or right wall
      if (room.h() < ow + 2) continue;
      const int y = uniform_int(rng, room.y0, room.y1 - ow + 1);
      o = side == 2 ? Rect{room.x0, y, room.x0 + od - 1, y + ow - 1} : Rect{room.x1 - od + 1, y, room.x1, y + ow - 1};
    }
    const bool near_door = std::any_of(doors.begin(), doors.end(), [&](Cell d) {
      return d.x >= o.x0 - kDoorClearance && d.x <= o.x1 + kDoorClearance && d.y >= o.y0 - kDoorClearance &&
             d.y <= o.y1 + kDoorClearance;
    });
    const bool near_object = std::any_of(placed.begin(), placed.end(), [&](const Rect& q) {
      return o.x0 <= q.x1 + 3 && q.x0 <= o.x1 + 3 && o.y0 <= q.y1 + 3 && q.y0 <= o.y1 + 3;
    });
    if (near_door || near_object) continue;
    const int cls = uniform_int(rng, 1, static_cast<int>(kClassNames.size()));
    const int color = uniform_int(rng, 0, static_cast<int>(kColorNames.size()) - 1);
    for (int y = o.y0; y <= o.y1; ++y)
      for (int x = o.x0; x <= o.x1; ++x) s.set_instance_cell({x, y}, next_id, cls);
    if (!free_space_connected(s)) {
      for (int y = o.y0; y <= o.y1; ++y)
        for (int x = o.x0; x <= o.x1; ++x) s.set_free({x, y});
      continue;
    }
    InstanceInfo info;
    info.class_id = cls;
    info.display_name = std::string(kColorNames[static_cast<std::size_t>(color)]) + " " + class_name(cls);
    info.glyph = static_cast<char>('a' + next_id - 1);
    s.add_instance(next_id, info);
    placed.push_back(o);
    ++next_id;
  }
  s.finalize();
  if (!free_space_connected(s)) return std::nullopt;
  return s;
}

}  // namespace

GridScene gen_scene(std::uint64_t seed, const SceneGenParams& params) {
  params.validate();
  for (int attempt = 0; attempt < 20; ++attempt) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(attempt), 0x7363656eULL}));
    if (auto s = try_layout(rng, params)) return std::move(*s);
  }
  throw SceneGenError("no valid layout after 20 attempts");
}

// ---------------------------------------------------------------------------
// Suites

namespace {

Pose random_pose(const GridScene& scene, const std::vector<Cell>& free, Rng& rng) {
  const Cell c = free[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(free.size()) - 1))];
  return scene.center_of(c, Heading(uniform_int(rng, 0, kHeadingCount - 1)));
}

// Keeps start poses off wall surfaces so the first view is informative.
bool roomy(const GridScene& scene, Cell c) {
  for (int dy = -2; dy <= 2; ++dy)
    for (int dx = -2; dx <= 2; ++dx)
      if (!scene.is_free({c.x + dx, c.y + dy})) return false;
  return true;
}

}  // namespace

std::optional<EpisodeSpec> sample_episode(TaskKind task, const GridScene& scene, const std::string& scene_ref,
                                          std::uint64_t seed, const SuiteGenParams& params) {
  Rng rng(seed);
  std::vector<Cell> free;
  for (const auto& c : scene.free_cells())
    if (roomy(scene, c)) free.push_back(c);
  if (free.empty()) return std::nullopt;
  EpisodeSpec spec;
  spec.task = task;
  spec.scene_path = scene_ref;
  spec.seed = seed;
  spec.budget = default_budget(task);
  spec.planner = default_planner(task);
  std::vector<int> ids;
  for (const auto& [id, info] : scene.instances()) ids.push_back(id);

  for (int t = 0; t < params.max_tries; ++t) {
    spec.start = random_pose(scene, free, rng);
    const Cell start = scene.cell_of(spec.start);
    switch (task) {
      case TaskKind::ImageNav: {
        const Pose goal = random_pose(scene, free, rng);
        const auto d = geodesic_distance(scene, start, scene.cell_of(goal));
        if (!d || *d < params.imagenav_min_m || *d > params.imagenav_max_m) continue;
        const EgoView view = raycast_view(scene, goal);
        double mean_depth = 0.0;
        for (const auto& c : view.columns) mean_depth += c.depth_m;
        if (mean_depth / view.width() < 1.0) continue;
        const int landmark = dominant_instance(view);
        if (landmark == 0 || central_visibility(view, landmark) < kLandmarkVisibility) continue;
        spec.goal_pose = goal;
        spec.shortest_length = *d;
        return spec;
      }
      case TaskKind::AR:
      case TaskKind::InfoSeek: {
        if (ids.empty()) return std::nullopt;
        const int target = ids[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))];
        if (central_visibility(raycast_view(scene, spec.start), target) >= kArStartVisibility) continue;
        const auto d = answer_viewpoint_distance(scene, start, target);
        const double limit = task == TaskKind::AR ? params.ar_max_viewpoint_m : params.infoseek_max_viewpoint_m;
        if (!d || *d > limit) continue;
        spec.shortest_length = *d;
        if (task == TaskKind::AR) {
          spec.target_instance = target;
          spec.labels.assign(kClassNames.begin(), kClassNames.end());
        } else {
          spec.question = {"color", target};
          spec.answer = color_of(scene.find_instance(target)->display_name);
        }
        return spec;
      }
    }
  }
  return std::nullopt;
}

GeneratedSuite gen_suite(const std::vector<TaskKind>& tasks, int scene_count, int episodes_per_scene,
                         std::uint64_t seed, const std::string& dir, const SuiteGenParams& params) {
  if (scene_count < 0 || episodes_per_scene < 0) throw std::invalid_argument("counts must be non-negative");
  GeneratedSuite out;
  fs::create_directories(fs::path(dir) / "scenes");
  for (int s = 0; s < scene_count; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "scenes/scene_%03d.txt", s);
    const GridScene scene = gen_scene(derive_seed({seed, static_cast<std::uint64_t>(s)}), params.scene);
    save_scene(scene, (fs::path(dir) / name).string());
    out.scene_files.push_back(name);
    for (TaskKind task : tasks) {
      for (int k = 0; k < episodes_per_scene; ++k) {
        const auto ep_seed =
            derive_seed({seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(k)});
        auto spec = sample_episode(task, scene, name, ep_seed, params);
        if (!spec) {
          out.warnings.push_back(std::string(name) + ": no valid " + to_string(task) + " episode, skipped");
          continue;
        }
        char id[64];
        std::snprintf(id, sizeof id, "%s-%03d-%02d", to_string(task).c_str(), s, k);
        spec->id = id;
        validate_spec(*spec, scene);
        out.specs.push_back(std::move(*spec));
      }
    }
  }
  write_suite(out.specs, (fs::path(dir) / "suite.jsonl").string());
  return out;
}

GeneratedSuite gen_standard_suite(std::uint64_t seed, const std::string& dir) {
  return gen_suite({TaskKind::ImageNav, TaskKind::AR}, 10, 5, seed, dir);
}

LoadedSuite load_suite(const std::string& suite_path) {
  LoadedSuite out;
  out.specs = read_suite(suite_path);
  const fs::path base = fs::path(suite_path).parent_path();
  for (const auto& spec : out.specs) {
    auto it = out.scenes.find(spec.scene_path);
    if (it == out.scenes.end()) {
      const fs::path p = fs::path(spec.scene_path).is_absolute() ? fs::path(spec.scene_path) : base / spec.scene_path;
      it = out.scenes.emplace(spec.scene_path, load_scene(p.string())).first;
    }
    validate_spec(spec, it->second);
  }
  return out;
}

}  // namespace wmbench
