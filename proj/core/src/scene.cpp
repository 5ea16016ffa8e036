#include "wmbench/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace wmbench {

// ---------------------------------------------------------------------------
// Primitive types

Heading Heading::from_degrees(double deg) {
  const double steps = deg / kTurnStepDeg;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9) {
    throw std::invalid_argument("heading is not a multiple of 22.5 degrees");
  }
  return Heading(static_cast<int>(rounded));
}

double Heading::radians() const { return degrees() * std::numbers::pi / 180.0; }

std::string_view to_string(ActionPrimitive a) {
  switch (a) {
    case ActionPrimitive::Forward: return "Forward";
    case ActionPrimitive::TurnLeft: return "TurnLeft";
    case ActionPrimitive::TurnRight: return "TurnRight";
    case ActionPrimitive::Stop: return "Stop";
    case ActionPrimitive::Null: return "Null";
  }
  return "?";
}

std::optional<ActionPrimitive> action_from_string(std::string_view s) {
  for (auto a : {ActionPrimitive::Forward, ActionPrimitive::TurnLeft, ActionPrimitive::TurnRight,
                 ActionPrimitive::Stop, ActionPrimitive::Null}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

bool ActionSequence::is_valid(std::span<const ActionPrimitive> items) {
  if (items.empty()) return false;
  for (std::size_t i = 0; i + 1 < items.size(); ++i) {
    if (items[i] == ActionPrimitive::Stop) return false;
  }
  return true;
}

ActionSequence::ActionSequence(std::vector<ActionPrimitive> items) : items_(std::move(items)) {
  if (!is_valid(items_)) throw std::invalid_argument("invalid action sequence");
}

ActionSequence ActionSequence::truncated(std::size_t n) const {
  n = std::clamp<std::size_t>(n, 1, items_.size());
  return ActionSequence(std::vector<ActionPrimitive>(items_.begin(), items_.begin() + n));
}

SceneError::SceneError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

// ---------------------------------------------------------------------------
// GridScene

GridScene::GridScene(int width, int height, double cell_size_m)
    : width_(width), height_(height), cell_size_m_(cell_size_m) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("scene dimensions must be positive");
  if (!(cell_size_m > 0.0)) throw std::invalid_argument("cell size must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  occupancy_.assign(n, Occupancy::Free);
  class_id_.assign(n, 0);
  instance_id_.assign(n, 0);
}

const InstanceInfo* GridScene::find_instance(int id) const {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : &it->second;
}

Cell GridScene::cell_of(double x, double y) const {
  return {static_cast<int>(std::floor(x / cell_size_m_)),
          static_cast<int>(std::floor(y / cell_size_m_))};
}

Pose GridScene::center_of(Cell c, Heading h) const {
  return {(c.x + 0.5) * cell_size_m_, (c.y + 0.5) * cell_size_m_, h};
}

std::size_t GridScene::free_cell_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), Occupancy::Free));
}

std::vector<Cell> GridScene::free_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (occupancy_[index({x, y})] == Occupancy::Free) out.push_back({x, y});
  return out;
}

void GridScene::set_wall(Cell c) {
  occupancy_[index(c)] = Occupancy::Wall;
  class_id_[index(c)] = 0;
  instance_id_[index(c)] = 0;
}

void GridScene::set_free(Cell c) {
  occupancy_[index(c)] = Occupancy::Free;
  class_id_[index(c)] = 0;
  instance_id_[index(c)] = 0;
}

void GridScene::set_instance_cell(Cell c, int instance_id, int class_id) {
  occupancy_[index(c)] = Occupancy::Wall;
  class_id_[index(c)] = class_id;
  instance_id_[index(c)] = instance_id;
}

void GridScene::add_instance(int instance_id, InstanceInfo info) {
  instances_[instance_id] = std::move(info);
}

void GridScene::finalize() {
  struct Acc {
    long sx = 0, sy = 0, n = 0;
  };
  std::map<int, Acc> acc;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const int id = instance_id_[index({x, y})];
      if (id == 0) continue;
      auto it = instances_.find(id);
      if (it == instances_.end()) {
        throw SceneError(0, "instance " + std::to_string(id) + " present in grid but not declared");
      }
      if (class_id_[index({x, y})] == 0) throw SceneError(0, "instance cell with background class");
      auto& a = acc[id];
      a.sx += x;
      a.sy += y;
      ++a.n;
    }
  }
  for (auto& [id, info] : instances_) {
    auto it = acc.find(id);
    if (it == acc.end()) {
      throw SceneError(0, "instance " + std::to_string(id) + " declared but absent from grid");
    }
    const auto& a = it->second;
    // Centroid cell: the member cell closest to the mean position.
    const double mx = static_cast<double>(a.sx) / a.n;
    const double my = static_cast<double>(a.sy) / a.n;
    double best = std::numeric_limits<double>::max();
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (instance_id_[index({x, y})] != id) continue;
        const double d = (x - mx) * (x - mx) + (y - my) * (y - my);
        if (d < best) {
          best = d;
          info.centroid = {x, y};
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Scene file

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

GridScene parse_scene_file(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw SceneError(1, "missing GRID header");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find('\t') != std::string::npos) throw SceneError(static_cast<int>(i + 1), "tab character");
  }

  std::istringstream header(lines[0]);
  std::string tag;
  int width = 0, height = 0;
  double cell = 0.0;
  if (!(header >> tag >> width >> height >> cell) || tag != "GRID" || width <= 0 || height <= 0 ||
      !(cell > 0.0)) {
    throw SceneError(1, "malformed header, expected 'GRID <width> <height> <cell_size_m>'");
  }
  std::string trailing;
  if (header >> trailing) throw SceneError(1, "malformed header, trailing tokens");
  if (lines.size() < static_cast<std::size_t>(height) + 1) {
    throw SceneError(static_cast<int>(lines.size()) + 1, "grid has fewer rows than declared height");
  }

  GridScene scene(width, height, cell);
  std::map<char, std::vector<Cell>> glyph_cells;
  std::map<char, int> glyph_line;
  for (int y = 0; y < height; ++y) {
    const auto& row = lines[static_cast<std::size_t>(y) + 1];
    const int line_no = y + 2;
    if (static_cast<int>(row.size()) != width) {
      throw SceneError(line_no, "ragged grid row: expected " + std::to_string(width) + " glyphs, got " +
                                    std::to_string(row.size()));
    }
    for (int x = 0; x < width; ++x) {
      const char g = row[static_cast<std::size_t>(x)];
      if (g == '#') {
        scene.set_wall({x, y});
      } else if (g == '.') {
        scene.set_free({x, y});
      } else if (g >= 'a' && g <= 'z') {
        glyph_cells[g].push_back({x, y});
        glyph_line.try_emplace(g, line_no);
      } else {
        throw SceneError(line_no, std::string("unknown glyph '") + g + "'");
      }
    }
  }

  std::map<char, int> glyph_instance;
  for (std::size_t i = static_cast<std::size_t>(height) + 1; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto& line = lines[i];
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string inst, glyph;
    int id = 0, cls = 0;
    if (!(in >> inst >> glyph >> id >> cls) || inst != "INST" || glyph.size() != 1 || glyph[0] < 'a' ||
        glyph[0] > 'z' || id <= 0 || cls <= 0) {
      throw SceneError(line_no, "malformed INST line, expected 'INST <glyph> <id> <class_id> <name>'");
    }
    std::string name;
    std::getline(in >> std::ws, name);
    if (name.empty()) throw SceneError(line_no, "INST line missing display name");
    const char g = glyph[0];
    if (glyph_instance.contains(g)) throw SceneError(line_no, "glyph bound twice");
    if (scene.find_instance(id)) throw SceneError(line_no, "duplicate instance id");
    auto cells = glyph_cells.find(g);
    if (cells == glyph_cells.end()) {
      throw SceneError(line_no, std::string("instance glyph '") + g + "' does not appear in the grid");
    }
    glyph_instance[g] = id;
    for (const auto& c : cells->second) scene.set_instance_cell(c, id, cls);
    scene.add_instance(id, InstanceInfo{cls, name, {}, g});
  }
  for (const auto& [g, cells] : glyph_cells) {
    if (!glyph_instance.contains(g)) {
      throw SceneError(glyph_line[g], std::string("glyph '") + g + "' has no INST binding");
    }
  }
  scene.finalize();
  return scene;
}

std::string serialize_scene(const GridScene& scene) {
  std::ostringstream out;
  out.precision(17);
  out << "GRID " << scene.width() << ' ' << scene.height() << ' ' << scene.cell_size() << '\n';
  for (int y = 0; y < scene.height(); ++y) {
    std::string row(static_cast<std::size_t>(scene.width()), '.');
    for (int x = 0; x < scene.width(); ++x) {
      const Cell c{x, y};
      const int id = scene.instance_at(c);
      if (id != 0) {
        row[static_cast<std::size_t>(x)] = scene.find_instance(id)->glyph;
      } else if (scene.occupancy(c) == Occupancy::Wall) {
        row[static_cast<std::size_t>(x)] = '#';
      }
    }
    out << row << '\n';
  }
  for (const auto& [id, info] : scene.instances()) {
    out << "INST " << info.glyph << ' ' << id << ' ' << info.class_id << ' ' << info.display_name << '\n';
  }
  return out.str();
}

GridScene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scene_file(buf.str());
  } catch (const SceneError& e) {
    throw SceneError(e.line(), path + ": " + e.what());
  }
}

void save_scene(const GridScene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file " + path);
  out << serialize_scene(scene);
}

// ---------------------------------------------------------------------------
// Kinematics

bool segment_is_free(const GridScene& scene, double x0, double y0, double x1, double y1) {
  const double cs = scene.cell_size();
  Cell c = scene.cell_of(x0, y0);
  const Cell end = scene.cell_of(x1, y1);
  if (!scene.is_free(c)) return false;
  const double dx = x1 - x0, dy = y1 - y0;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x == 0 ? inf : ((c.x + (step_x > 0 ? 1 : 0)) * cs - x0) / dx;
  double t_max_y = step_y == 0 ? inf : ((c.y + (step_y > 0 ? 1 : 0)) * cs - y0) / dy;
  const double t_delta_x = step_x == 0 ? inf : cs / std::abs(dx);
  const double t_delta_y = step_y == 0 ? inf : cs / std::abs(dy);
  int guard = 4 * (std::abs(end.x - c.x) + std::abs(end.y - c.y)) + 4;
  while (c != end && guard-- > 0) {
    if (t_max_x < t_max_y) {
      c.x += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      c.y += step_y;
      t_max_y += t_delta_y;
    } else {
      // Passing exactly through a cell corner touches both neighbours.
      if (!scene.is_free({c.x + step_x, c.y}) || !scene.is_free({c.x, c.y + step_y})) return false;
      c.x += step_x;
      c.y += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    if (!scene.is_free(c)) return false;
  }
  return c == end;
}

namespace {

// Unit direction for each heading, with exact values on the axes and
// diagonals so that axis-aligned motion has no rounding drift.
struct DirTable {
  double dx[kHeadingCount];
  double dy[kHeadingCount];
  DirTable() {
    for (int i = 0; i < kHeadingCount; ++i) {
      const double r = i * kTurnStepDeg * std::numbers::pi / 180.0;
      dx[i] = std::cos(r);
      dy[i] = std::sin(r);
    }
    const double s = std::sqrt(0.5);
    const double axis[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const double diag[4][2] = {{s, s}, {-s, s}, {-s, -s}, {s, -s}};
    for (int k = 0; k < 4; ++k) {
      dx[4 * k] = axis[k][0];
      dy[4 * k] = axis[k][1];
      dx[4 * k + 2] = diag[k][0];
      dy[4 * k + 2] = diag[k][1];
    }
  }
};

const DirTable& dirs() {
  static const DirTable table;
  return table;
}

}  // namespace

Pose apply_action_unobstructed(const Pose& pose, ActionPrimitive a) {
  switch (a) {
    case ActionPrimitive::Forward: {
      const auto& d = dirs();
      const int h = pose.heading.index();
      return {pose.x + kForwardStepM * d.dx[h], pose.y + kForwardStepM * d.dy[h], pose.heading};
    }
    case ActionPrimitive::TurnLeft: return {pose.x, pose.y, pose.heading.turned(1)};
    case ActionPrimitive::TurnRight: return {pose.x, pose.y, pose.heading.turned(-1)};
    case ActionPrimitive::Stop:
    case ActionPrimitive::Null: return pose;
  }
  return pose;
}

Pose apply_action(const GridScene& scene, const Pose& pose, ActionPrimitive a) {
  if (a != ActionPrimitive::Forward) return apply_action_unobstructed(pose, a);
  const Pose next = apply_action_unobstructed(pose, a);
  return segment_is_free(scene, pose.x, pose.y, next.x, next.y) ? next : pose;
}

// ---------------------------------------------------------------------------
// Geodesics

namespace {

struct Step {
  int dx, dy;
  bool diagonal;
};
constexpr Step kSteps[8] = {{1, 0, false},  {-1, 0, false}, {0, 1, false},  {0, -1, false},
                            {1, 1, true},   {1, -1, true},  {-1, 1, true},  {-1, -1, true}};

}  // namespace

GeodesicField::GeodesicField(const GridScene& scene, Cell source) : scene_(&scene), source_(source) {
  const auto n = static_cast<std::size_t>(scene.width()) * scene.height();
  dist_.assign(n, std::numeric_limits<double>::infinity());
  parent_.assign(n, -1);
  if (!scene.is_free(source)) return;
  const double cs = scene.cell_size();
  const double diag = cs * std::numbers::sqrt2;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist_[scene.index(source)] = 0.0;
  open.push({0.0, static_cast<int>(scene.index(source))});
  const int w = scene.width();
  while (!open.empty()) {
    auto [d, idx] = open.top();
    open.pop();
    if (d > dist_[static_cast<std::size_t>(idx)]) continue;
    const Cell c{idx % w, idx / w};
    for (const auto& s : kSteps) {
      const Cell nb{c.x + s.dx, c.y + s.dy};
      if (!scene.is_free(nb)) continue;
      if (s.diagonal && (!scene.is_free({c.x + s.dx, c.y}) || !scene.is_free({c.x, c.y + s.dy}))) continue;
      const double nd = d + (s.diagonal ? diag : cs);
      const auto ni = scene.index(nb);
      if (nd < dist_[ni]) {
        dist_[ni] = nd;
        parent_[ni] = idx;
        open.push({nd, static_cast<int>(ni)});
      }
    }
  }
}

std::optional<double> GeodesicField::distance(Cell c) const {
  if (!scene_->in_bounds(c)) return std::nullopt;
  const double d = dist_[scene_->index(c)];
  if (std::isinf(d)) return std::nullopt;
  return d;
}

std::vector<Cell> GeodesicField::path_to(Cell target) const {
  if (!distance(target)) return {};
  std::vector<Cell> path;
  int idx = static_cast<int>(scene_->index(target));
  const int w = scene_->width();
  while (idx >= 0) {
    path.push_back({idx % w, idx / w});
    idx = parent_[static_cast<std::size_t>(idx)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<double> geodesic_distance(const GridScene& scene, Cell a, Cell b) {
  if (!scene.is_free(a) || !scene.is_free(b)) return std::nullopt;
  if (a == b) return 0.0;
  return GeodesicField(scene, a).distance(b);
}

// ---------------------------------------------------------------------------
// Action realization: A* over (position, heading) states reached by the
// primitives themselves, so the result is collision-free by construction.

namespace {

constexpr double kTurnCost = 0.02;
constexpr double kStateQuantum = 0.02;

struct SearchNode {
  Pose pose;
  double g = 0.0;
  int parent = -1;
  ActionPrimitive action = ActionPrimitive::Null;
};

}  // namespace

ShortestPath shortest_path(const GridScene& scene, const Pose& start, Cell goal) {
  const Cell start_cell = scene.cell_of(start);
  if (!scene.is_free(start_cell) || !scene.is_free(goal)) throw UnreachableError("endpoint not free");
  const GeodesicField from_start(scene, start_cell);
  const auto geo = from_start.distance(goal);
  if (!geo) throw UnreachableError("goal unreachable from start");

  ShortestPath out;
  out.cells = from_start.path_to(goal);
  out.geodesic_m = *geo;
  out.poses.push_back(start);

  const double cs = scene.cell_size();
  const Pose goal_center = scene.center_of(goal);
  const double tolerance = cs;
  auto at_goal = [&](const Pose& p) { return std::hypot(p.x - goal_center.x, p.y - goal_center.y) <= tolerance; };
  if (at_goal(start)) return out;

  const GeodesicField to_goal(scene, goal);
  const double slack = tolerance + cs * std::numbers::sqrt2;
  auto heuristic = [&](const Pose& p) {
    const auto d = to_goal.distance(scene.cell_of(p));
    return d ? std::max(0.0, *d - slack) : std::numeric_limits<double>::infinity();
  };
  auto key_of = [&](const Pose& p) {
    const auto qx = static_cast<std::int64_t>(std::llround(p.x / kStateQuantum));
    const auto qy = static_cast<std::int64_t>(std::llround(p.y / kStateQuantum));
    return (qx * 1000003 + qy) * kHeadingCount + p.heading.index();
  };

  std::vector<SearchNode> nodes;
  std::unordered_map<std::int64_t, double> best_g;
  using Item = std::tuple<double, double, int>;  // f, -g tie-break, node
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  nodes.push_back({start, 0.0, -1, ActionPrimitive::Null});
  best_g[key_of(start)] = 0.0;
  open.push({heuristic(start), 0.0, 0});

  const std::size_t budget = 400000;
  int found = -1;
  int closest = 0;
  double closest_d = std::numeric_limits<double>::infinity();
  while (!open.empty() && nodes.size() < budget) {
    const auto [f, neg_g, id] = open.top();
    open.pop();
    const SearchNode node = nodes[static_cast<std::size_t>(id)];
    if (node.g > best_g[key_of(node.pose)] + 1e-12) continue;
    const double dg = std::hypot(node.pose.x - goal_center.x, node.pose.y - goal_center.y);
    if (dg < closest_d) {
      closest_d = dg;
      closest = id;
    }
    if (at_goal(node.pose)) {
      found = id;
      break;
    }
    for (auto a : {ActionPrimitive::Forward, ActionPrimitive::TurnLeft, ActionPrimitive::TurnRight}) {
      const Pose next = apply_action(scene, node.pose, a);
      if (next == node.pose) continue;
      const double g = node.g + (a == ActionPrimitive::Forward ? kForwardStepM : kTurnCost);
      const auto key = key_of(next);
      auto it = best_g.find(key);
      if (it != best_g.end() && it->second <= g + 1e-12) continue;
      best_g[key] = g;
      nodes.push_back({next, g, id, a});
      open.push({g + heuristic(next), -g, static_cast<int>(nodes.size() - 1)});
    }
  }
  int cur = found >= 0 ? found : closest;
  std::vector<int> chain;
  while (cur > 0) {
    chain.push_back(cur);
    cur = nodes[static_cast<std::size_t>(cur)].parent;
  }
  std::reverse(chain.begin(), chain.end());
  for (int id : chain) {
    out.actions.push_back(nodes[static_cast<std::size_t>(id)].action);
    out.poses.push_back(nodes[static_cast<std::size_t>(id)].pose);
  }
  return out;
}

}  // namespace wmbench
