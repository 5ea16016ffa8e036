#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wmbench {

inline constexpr double kForwardStepM = 0.2;
inline constexpr double kTurnStepDeg = 22.5;
inline constexpr int kHeadingCount = 16;

/// Grid cell coordinate; x is the column, y is the row.
struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Heading quantized to multiples of 22.5 degrees, counter-clockwise from +x.
class Heading {
 public:
  constexpr Heading() = default;
  constexpr explicit Heading(int index)
      : index_(((index % kHeadingCount) + kHeadingCount) % kHeadingCount) {}

  static Heading from_degrees(double deg);  // throws if not a multiple of 22.5

  constexpr int index() const { return index_; }
  constexpr double degrees() const { return index_ * kTurnStepDeg; }
  double radians() const;
  constexpr Heading turned(int steps) const { return Heading(index_ + steps); }

  friend constexpr bool operator==(Heading, Heading) = default;

 private:
  int index_ = 0;
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  Heading heading;
  friend bool operator==(const Pose&, const Pose&) = default;
};

enum class ActionPrimitive : std::uint8_t { Forward, TurnLeft, TurnRight, Stop, Null };

std::string_view to_string(ActionPrimitive a);
std::optional<ActionPrimitive> action_from_string(std::string_view s);

/// Non-empty list of primitives with nothing after a Stop.
class ActionSequence {
 public:
  ActionSequence() = default;
  explicit ActionSequence(std::vector<ActionPrimitive> items);

  static bool is_valid(std::span<const ActionPrimitive> items);

  const std::vector<ActionPrimitive>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  ActionPrimitive operator[](std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// First `n` primitives (n clamped to size, minimum 1).
  ActionSequence truncated(std::size_t n) const;

  friend bool operator==(const ActionSequence&, const ActionSequence&) = default;

 private:
  std::vector<ActionPrimitive> items_;
};

enum class Occupancy : std::uint8_t { Free, Wall };

struct InstanceInfo {
  int class_id = 0;
  std::string display_name;
  Cell centroid;
  char glyph = 0;
  friend bool operator==(const InstanceInfo&, const InstanceInfo&) = default;
};

class SceneError : public std::runtime_error {
 public:
  SceneError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Occupancy + semantic grid world. Immutable once built; instance cells block
/// motion and rays like walls but carry a non-zero class.
class GridScene {
 public:
  GridScene() = default;
  GridScene(int width, int height, double cell_size_m);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_m_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool is_free(Cell c) const { return in_bounds(c) && occupancy_[index(c)] == Occupancy::Free; }
  Occupancy occupancy(Cell c) const { return occupancy_[index(c)]; }
  int class_at(Cell c) const { return class_id_[index(c)]; }
  int instance_at(Cell c) const { return instance_id_[index(c)]; }
  const std::map<int, InstanceInfo>& instances() const { return instances_; }
  const InstanceInfo* find_instance(int id) const;

  Cell cell_of(double x, double y) const;
  Cell cell_of(const Pose& p) const { return cell_of(p.x, p.y); }
  /// Metric centre of a cell.
  Pose center_of(Cell c, Heading h = Heading{}) const;

  std::size_t free_cell_count() const;
  std::vector<Cell> free_cells() const;

  // Mutators used by parsers and generators; call validate() afterwards.
  void set_wall(Cell c);
  void set_free(Cell c);
  void set_instance_cell(Cell c, int instance_id, int class_id);
  void add_instance(int instance_id, InstanceInfo info);
  /// Recomputes instance centroids from the grid and checks all invariants.
  void finalize();

  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  friend bool operator==(const GridScene&, const GridScene&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_m_ = 0.1;
  std::vector<Occupancy> occupancy_;
  std::vector<int> class_id_;
  std::vector<int> instance_id_;
  std::map<int, InstanceInfo> instances_;
};

GridScene parse_scene_file(std::string_view text);
std::string serialize_scene(const GridScene& scene);
GridScene load_scene(const std::string& path);
void save_scene(const GridScene& scene, const std::string& path);

/// Kinematics of one primitive. Forward is a no-op when any swept cell is not
/// free.
Pose apply_action(const GridScene& scene, const Pose& pose, ActionPrimitive a);

/// Kinematics ignoring obstacles.
Pose apply_action_unobstructed(const Pose& pose, ActionPrimitive a);

bool segment_is_free(const GridScene& scene, double x0, double y0, double x1, double y1);

inline constexpr double kUnreachable = -1.0;

/// Dijkstra over 8-connected free cells. Diagonal moves may not cut wall
/// corners.
class GeodesicField {
 public:
  GeodesicField(const GridScene& scene, Cell source);
  /// Distance in meters, or nullopt when unreachable.
  std::optional<double> distance(Cell c) const;
  Cell source() const { return source_; }
  /// Cell sequence from source to `target` (inclusive), empty if unreachable.
  std::vector<Cell> path_to(Cell target) const;

 private:
  const GridScene* scene_;
  Cell source_;
  std::vector<double> dist_;
  std::vector<int> parent_;
};

std::optional<double> geodesic_distance(const GridScene& scene, Cell a, Cell b);

struct ShortestPath {
  std::vector<Cell> cells;            // geodesic cell path a..b
  double geodesic_m = 0.0;            // cost of `cells`
  std::vector<Pose> poses;            // start pose followed by the pose after each action
  std::vector<ActionPrimitive> actions;
};

class UnreachableError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Geodesic cell path plus a primitive sequence that realizes it from `start`.
/// Replaying `actions` with apply_action visits `poses` and ends within one
/// cell size of the centre of `goal`.
ShortestPath shortest_path(const GridScene& scene, const Pose& start, Cell goal);

}  // namespace wmbench
