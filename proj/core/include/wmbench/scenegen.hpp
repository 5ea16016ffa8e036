#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmbench/scene.hpp"
#include "wmbench/tasks.hpp"

namespace wmbench {

struct SceneGenParams {
  int width = 80;   // cells
  int height = 60;  // cells
  int room_count = 4;
  double object_density = 0.3;  // objects per m^2 of floor, capped at 26
  void validate() const;
};

class SceneGenError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rooms split by walls with doorways, objects placed against walls. The free
/// space is a single 4-connected component.
GridScene gen_scene(std::uint64_t seed, const SceneGenParams& params = {});

/// True when all free cells form one 4-connected component.
bool free_space_connected(const GridScene& scene);

/// AR and InfoSeek starts must show the target in less than this fraction of
/// the central field of view.
inline constexpr double kArStartVisibility = 0.05;

/// ImageNav goal images must show some object over at least this fraction
/// of their columns.
inline constexpr double kLandmarkVisibility = 0.0625;

struct SuiteGenParams {
  SceneGenParams scene;
  double imagenav_min_m = 2.0;
  double imagenav_max_m = 3.0;
  double ar_max_viewpoint_m = 3.0;
  double infoseek_max_viewpoint_m = 12.0;
  int max_tries = 400;
};

struct GeneratedSuite {
  std::vector<EpisodeSpec> specs;
  std::vector<std::string> scene_files;  // relative to the suite directory
  std::vector<std::string> warnings;
};

/// Samples one episode of `task` in `scene`; nullopt after `max_tries` misses.
std::optional<EpisodeSpec> sample_episode(TaskKind task, const GridScene& scene, const std::string& scene_ref,
                                          std::uint64_t seed, const SuiteGenParams& params);

/// Writes scenes under `dir`/scenes and the suite to `dir`/suite.jsonl.
/// `tasks` lists the tasks emitted per scene, `episodes_per_scene` of each.
GeneratedSuite gen_suite(const std::vector<TaskKind>& tasks, int scene_count, int episodes_per_scene,
                         std::uint64_t seed, const std::string& dir, const SuiteGenParams& params = {});

/// The evaluation suite used by the planning and scaling studies:
/// 10 scenes x (5 ImageNav + 5 AR).
GeneratedSuite gen_standard_suite(std::uint64_t seed, const std::string& dir);

/// Reads a suite file and loads each referenced scene (paths resolve against
/// the suite file's directory), validating every spec.
struct LoadedSuite {
  std::vector<EpisodeSpec> specs;
  std::map<std::string, GridScene> scenes;  // keyed by scene_path as written
};
LoadedSuite load_suite(const std::string& suite_path);

}  // namespace wmbench
