#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/planner.hpp"
#include "wmbench/scene.hpp"
#include "wmbench/world_model.hpp"

namespace wmbench {

inline constexpr double kGoalRadiusM = 0.5;
inline constexpr double kFullVisibility = 0.15;
inline constexpr int kArBudget = 10;
inline constexpr int kImageNavBudget = 20;
inline constexpr int kInfoSeekBudget = 250;

/// Structured question: "what is the <relation> of <anchor>?".
struct Question {
  std::string relation = "color";
  int anchor_instance = 0;
};

struct EpisodeSpec {
  std::string id;
  TaskKind task = TaskKind::ImageNav;
  std::string scene_path;
  Pose start;
  std::uint64_t seed = 0;
  Pose goal_pose;                    // ImageNav
  int target_instance = 0;           // AR
  std::vector<std::string> labels;   // AR candidate labels
  Question question;                 // InfoSeek
  std::string answer;                // InfoSeek ground truth
  int budget = 0;                    // decision steps (AR, ImageNav) or primitives (InfoSeek)
  PlannerConfig planner;
  double shortest_length = 0.0;      // L*, meters
};

PlannerConfig default_planner(TaskKind task);
int default_budget(TaskKind task);

class SpecError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Checks start/goal validity, reachability, target existence and budgets.
void validate_spec(const EpisodeSpec& spec, const GridScene& scene);

nlohmann::json to_json(const EpisodeSpec& spec);
EpisodeSpec spec_from_json(const nlohmann::json& j);
std::vector<EpisodeSpec> read_suite(const std::string& path);
void write_suite(const std::vector<EpisodeSpec>& specs, const std::string& path);

struct TraceStep {
  int decision_step = 0;
  bool answered = false;
  std::string label;
  std::vector<ActionPrimitive> executed;
  Pose pose_after;
  std::vector<double> scores;
  int winner = -1;
  bool fallback = false;
};

struct EpisodeResult {
  std::string episode_id;
  TaskKind task = TaskKind::ImageNav;
  bool success = false;
  std::optional<std::string> answer;
  std::optional<int> answer_score;  // InfoSeek sigma in {1, 5}
  int decision_steps = 0;
  int steps_executed = 0;
  double path_length = 0.0;
  double shortest_length = 0.0;
  int wm_inference_count = 0;
  int fallback_count = 0;
  Pose start;
  std::vector<TraceStep> trace;
};

nlohmann::json to_json(const EpisodeResult& r);
EpisodeResult result_from_json(const nlohmann::json& j);

/// The simulated agent: scene plus true pose.
class Environment {
 public:
  Environment(const GridScene& scene, const Pose& start);
  const GridScene& scene() const { return *scene_; }
  const Pose& pose() const { return pose_; }
  EnvironmentView view() const { return {scene_, &pose_}; }
  /// Executes a primitive and returns the distance actually travelled.
  double step(ActionPrimitive a);
  Panorama observe() const;

 private:
  const GridScene* scene_;
  Pose pose_;
};

/// Visibility-based recognizer: confidence = min(1, v / 0.15) where v is the
/// best fraction of central columns showing the target.
AnswerResult ar_answer(std::span<const Observation> views, int target_instance,
                       std::span<const std::string> labels);

/// Answers a question about `anchor` once it is visible; the answer is the
/// queried attribute looked up for the recognized instance.
AnswerResult infoseek_answer(std::span<const Observation> views, const GridScene& scene, const Question& q);

/// Minimum geodesic distance from `start` to a cell from which `instance` can
/// be confidently recognized at some heading; nullopt if none is reachable.
std::optional<double> answer_viewpoint_distance(const GridScene& scene, Cell start, int instance);

/// Instance covering the most columns of a view; 0 when none is visible.
int dominant_instance(const Observation& view);

EpisodeResult run_imagenav(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                           std::uint64_t seed);
EpisodeResult run_ar(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                     std::uint64_t seed);
EpisodeResult run_infoseek(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                           std::uint64_t seed);
EpisodeResult run_episode(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                          std::uint64_t seed);

/// Replays a trace and checks budgets, path length and pose consistency.
/// Returns an empty string when valid, otherwise the first violation.
std::string validate_trace(const EpisodeSpec& spec, const GridScene& scene, const EpisodeResult& r);

}  // namespace wmbench
