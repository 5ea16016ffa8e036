#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wmbench/render.hpp"
#include "wmbench/rng.hpp"
#include "wmbench/world_model.hpp"

namespace wmbench {

enum class TaskKind { ImageNav, AR, InfoSeek };
std::string to_string(TaskKind k);
TaskKind task_kind_from_string(const std::string& s);

enum class ProposalPolicy { Heuristic, GoalDirected };

struct PlannerConfig {
  int M = 1;
  int L = 1;
  int commit_len = 1;
  ProposalPolicy proposal = ProposalPolicy::Heuristic;
  /// Score only the last predicted frame of each rollout.
  bool terminal_only = false;
  void validate() const;
};

inline constexpr double kStopConfidence = 0.95;
inline constexpr double kArrivalBonusPerFrame = 0.01;
inline constexpr int kMaxSameTurns = 4;
inline constexpr int kProposalRetries = 10;

struct PlanDecision {
  ActionSequence seq;
};
struct AnswerDecision {
  std::string label;
  double confidence = 0.0;
};
using Decision = std::variant<PlanDecision, AnswerDecision>;

struct Candidate {
  ActionSequence seq;
  std::optional<PredictedRollout> rollout;
  std::optional<double> score;
};

/// What the scorer compares rollouts against.
struct TaskGoal {
  TaskKind kind = TaskKind::ImageNav;
  Panorama goal_pano;     // ImageNav
  EgoView goal_ego;       // ImageNav
  int target_instance = 0;  // AR / InfoSeek
};

struct AnswerResult {
  std::string label;
  double confidence = 0.0;
  double visibility = 0.0;
};

/// Task-specific answerer over a set of (real or predicted) frames.
using Answerer = std::function<AnswerResult(std::span<const Observation>)>;

/// The inverse of a primitive, if it has one.
std::optional<ActionPrimitive> inverse_of(ActionPrimitive a);

/// Admissible next primitives after `history` under the heuristic rules: never
/// the inverse of the last action, and no fifth consecutive turn in one direction.
std::vector<ActionPrimitive> admissible_next(std::span<const ActionPrimitive> history);
bool satisfies_heuristic_rules(std::span<const ActionPrimitive> history, std::span<const ActionPrimitive> seq);

ActionPrimitive heuristic_next(std::span<const ActionPrimitive> history, Rng& rng);

struct ProposalContext {
  std::span<const ActionPrimitive> history;
  Pose pose;
  /// World point the goal-directed candidate steers toward, when known.
  std::optional<std::pair<double, double>> goal_point;
  /// World heading the goal-directed candidate turns to, when known.
  std::optional<Heading> goal_heading;
};

/// Greedy plan: turn toward the goal (within the heuristic rules), then advance.
ActionSequence greedy_sequence(const ProposalContext& ctx, int L);

std::vector<ActionSequence> propose(ProposalPolicy policy, const ProposalContext& ctx, int M, int L, Rng& rng);

double score(const Candidate& c, const TaskGoal& goal, bool terminal_only = false);

/// Argmax with ties resolved toward the lowest index.
std::size_t select(std::span<const Candidate> candidates);

/// Episode-local planner memory.
struct PlannerState {
  std::vector<ActionPrimitive> history;
  std::optional<std::pair<double, double>> goal_point;
  std::optional<Heading> goal_heading;
  std::uint64_t episode_seed = 0;
  int step = 0;
  int wm_inferences = 0;
  int fallbacks = 0;
  Rng rng;
};

struct StepOutcome {
  Decision decision;
  std::vector<double> scores;  // empty without a world model
  std::optional<std::size_t> winner;
  std::vector<Observation> evidence;  // frames the answerer saw
  AnswerResult answer;                // best answer from this step's evidence
  bool fallback = false;
  std::string fallback_reason;
};

/// One proposal / simulation / revision cycle. `real_obs` is the agent's
/// current panorama; `pose_estimate` its pose sensor reading. With no model
/// the first proposal is committed.
StepOutcome plan_step(const PlannerConfig& config, PlannerState& state, const Panorama& real_obs,
                      const Pose& pose_estimate, const TaskGoal& goal, WorldModel* model,
                      const Answerer* answerer);

}  // namespace wmbench
