#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmbench/action_api.hpp"
#include "wmbench/render.hpp"

namespace wmbench {

class CountPriorStats;

enum class ModelVariant { Oracle, NoisyAction, NoisyObs, Frozen, CountPrior, Remote };

struct WorldModelConfig {
  ModelVariant variant = ModelVariant::Oracle;
  double p_flip = 0.0;   // NoisyAction
  double sigma = 0.0;    // NoisyObs depth noise, meters
  double p_class = 0.0;  // NoisyObs class corruption probability
  std::shared_ptr<const CountPriorStats> prior;  // CountPrior
  std::string endpoint;                          // Remote: shell command of the model process
  double remote_timeout_s = 30.0;
  ControlKind control_kind = ControlKind::Trajectory;
  ObservationKind observation_kind = ObservationKind::Panorama;
  ActionVocabulary vocab = ActionVocabulary::identity();
  std::uint64_t seed = 0;

  /// Short identifier used in reports, e.g. "noisy-action(0.25)".
  std::string label() const;
  void validate() const;
};

/// Parses "oracle", "frozen", "noisy-action:<p>", "noisy-obs:<sigma>:<p_class>",
/// "countprior" (stats attached separately) or "remote:<command>".
WorldModelConfig parse_model_spec(const std::string& spec);

/// What a model is conditioned on: the current observation and the agent's
/// pose sensor reading. Scene access is never part of the context.
struct RolloutContext {
  Observation observation;
  Pose pose_estimate;
};

/// Live episode state, handed only to simulator-backed variants.
struct EnvironmentView {
  const GridScene* scene = nullptr;
  const Pose* pose = nullptr;
};

class ModelError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class ControlKindMismatch : public ModelError {
  using ModelError::ModelError;
};

class WorldModel {
 public:
  virtual ~WorldModel() = default;

  virtual std::string name() const = 0;
  virtual ControlKind control_kind() const = 0;
  virtual ObservationKind observation_kind() const = 0;
  virtual const ActionVocabulary& vocabulary() const = 0;

  /// Predicts `horizon` future observations under `control`. Deterministic in
  /// (model state, ctx, control, seed).
  virtual PredictedRollout rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                                   std::uint64_t seed) = 0;
};

/// Builds a per-episode model instance. Only the Oracle and noisy variants
/// receive `env`; the rest are constructed without it.
std::unique_ptr<WorldModel> make_world_model(const WorldModelConfig& config, EnvironmentView env);

/// Shared validation of a rollout request: kind match and horizon; returns
/// the decoded plan.
ActionSequence check_request(const WorldModel& model, const ControlInput& control, int horizon);

struct ControlEvalItem {
  const GridScene* scene = nullptr;
  Pose pose;
  ActionSequence actions;
  std::uint64_t seed = 0;
  /// Ground-truth frames for each supported observation kind, filled by
  /// make_eval_item.
  std::vector<Panorama> truth_pano;
  std::vector<EgoView> truth_ego;
};

ControlEvalItem make_eval_item(const GridScene& scene, const Pose& pose, ActionSequence actions,
                               std::uint64_t seed);

/// Mean per-frame view distance between a model's rollouts and ground truth.
struct ControlEvalResult {
  double controllability = 0.0;
  double mean_quality = 0.0;
};

/// 1 - mean over items and frames of view_distance(predicted, truth).
double controllability(const WorldModelConfig& config, std::span<const ControlEvalItem> items);
ControlEvalResult evaluate_model(const WorldModelConfig& config, std::span<const ControlEvalItem> items);

inline constexpr double kSmoothnessBudgetM = 0.5;

/// Ground-truth-free plausibility in [0, 1]: penalizes depth jumps above the
/// smoothness budget within frames and class flicker between frames.
double quality(const PredictedRollout& rollout);

}  // namespace wmbench
