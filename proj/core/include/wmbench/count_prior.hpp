#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wmbench/render.hpp"
#include "wmbench/trajectory.hpp"
#include "wmbench/world_model.hpp"

namespace wmbench {

/// Episode-local occupancy memory built from observed column scans, in a
/// fixed window anchored at the first integrated pose.
class ObservationMemory {
 public:
  static constexpr int kSide = 256;

  explicit ObservationMemory(double cell_size = 0.1);

  void integrate(const Observation& obs, const Pose& pose);
  void clear();
  bool anchored() const { return anchored_; }

  struct RayResult {
    bool hit = false;       // true: known occupied cell, false: ran into unknown space
    double distance = 0.0;  // hit depth or frontier distance
    int class_id = 0;
    int instance_id = 0;
    int context_class = 0;  // frontier only: class of the nearest known occupied neighbour
  };
  RayResult cast(double x, double y, double bearing_rad) const;

  /// True when the segment crosses a cell known to be occupied.
  bool blocked(double x0, double y0, double x1, double y1) const;

 private:
  enum class State : std::uint8_t { Unknown, Free, Occupied };
  struct MemCell {
    State state = State::Unknown;
    std::uint8_t class_id = 0;
    std::int32_t instance_id = 0;
  };

  bool local(int gx, int gy, int& lx, int& ly) const;
  MemCell* at(int gx, int gy);
  const MemCell* at(int gx, int gy) const;

  double cell_size_;
  bool anchored_ = false;
  int origin_x_ = 0;
  int origin_y_ = 0;
  std::vector<MemCell> cells_;
  std::vector<int> touched_;
};

/// Class/depth co-occurrence counts for space never observed in an episode.
/// Context is (frontier distance bin, class of the nearest known occupied
/// neighbour); targets are the residual depth beyond the frontier and the
/// class found there. Predictions are Laplace-smoothed (+1).
class CountPriorStats {
 public:
  static constexpr int kFrontierBins = 16;
  static constexpr double kFrontierBinM = 0.5;
  static constexpr int kClasses = 16;
  static constexpr int kDepthBins = 20;
  static constexpr double kDepthBinM = 0.25;
  /// Frame gaps used to build training pairs from each trajectory.
  static constexpr int kMaxGap = 4;

  CountPriorStats();

  /// Accumulates training pairs from recorded trajectories.
  void fit(std::span<const TrajectoryRecord> records, double cell_size = 0.1);
  void add_sample(double frontier_m, int context_class, double residual_m, int class_id);

  Column predict(double frontier_m, int context_class) const;

  std::size_t trajectories() const { return trajectories_; }
  std::size_t samples() const { return samples_; }

 private:
  static int context_index(double frontier_m, int context_class);

  std::vector<std::uint32_t> depth_counts_;
  std::vector<std::uint32_t> class_counts_;
  std::size_t trajectories_ = 0;
  std::size_t samples_ = 0;
};

/// Renders an observation from memory, filling unobserved bearings from `stats`.
Observation render_from_memory(const ObservationMemory& memory, const CountPriorStats& stats, const Pose& pose,
                               ObservationKind kind);

class CountPriorModel final : public WorldModel {
 public:
  CountPriorModel(WorldModelConfig config, double cell_size = 0.1);

  std::string name() const override { return config_.label(); }
  ControlKind control_kind() const override { return config_.control_kind; }
  ObservationKind observation_kind() const override { return config_.observation_kind; }
  const ActionVocabulary& vocabulary() const override { return config_.vocab; }

  PredictedRollout rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                           std::uint64_t seed) override;

 private:
  WorldModelConfig config_;
  ObservationMemory memory_;
  std::shared_ptr<const CountPriorStats> stats_;
  std::optional<Pose> last_integrated_;
};

}  // namespace wmbench
