#pragma once

#include <string>
#include <vector>

#include "wmbench/render.hpp"

namespace wmbench {

struct TrajectoryStep {
  Pose pose;
  ActionPrimitive action = ActionPrimitive::Null;
  Panorama panorama;
  friend bool operator==(const TrajectoryStep&, const TrajectoryStep&) = default;
};

/// One recorded path segment. The first step carries the Null action and the
/// starting frame; every later step holds the action taken and the frame
/// observed after it.
struct TrajectoryRecord {
  std::string id;
  std::string scene;
  std::vector<TrajectoryStep> steps;
  double rho = 0.0;
  double alpha = 0.0;
  double filter_radius = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

}  // namespace wmbench
