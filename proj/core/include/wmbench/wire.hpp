#pragma once

#include <nlohmann/json.hpp>

#include "wmbench/action_api.hpp"
#include "wmbench/render.hpp"

// JSON encodings shared by the rollout wire protocol, datasets and traces.
namespace wmbench::wire {

inline constexpr int kProtocolVersion = 1;

nlohmann::json to_json(const Observation& o);
/// Ego observations carry no field of view on the wire and decode as 90 degrees.
Observation observation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ControlInput& c);
ControlInput control_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ActionSequence& s);
ActionSequence actions_from_json(const nlohmann::json& j);

}  // namespace wmbench::wire
