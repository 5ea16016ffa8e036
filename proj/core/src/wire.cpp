#include "wmbench/wire.hpp"

namespace wmbench::wire {

using nlohmann::json;

json to_json(const Observation& o) {
  json cols = json::array();
  for (const auto& c : o.columns) cols.push_back({c.depth_m, c.class_id, c.instance_id});
  return {{"kind", to_string(o.kind)}, {"width", o.width()}, {"cols", std::move(cols)}};
}

Observation observation_from_json(const json& j) {
  Observation o;
  o.kind = observation_kind_from_string(j.at("kind").get<std::string>());
  o.fov_deg = o.kind == ObservationKind::Panorama ? 360.0 : kDefaultFovDeg;
  const auto& cols = j.at("cols");
  const int width = j.at("width").get<int>();
  if (!cols.is_array() || static_cast<int>(cols.size()) != width) {
    throw std::invalid_argument("observation width does not match column count");
  }
  o.columns.reserve(cols.size());
  for (const auto& c : cols) {
    if (!c.is_array() || c.size() != 3) throw std::invalid_argument("column must be [depth, class, instance]");
    o.columns.push_back({c[0].get<float>(), c[1].get<int>(), c[2].get<int>()});
  }
  return o;
}

json to_json(const ControlInput& c) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextControl>) {
          return {{"kind", "text"}, {"prompt", v.prompt}};
        } else if constexpr (std::is_same_v<T, TrajectoryControl>) {
          json pts = json::array();
          for (const auto& p : v.points) pts.push_back({p.x, p.y, p.heading_deg});
          return {{"kind", "trajectory"}, {"points", std::move(pts)}};
        } else {
          return {{"kind", "lowlevel"}, {"tokens", v.tokens}};
        }
      },
      c);
}

ControlInput control_from_json(const json& j) {
  const auto kind = control_kind_from_string(j.at("kind").get<std::string>());
  switch (kind) {
    case ControlKind::Text: return TextControl{j.at("prompt").get<std::string>()};
    case ControlKind::Trajectory: {
      TrajectoryControl t;
      for (const auto& p : j.at("points")) t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
      return t;
    }
    case ControlKind::LowLevel: return LowLevelControl{j.at("tokens").get<std::vector<std::string>>()};
  }
  throw std::invalid_argument("unknown control kind");
}

json to_json(const Pose& p) { return json::array({p.x, p.y, p.heading.degrees()}); }

Pose pose_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), Heading::from_degrees(j.at(2).get<double>())};
}

json to_json(const ActionSequence& s) {
  json out = json::array();
  for (auto a : s) out.push_back(std::string(to_string(a)));
  return out;
}

ActionSequence actions_from_json(const json& j) {
  std::vector<ActionPrimitive> items;
  for (const auto& t : j) {
    auto a = action_from_string(t.get<std::string>());
    if (!a) throw std::invalid_argument("unknown action " + t.get<std::string>());
    items.push_back(*a);
  }
  return ActionSequence(std::move(items));
}

}  // namespace wmbench::wire
