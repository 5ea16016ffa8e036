#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wmbench/scene.hpp"

namespace wmbench {

enum class ControlKind { Text, Trajectory, LowLevel };

std::string to_string(ControlKind k);
ControlKind control_kind_from_string(const std::string& s);

struct TextControl {
  std::string prompt;
  friend bool operator==(const TextControl&, const TextControl&) = default;
};

struct TrajectoryPoint {
  double x = 0.0;
  double y = 0.0;
  double heading_deg = 0.0;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct TrajectoryControl {
  std::vector<TrajectoryPoint> points;
  friend bool operator==(const TrajectoryControl&, const TrajectoryControl&) = default;
};

struct LowLevelControl {
  std::vector<std::string> tokens;
  friend bool operator==(const LowLevelControl&, const LowLevelControl&) = default;
};

/// The conditioning a world model receives for one candidate plan.
using ControlInput = std::variant<TextControl, TrajectoryControl, LowLevelControl>;

ControlKind kind_of(const ControlInput& c);

class UnmappablePrimitive : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class ControlDecodeError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A model's low-level action vocabulary: a bijection between the primitives
/// it supports and its own token names.
class ActionVocabulary {
 public:
  ActionVocabulary() = default;
  explicit ActionVocabulary(std::map<ActionPrimitive, std::string> tokens);

  /// Forward, TurnLeft, TurnRight and Stop under their own names.
  static ActionVocabulary identity();

  const std::string& token(ActionPrimitive a) const;  // throws UnmappablePrimitive
  ActionPrimitive primitive(const std::string& token) const;  // throws ControlDecodeError
  bool contains(ActionPrimitive a) const { return tokens_.contains(a); }

 private:
  std::map<ActionPrimitive, std::string> tokens_;
  std::map<std::string, ActionPrimitive> inverse_;
};

std::string_view text_phrase(ActionPrimitive a);

TextControl to_text(const ActionSequence& seq);
TrajectoryControl to_trajectory(const ActionSequence& seq, const Pose& start);
LowLevelControl to_lowlevel(const ActionSequence& seq, const ActionVocabulary& vocab);
ControlInput encode_control(const ActionSequence& seq, ControlKind kind, const Pose& start,
                            const ActionVocabulary& vocab);

// Inverses, used by models to recover the commanded plan.
ActionSequence parse_text(const TextControl& c);
ActionSequence parse_trajectory(const TrajectoryControl& c);
ActionSequence parse_lowlevel(const LowLevelControl& c, const ActionVocabulary& vocab);
ActionSequence decode_control(const ControlInput& c, const ActionVocabulary& vocab);

}  // namespace wmbench
