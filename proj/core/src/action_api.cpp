#include "wmbench/action_api.hpp"

#include <cmath>

namespace wmbench {

std::string to_string(ControlKind k) {
  switch (k) {
    case ControlKind::Text: return "text";
    case ControlKind::Trajectory: return "trajectory";
    case ControlKind::LowLevel: return "lowlevel";
  }
  return "?";
}

ControlKind control_kind_from_string(const std::string& s) {
  if (s == "text") return ControlKind::Text;
  if (s == "trajectory") return ControlKind::Trajectory;
  if (s == "lowlevel") return ControlKind::LowLevel;
  throw std::invalid_argument("unknown control kind '" + s + "'");
}

ControlKind kind_of(const ControlInput& c) {
  return std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextControl>) return ControlKind::Text;
        else if constexpr (std::is_same_v<T, TrajectoryControl>) return ControlKind::Trajectory;
        else return ControlKind::LowLevel;
      },
      c);
}

ActionVocabulary::ActionVocabulary(std::map<ActionPrimitive, std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& [a, t] : tokens_) {
    if (a == ActionPrimitive::Null) throw std::invalid_argument("Null is not encodable");
    if (!inverse_.emplace(t, a).second) throw std::invalid_argument("vocabulary is not injective: " + t);
  }
}

ActionVocabulary ActionVocabulary::identity() {
  std::map<ActionPrimitive, std::string> m;
  for (auto a : {ActionPrimitive::Forward, ActionPrimitive::TurnLeft, ActionPrimitive::TurnRight,
                 ActionPrimitive::Stop}) {
    m[a] = std::string(to_string(a));
  }
  return ActionVocabulary(std::move(m));
}

const std::string& ActionVocabulary::token(ActionPrimitive a) const {
  auto it = tokens_.find(a);
  if (it == tokens_.end()) throw UnmappablePrimitive("primitive " + std::string(to_string(a)) + " not in vocabulary");
  return it->second;
}

ActionPrimitive ActionVocabulary::primitive(const std::string& token) const {
  auto it = inverse_.find(token);
  if (it == inverse_.end()) throw ControlDecodeError("unknown token '" + token + "'");
  return it->second;
}

namespace {

void reject_null(const ActionSequence& seq) {
  for (auto a : seq) {
    if (a == ActionPrimitive::Null) throw std::invalid_argument("Null primitive cannot be encoded");
  }
}

constexpr std::string_view kJoiner = ", then ";

}  // namespace

std::string_view text_phrase(ActionPrimitive a) {
  switch (a) {
    case ActionPrimitive::Forward: return "move forward 0.2 meters";
    case ActionPrimitive::TurnLeft: return "turn left 22.5 degrees";
    case ActionPrimitive::TurnRight: return "turn right 22.5 degrees";
    case ActionPrimitive::Stop: return "stop";
    case ActionPrimitive::Null: break;
  }
  throw std::invalid_argument("Null primitive cannot be encoded");
}

TextControl to_text(const ActionSequence& seq) {
  reject_null(seq);
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += kJoiner;
    out += text_phrase(seq[i]);
  }
  return {out};
}

TrajectoryControl to_trajectory(const ActionSequence& seq, const Pose& start) {
  reject_null(seq);
  TrajectoryControl c;
  Pose p = start;
  c.points.push_back({p.x, p.y, p.heading.degrees()});
  for (auto a : seq) {
    p = apply_action_unobstructed(p, a);
    c.points.push_back({p.x, p.y, p.heading.degrees()});
  }
  return c;
}

LowLevelControl to_lowlevel(const ActionSequence& seq, const ActionVocabulary& vocab) {
  reject_null(seq);
  LowLevelControl c;
  for (auto a : seq) c.tokens.push_back(vocab.token(a));
  return c;
}

ControlInput encode_control(const ActionSequence& seq, ControlKind kind, const Pose& start,
                            const ActionVocabulary& vocab) {
  switch (kind) {
    case ControlKind::Text: return to_text(seq);
    case ControlKind::Trajectory: return to_trajectory(seq, start);
    case ControlKind::LowLevel: return to_lowlevel(seq, vocab);
  }
  throw std::invalid_argument("unknown control kind");
}

ActionSequence parse_text(const TextControl& c) {
  std::vector<ActionPrimitive> out;
  std::string_view rest = c.prompt;
  while (true) {
    const auto pos = rest.find(kJoiner);
    const auto phrase = rest.substr(0, pos);
    bool matched = false;
    for (auto a : {ActionPrimitive::Forward, ActionPrimitive::TurnLeft, ActionPrimitive::TurnRight,
                   ActionPrimitive::Stop}) {
      if (text_phrase(a) == phrase) {
        out.push_back(a);
        matched = true;
        break;
      }
    }
    if (!matched) throw ControlDecodeError("unrecognized phrase '" + std::string(phrase) + "'");
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + kJoiner.size());
  }
  if (!ActionSequence::is_valid(out)) throw ControlDecodeError("decoded sequence is invalid");
  return ActionSequence(std::move(out));
}

ActionSequence parse_trajectory(const TrajectoryControl& c) {
  if (c.points.size() < 2) throw ControlDecodeError("trajectory needs at least two points");
  std::vector<ActionPrimitive> out;
  for (std::size_t i = 1; i < c.points.size(); ++i) {
    const auto& a = c.points[i - 1];
    const auto& b = c.points[i];
    const double moved = std::hypot(b.x - a.x, b.y - a.y);
    double turn = std::fmod(b.heading_deg - a.heading_deg + 540.0, 360.0) - 180.0;
    if (std::abs(moved - kForwardStepM) < 1e-6 && std::abs(turn) < 1e-6) {
      out.push_back(ActionPrimitive::Forward);
    } else if (moved < 1e-6 && std::abs(turn - kTurnStepDeg) < 1e-6) {
      out.push_back(ActionPrimitive::TurnLeft);
    } else if (moved < 1e-6 && std::abs(turn + kTurnStepDeg) < 1e-6) {
      out.push_back(ActionPrimitive::TurnRight);
    } else if (moved < 1e-6 && std::abs(turn) < 1e-6) {
      out.push_back(ActionPrimitive::Stop);
    } else {
      throw ControlDecodeError("trajectory step " + std::to_string(i) + " is not a single primitive");
    }
  }
  if (!ActionSequence::is_valid(out)) throw ControlDecodeError("decoded sequence is invalid");
  return ActionSequence(std::move(out));
}

ActionSequence parse_lowlevel(const LowLevelControl& c, const ActionVocabulary& vocab) {
  std::vector<ActionPrimitive> out;
  for (const auto& t : c.tokens) out.push_back(vocab.primitive(t));
  if (!ActionSequence::is_valid(out)) throw ControlDecodeError("decoded sequence is invalid");
  return ActionSequence(std::move(out));
}

ActionSequence decode_control(const ControlInput& c, const ActionVocabulary& vocab) {
  return std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TextControl>) return parse_text(v);
        else if constexpr (std::is_same_v<T, TrajectoryControl>) return parse_trajectory(v);
        else return parse_lowlevel(v, vocab);
      },
      c);
}

}  // namespace wmbench
