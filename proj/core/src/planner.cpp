#include "wmbench/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wmbench {

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::ImageNav: return "imagenav";
    case TaskKind::AR: return "ar";
    case TaskKind::InfoSeek: return "infoseek";
  }
  return "?";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "imagenav") return TaskKind::ImageNav;
  if (s == "ar") return TaskKind::AR;
  if (s == "infoseek") return TaskKind::InfoSeek;
  throw std::invalid_argument("unknown task '" + s + "'");
}

void PlannerConfig::validate() const {
  if (M < 1) throw std::invalid_argument("M must be at least 1");
  if (L < 1) throw std::invalid_argument("L must be at least 1");
  if (commit_len < 1 || commit_len > L) throw std::invalid_argument("commit_len must lie in [1, L]");
}

std::optional<ActionPrimitive> inverse_of(ActionPrimitive a) {
  if (a == ActionPrimitive::TurnLeft) return ActionPrimitive::TurnRight;
  if (a == ActionPrimitive::TurnRight) return ActionPrimitive::TurnLeft;
  return std::nullopt;
}

std::vector<ActionPrimitive> admissible_next(std::span<const ActionPrimitive> history) {
  std::vector<ActionPrimitive> out = {ActionPrimitive::Forward, ActionPrimitive::TurnLeft, ActionPrimitive::TurnRight};
  if (history.empty()) return out;
  const ActionPrimitive last = history.back();
  if (auto inv = inverse_of(last)) std::erase(out, *inv);
  if (last == ActionPrimitive::TurnLeft || last == ActionPrimitive::TurnRight) {
    if (history.size() >= static_cast<std::size_t>(kMaxSameTurns) &&
        std::all_of(history.end() - kMaxSameTurns, history.end(), [&](ActionPrimitive a) { return a == last; })) {
      std::erase(out, last);
    }
  }
  return out;
}

bool satisfies_heuristic_rules(std::span<const ActionPrimitive> history, std::span<const ActionPrimitive> seq) {
  std::vector<ActionPrimitive> h(history.begin(), history.end());
  for (auto a : seq) {
    const auto ok = admissible_next(h);
    if (std::find(ok.begin(), ok.end(), a) == ok.end()) return false;
    h.push_back(a);
  }
  return true;
}

ActionPrimitive heuristic_next(std::span<const ActionPrimitive> history, Rng& rng) {
  const auto ok = admissible_next(history);
  return ok[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(ok.size()) - 1))];
}

namespace {

ActionSequence heuristic_sequence(std::span<const ActionPrimitive> history, int L, Rng& rng) {
  std::vector<ActionPrimitive> h(history.begin(), history.end());
  std::vector<ActionPrimitive> seq;
  for (int i = 0; i < L; ++i) {
    const auto a = heuristic_next(h, rng);
    seq.push_back(a);
    h.push_back(a);
  }
  return ActionSequence(std::move(seq));
}

int heading_steps_toward(Heading from, Heading to) {
  int d = ((to.index() - from.index()) % kHeadingCount + kHeadingCount) % kHeadingCount;
  if (d > kHeadingCount / 2) d -= kHeadingCount;
  return d;  // in [-7, 8]
}

}  // namespace

ActionSequence greedy_sequence(const ProposalContext& ctx, int L) {
  std::vector<ActionPrimitive> h(ctx.history.begin(), ctx.history.end());
  std::vector<ActionPrimitive> seq;
  Pose pose = ctx.pose;
  for (int i = 0; i < L; ++i) {
    std::optional<Heading> want = ctx.goal_heading;
    if (ctx.goal_point) {
      const double dx = ctx.goal_point->first - pose.x;
      const double dy = ctx.goal_point->second - pose.y;
      const double deg = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      want = Heading(static_cast<int>(std::lround(deg / kTurnStepDeg)));
    }
    ActionPrimitive desired = ActionPrimitive::Forward;
    if (want) {
      const int d = heading_steps_toward(pose.heading, *want);
      if (d > 0) desired = ActionPrimitive::TurnLeft;
      if (d < 0) desired = ActionPrimitive::TurnRight;
    }
    const auto ok = admissible_next(h);
    if (std::find(ok.begin(), ok.end(), desired) == ok.end()) {
      desired = std::find(ok.begin(), ok.end(), ActionPrimitive::Forward) != ok.end() ? ActionPrimitive::Forward
                                                                                      : ok.front();
    }
    seq.push_back(desired);
    h.push_back(desired);
    pose = apply_action_unobstructed(pose, desired);
  }
  return ActionSequence(std::move(seq));
}

std::vector<ActionSequence> propose(ProposalPolicy policy, const ProposalContext& ctx, int M, int L, Rng& rng) {
  if (M < 1 || L < 1) throw std::invalid_argument("M and L must be positive");
  const bool seeded = policy == ProposalPolicy::GoalDirected && (ctx.goal_point || ctx.goal_heading);
  const int heuristic_count = seeded ? M - 1 : M;
  std::vector<ActionSequence> out;
  if (seeded) out.push_back(greedy_sequence(ctx, L));
  for (int m = 0; m < heuristic_count; ++m) {
    ActionSequence seq = heuristic_sequence(ctx.history, L, rng);
    for (int attempt = 0; attempt < kProposalRetries && std::find(out.begin(), out.end(), seq) != out.end(); ++attempt) {
      seq = heuristic_sequence(ctx.history, L, rng);
    }
    out.push_back(std::move(seq));
  }
  return out;
}

double score(const Candidate& c, const TaskGoal& goal, bool terminal_only) {
  if (!c.rollout || c.rollout->frames.empty()) throw std::invalid_argument("candidate has no rollout to score");
  const auto& frames = c.rollout->frames;
  const std::size_t first = terminal_only ? frames.size() - 1 : 0;
  double best = -1e300;
  for (std::size_t k = first; k < frames.size(); ++k) {
    const auto& f = frames[k];
    double s = 0.0;
    if (goal.kind == TaskKind::ImageNav) {
      double d = 0.0;
      if (f.kind == ObservationKind::Panorama) {
        d = 1.0;
        for (int r = 0; r < kHeadingCount; ++r) d = std::min(d, view_distance(rotate_panorama(f, r), goal.goal_pano));
      } else {
        d = view_distance(f, goal.goal_ego);
      }
      s = 1.0 - d - kArrivalBonusPerFrame * static_cast<double>(k);
    } else {
      s = central_visibility(f, goal.target_instance);
    }
    best = std::max(best, s);
  }
  return best;
}

std::size_t select(std::span<const Candidate> candidates) {
  if (candidates.empty()) throw std::invalid_argument("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!candidates[i].score) throw std::invalid_argument("unscored candidate");
    if (*candidates[i].score > *candidates[best].score) best = i;
  }
  return best;
}

StepOutcome plan_step(const PlannerConfig& config, PlannerState& state, const Panorama& real_obs,
                      const Pose& pose_estimate, const TaskGoal& goal, WorldModel* model, const Answerer* answerer) {
  config.validate();
  StepOutcome out;
  const EgoView real_front = front_view(real_obs);

  if (answerer) out.evidence.push_back(real_front);
  auto try_answer = [&] {
    if (!answerer) return false;
    out.answer = (*answerer)(out.evidence);
    if (out.answer.confidence < kStopConfidence) return false;
    out.decision = AnswerDecision{out.answer.label, out.answer.confidence};
    return true;
  };
  // A confident answer from the real view needs no simulation.
  if (try_answer()) return out;

  ProposalContext pctx{state.history, pose_estimate, state.goal_point, state.goal_heading};
  auto proposals = propose(config.proposal, pctx, config.M, config.L, state.rng);
  auto commit_first = [&] {
    out.decision = PlanDecision{proposals.front().truncated(static_cast<std::size_t>(config.commit_len))};
  };
  if (!model) {
    commit_first();
    return out;
  }

  std::vector<Candidate> candidates;
  RolloutContext ctx;
  ctx.pose_estimate = pose_estimate;
  ctx.observation = model->observation_kind() == ObservationKind::Panorama ? real_obs : real_front;
  ctx.observation.pose.reset();
  try {
    for (std::size_t m = 0; m < proposals.size(); ++m) {
      const auto control = encode_control(proposals[m], model->control_kind(), pose_estimate, model->vocabulary());
      const auto seed = derive_seed({state.episode_seed, static_cast<std::uint64_t>(state.step), m});
      Candidate c{proposals[m], model->rollout(ctx, control, config.L, seed), std::nullopt};
      ++state.wm_inferences;
      candidates.push_back(std::move(c));
    }
  } catch (const ModelError& e) {
    ++state.fallbacks;
    out.fallback = true;
    out.fallback_reason = e.what();
    commit_first();
    return out;
  }

  for (auto& c : candidates) {
    c.score = score(c, goal, config.terminal_only);
    out.scores.push_back(*c.score);
  }
  const std::size_t w = select(candidates);
  out.winner = w;

  if (answerer) {
    const auto& frames = candidates[w].rollout->frames;
    if (config.terminal_only) {
      out.evidence.push_back(frames.back());
    } else {
      out.evidence.insert(out.evidence.end(), frames.begin(), frames.end());
    }
    if (try_answer()) return out;
  }
  out.decision = PlanDecision{candidates[w].seq.truncated(static_cast<std::size_t>(config.commit_len))};
  return out;
}

}  // namespace wmbench
