#include <gtest/gtest.h>

#include <map>
#include <set>

#include "test_support.hpp"
#include "wmbench/planner.hpp"
#include "wmbench/tasks.hpp"

using namespace wmbench;
using namespace wmbench::testing;
using AP = ActionPrimitive;

namespace {

Candidate scored(double s) {
  Candidate c;
  c.score = s;
  return c;
}

Observation ego_frame(int target_cols, int instance = 7) {
  Observation o;
  o.kind = ObservationKind::Ego;
  o.fov_deg = 90.0;
  o.columns.assign(64, Column{2.0f, 1, 0});
  for (int i = 0; i < target_cols; ++i) o.columns[static_cast<std::size_t>(30 + i)].instance_id = instance;
  return o;
}

class ThrowingModel final : public WorldModel {
 public:
  std::string name() const override { return "broken"; }
  ControlKind control_kind() const override { return ControlKind::Trajectory; }
  ObservationKind observation_kind() const override { return ObservationKind::Panorama; }
  const ActionVocabulary& vocabulary() const override { return vocab_; }
  PredictedRollout rollout(const RolloutContext&, const ControlInput&, int, std::uint64_t) override {
    throw ModelError("simulated failure");
  }

 private:
  ActionVocabulary vocab_ = ActionVocabulary::identity();
};

}  // namespace

TEST(HeuristicRules, AdmissibleSets) {
  using V = std::vector<AP>;
  EXPECT_EQ(admissible_next(V{}), (V{AP::Forward, AP::TurnLeft, AP::TurnRight}));
  EXPECT_EQ(admissible_next(V{AP::TurnLeft}), (V{AP::Forward, AP::TurnLeft}));
  EXPECT_EQ(admissible_next(V{AP::TurnRight}), (V{AP::Forward, AP::TurnRight}));
  EXPECT_EQ(admissible_next(V(4, AP::TurnLeft)), (V{AP::Forward}));
  EXPECT_EQ(admissible_next(V{AP::Forward, AP::TurnLeft, AP::TurnLeft, AP::TurnLeft}), (V{AP::Forward, AP::TurnLeft}));
  EXPECT_TRUE(satisfies_heuristic_rules(V{}, V{AP::TurnLeft, AP::TurnLeft, AP::Forward}));
  EXPECT_FALSE(satisfies_heuristic_rules(V{AP::TurnLeft}, V{AP::TurnRight}));
}

TEST(HeuristicRules, RuleExclusionsFromSpecExamples) {
  using V = std::vector<AP>;
  // Inverse of the last turn is excluded; after four equal turns only the other options remain.
  const auto after_left = admissible_next(V{AP::TurnLeft});
  EXPECT_EQ(std::count(after_left.begin(), after_left.end(), AP::TurnRight), 0);
  const auto after_four = admissible_next(V(4, AP::TurnLeft));
  EXPECT_EQ(std::count(after_four.begin(), after_four.end(), AP::TurnLeft), 0);
}

TEST(HeuristicSampler, UniformOverAdmissible) {
  Rng rng(1);
  std::map<AP, int> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[heuristic_next({}, rng)];
  ASSERT_EQ(counts.size(), 3u);
  double chi2 = 0.0;
  for (auto [a, c] : counts) {
    EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / 3.0, 0.02);
    chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
  }
  EXPECT_LT(chi2, 13.8);  // p = 0.001 with 2 degrees of freedom
}

TEST(Propose, ShapesAndRules) {
  Rng rng(2);
  const std::vector<AP> hist;
  ProposalContext ctx{hist, {1, 1, Heading(0)}, std::nullopt, std::nullopt};
  const auto one = propose(ProposalPolicy::Heuristic, ctx, 1, 1, rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size(), 1u);
  const auto ar = propose(ProposalPolicy::Heuristic, ctx, 2, 4, rng);
  ASSERT_EQ(ar.size(), 2u);
  for (const auto& s : ar) {
    EXPECT_EQ(s.size(), 4u);
    EXPECT_TRUE(satisfies_heuristic_rules(hist, s.items()));
  }
  EXPECT_THROW(propose(ProposalPolicy::Heuristic, ctx, 0, 1, rng), std::invalid_argument);
}

TEST(Propose, DuplicateRateIsLow) {
  Rng rng(3);
  const std::vector<AP> hist;
  ProposalContext ctx{hist, {1, 1, Heading(0)}, std::nullopt, std::nullopt};
  int dup = 0, total = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = propose(ProposalPolicy::Heuristic, ctx, 3, 5, rng);
    std::set<std::vector<AP>> seen;
    for (const auto& s : p) {
      dup += !seen.insert(s.items()).second;
      ++total;
    }
  }
  EXPECT_LT(static_cast<double>(dup) / total, 0.05);
}

TEST(Propose, GreedyLeadsWhenGoalKnown) {
  Rng rng(4);
  const std::vector<AP> hist;
  ProposalContext ctx{hist, {1, 1, Heading(0)}, std::make_pair(1.0, 3.0), std::nullopt};
  const auto p = propose(ProposalPolicy::GoalDirected, ctx, 3, 5, rng);
  ASSERT_EQ(p.size(), 3u);
  // Goal straight up: four left turns reach 90 degrees, then advance.
  EXPECT_EQ(p[0], ActionSequence({AP::TurnLeft, AP::TurnLeft, AP::TurnLeft, AP::TurnLeft, AP::Forward}));
  EXPECT_EQ(p[0], greedy_sequence(ctx, 5));
  ProposalContext heading_ctx{hist, {1, 1, Heading(0)}, std::nullopt, Heading(-2)};
  EXPECT_EQ(greedy_sequence(heading_ctx, 3), ActionSequence({AP::TurnRight, AP::TurnRight, AP::Forward}));
}

TEST(Score, Examples) {
  TaskGoal nav;
  nav.kind = TaskKind::ImageNav;
  nav.goal_ego = ego_frame(0);
  Observation elsewhere = ego_frame(0);
  for (auto& col : elsewhere.columns) col.class_id = 3;
  Candidate c;
  c.rollout = PredictedRollout{{elsewhere, ego_frame(0)}, "t", ActionSequence({AP::Forward, AP::Forward})};
  EXPECT_DOUBLE_EQ(score(c, nav), 1.0 - kArrivalBonusPerFrame);

  TaskGoal ar;
  ar.kind = TaskKind::AR;
  ar.target_instance = 9;
  EXPECT_DOUBLE_EQ(score(c, ar), 0.0);
  ar.target_instance = 7;
  Candidate two;
  two.rollout = PredictedRollout{{ego_frame(0), ego_frame(8)}, "t", ActionSequence({AP::Forward, AP::Forward})};
  EXPECT_DOUBLE_EQ(score(two, ar), 0.125);
  EXPECT_DOUBLE_EQ(score(two, ar, true), 0.125);
  Candidate early;
  early.rollout = PredictedRollout{{ego_frame(8), ego_frame(0)}, "t", ActionSequence({AP::Forward, AP::Forward})};
  EXPECT_DOUBLE_EQ(score(early, ar, true), 0.0);
  EXPECT_THROW(score(Candidate{}, ar), std::invalid_argument);
}

TEST(Select, TieBreakAndBruteForce) {
  const std::vector<Candidate> tie = {scored(0.2), scored(0.9), scored(0.9)};
  EXPECT_EQ(select(tie), 1u);
  EXPECT_EQ(select(std::vector<Candidate>{scored(-1)}), 0u);
  EXPECT_THROW(select(std::vector<Candidate>{}), std::invalid_argument);
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    std::vector<Candidate> cs;
    const int n = uniform_int(rng, 1, 8);
    for (int i = 0; i < n; ++i) cs.push_back(scored(uniform_int(rng, 0, 4) * 0.25));
    std::size_t want = 0;
    for (std::size_t i = 1; i < cs.size(); ++i)
      if (*cs[i].score > *cs[want].score) want = i;
    EXPECT_EQ(select(cs), want);
  }
}

TEST(PlanStep, SingleProposalWithOracleCommitsIt) {
  const auto s = open_room(40, 40);
  const Pose pose = s.center_of({20, 20}, Heading(0));
  const PlannerConfig cfg{1, 4, 2, ProposalPolicy::Heuristic, false};
  PlannerState st;
  st.rng.seed(9);
  Rng copy = st.rng;
  const auto expected = propose(cfg.proposal, {st.history, pose, std::nullopt, std::nullopt}, 1, 4, copy);
  auto model = make_world_model(parse_model_spec("oracle"), {&s, &pose});
  TaskGoal goal;
  goal.kind = TaskKind::AR;
  goal.target_instance = 1;
  const auto out = plan_step(cfg, st, render_panorama(s, pose), pose, goal, model.get(), nullptr);
  EXPECT_EQ(std::get<PlanDecision>(out.decision).seq, expected[0].truncated(2));
  EXPECT_EQ(st.wm_inferences, 1);
}

TEST(PlanStep, VisibleTargetAnsweredBeforeRollouts) {
  // A wide object straight ahead fills the front view.
  std::vector<std::string> rows(20, std::string(20, '.'));
  for (auto& r : rows) r[0] = r[19] = '#';
  rows[0] = rows[19] = std::string(20, '#');
  for (int y = 2; y < 18; ++y) rows[static_cast<std::size_t>(y)][15] = 'a';
  const auto s = scene_from_rows(rows, {"INST a 1 4 blue bed"});
  const Pose pose = s.center_of({10, 10}, Heading(0));
  auto model = make_world_model(parse_model_spec("oracle"), {&s, &pose});
  const std::vector<std::string> labels = {"bed", "sofa"};
  const Answerer ans = [&](std::span<const Observation> v) { return ar_answer(v, 1, labels); };
  TaskGoal goal;
  goal.kind = TaskKind::AR;
  goal.target_instance = 1;
  PlannerState st;
  const auto out = plan_step({2, 4, 4, ProposalPolicy::Heuristic, false}, st, render_panorama(s, pose), pose, goal,
                             model.get(), &ans);
  const auto* a = std::get_if<AnswerDecision>(&out.decision);
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->label, "bed");
  EXPECT_DOUBLE_EQ(a->confidence, 1.0);
  EXPECT_EQ(st.wm_inferences, 0);
  EXPECT_TRUE(out.scores.empty());
}

TEST(PlanStep, PicksTheCandidateWithTheBestOracleRollout) {
  // Target sits to the left of the agent, outside the field of view.
  std::vector<std::string> rows(30, std::string(30, '.'));
  for (auto& r : rows) r[0] = r[29] = '#';
  rows[0] = rows[29] = std::string(30, '#');
  for (int x = 12; x < 17; ++x) rows[26][static_cast<std::size_t>(x)] = 'a';
  const auto s = scene_from_rows(rows, {"INST a 1 2 red table"});
  const Pose pose = s.center_of({14, 12}, Heading(0));
  TaskGoal goal;
  goal.kind = TaskKind::AR;
  goal.target_instance = 1;
  const PlannerConfig cfg{2, 4, 4, ProposalPolicy::Heuristic, false};
  int second_won = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    PlannerState st;
    st.rng.seed(seed);
    Rng copy = st.rng;
    const auto props = propose(cfg.proposal, {st.history, pose, std::nullopt, std::nullopt}, 2, 4, copy);
    // Independent argmax: render each plan's poses directly.
    std::size_t want = 0;
    double best = -1.0;
    for (std::size_t m = 0; m < props.size(); ++m) {
      Pose p = pose;
      double sc = 0.0;
      for (auto a : props[m]) {
        p = apply_action(s, p, a);
        sc = std::max(sc, central_visibility(render_panorama(s, p), 1));
      }
      if (sc > best) {
        best = sc;
        want = m;
      }
    }
    auto model = make_world_model(parse_model_spec("oracle"), {&s, &pose});
    const auto out = plan_step(cfg, st, render_panorama(s, pose), pose, goal, model.get(), nullptr);
    ASSERT_TRUE(out.winner.has_value());
    EXPECT_EQ(*out.winner, want);
    EXPECT_EQ(std::get<PlanDecision>(out.decision).seq, props[want]);
    second_won += want == 1;
  }
  EXPECT_GT(second_won, 0);
}

TEST(PlanStep, ModelFailureFallsBackToFirstProposal) {
  const auto s = open_room(20, 20);
  const Pose pose = s.center_of({10, 10}, Heading(0));
  ThrowingModel broken;
  PlannerState st;
  st.rng.seed(1);
  Rng copy = st.rng;
  const PlannerConfig cfg{3, 3, 1, ProposalPolicy::Heuristic, false};
  const auto props = propose(cfg.proposal, {st.history, pose, std::nullopt, std::nullopt}, 3, 3, copy);
  TaskGoal goal;
  goal.kind = TaskKind::AR;
  const auto out = plan_step(cfg, st, render_panorama(s, pose), pose, goal, &broken, nullptr);
  EXPECT_TRUE(out.fallback);
  EXPECT_EQ(st.fallbacks, 1);
  EXPECT_EQ(std::get<PlanDecision>(out.decision).seq, props[0].truncated(1));
}

TEST(PlannerConfig, Validation) {
  EXPECT_THROW((PlannerConfig{0, 1, 1}).validate(), std::invalid_argument);
  EXPECT_THROW((PlannerConfig{1, 2, 3}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((PlannerConfig{1, 2, 2}).validate());
}
