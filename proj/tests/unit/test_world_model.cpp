#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wmbench/count_prior.hpp"
#include "wmbench/harness.hpp"
#include "wmbench/planner.hpp"
#include "wmbench/scenegen.hpp"
#include "wmbench/world_model.hpp"

using namespace wmbench;
using namespace wmbench::testing;
using AP = ActionPrimitive;

namespace {

struct Fixture {
  GridScene scene;
  Pose pose;
  RolloutContext ctx;
};

Fixture fixture(std::uint64_t seed, ObservationKind kind = ObservationKind::Panorama) {
  Fixture f{gen_scene(seed), {}, {}};
  Rng rng(seed);
  f.pose = random_pose(f.scene, rng);
  f.ctx = {render(f.scene, f.pose, kind), f.pose};
  f.ctx.observation.pose.reset();
  return f;
}

PredictedRollout roll(const WorldModelConfig& cfg, const Fixture& f, const ActionSequence& seq, std::uint64_t seed) {
  auto m = make_world_model(cfg, {&f.scene, &f.pose});
  return m->rollout(f.ctx, encode_control(seq, m->control_kind(), f.pose, m->vocabulary()),
                    static_cast<int>(seq.size()), seed);
}

std::vector<ControlEvalItem> eval_items(const std::vector<GridScene>& scenes, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ControlEvalItem> items;
  for (int i = 0; i < n; ++i) {
    const auto& s = scenes[static_cast<std::size_t>(i) % scenes.size()];
    std::vector<AP> seq;
    for (int k = 0; k < 4; ++k) seq.push_back(heuristic_next(seq, rng));
    items.push_back(make_eval_item(s, random_pose(s, rng), ActionSequence(seq), seed + static_cast<std::uint64_t>(i)));
  }
  return items;
}

const ActionSequence kPlan({AP::Forward, AP::TurnLeft, AP::Forward, AP::Forward});

}  // namespace

TEST(ModelSpec, Parsing) {
  EXPECT_EQ(parse_model_spec("oracle").variant, ModelVariant::Oracle);
  const auto na = parse_model_spec("noisy-action:0.25");
  EXPECT_EQ(na.variant, ModelVariant::NoisyAction);
  EXPECT_DOUBLE_EQ(na.p_flip, 0.25);
  const auto no = parse_model_spec("noisy-obs:1:0.2");
  EXPECT_DOUBLE_EQ(no.sigma, 1.0);
  EXPECT_DOUBLE_EQ(no.p_class, 0.2);
  EXPECT_EQ(parse_model_spec("remote:python3 a.py --x:y").endpoint, "python3 a.py --x:y");
  EXPECT_THROW(parse_model_spec("noisy-action:1.5"), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("noisy-obs:-1:0"), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("dreamer"), std::invalid_argument);
  EXPECT_THROW(parse_model_spec("noisy-action"), std::invalid_argument);
}

TEST(Rollout, OracleMatchesGroundTruth) {
  const auto f = fixture(1);
  const auto r = roll(parse_model_spec("oracle"), f, kPlan, 0);
  ASSERT_EQ(r.horizon(), 4);
  EXPECT_EQ(r.aligned_actions, kPlan);
  Pose p = f.pose;
  for (int i = 0; i < 4; ++i) {
    p = apply_action(f.scene, p, kPlan[static_cast<std::size_t>(i)]);
    EXPECT_EQ(view_distance(r.frames[static_cast<std::size_t>(i)], render_panorama(f.scene, p)), 0.0);
  }
}

TEST(Rollout, EveryControlKindDecodesTheSamePlan) {
  const auto f = fixture(2);
  auto base = parse_model_spec("oracle");
  const auto ref = roll(base, f, kPlan, 0);
  for (auto kind : {ControlKind::Text, ControlKind::LowLevel}) {
    auto cfg = base;
    cfg.control_kind = kind;
    const auto r = roll(cfg, f, kPlan, 0);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(r.frames[static_cast<std::size_t>(i)], ref.frames[static_cast<std::size_t>(i)]);
  }
}

TEST(Rollout, ZeroNoiseEqualsOracle) {
  const auto f = fixture(3);
  const auto oracle = roll(parse_model_spec("oracle"), f, kPlan, 9);
  EXPECT_EQ(roll(parse_model_spec("noisy-action:0"), f, kPlan, 9).frames, oracle.frames);
  EXPECT_EQ(roll(parse_model_spec("noisy-obs:0:0"), f, kPlan, 9).frames, oracle.frames);
}

TEST(Rollout, FrozenRepeatsContext) {
  auto f = fixture(4);
  ActionSequence five({AP::Forward, AP::Forward, AP::TurnLeft, AP::Forward, AP::Stop});
  auto m = make_world_model(parse_model_spec("frozen"), {});
  const auto r = m->rollout(f.ctx, to_trajectory(five, f.pose), 5, 0);
  ASSERT_EQ(r.horizon(), 5);
  for (const auto& fr : r.frames) EXPECT_EQ(fr, f.ctx.observation);
}

TEST(Rollout, RequestValidation) {
  const auto f = fixture(5);
  auto m = make_world_model(parse_model_spec("oracle"), {&f.scene, &f.pose});
  EXPECT_THROW(m->rollout(f.ctx, to_text(kPlan), 4, 0), ControlKindMismatch);
  EXPECT_THROW(m->rollout(f.ctx, to_trajectory(kPlan, f.pose), 3, 0), ModelError);
  // Simulator-backed variants cannot be built without the environment handle.
  EXPECT_THROW(make_world_model(parse_model_spec("oracle"), {}), ModelError);
  EXPECT_NO_THROW(make_world_model(parse_model_spec("frozen"), {}));
}

TEST(Rollout, DeterministicPerSeed) {
  const auto f = fixture(6);
  for (const auto* spec : {"noisy-action:0.5", "noisy-obs:1:0.2"}) {
    const auto cfg = parse_model_spec(spec);
    EXPECT_EQ(roll(cfg, f, kPlan, 42).frames, roll(cfg, f, kPlan, 42).frames) << spec;
  }
  const auto a = roll(parse_model_spec("noisy-obs:1:0.2"), f, kPlan, 1);
  const auto b = roll(parse_model_spec("noisy-obs:1:0.2"), f, kPlan, 2);
  EXPECT_NE(a.frames, b.frames);

  auto stats = std::make_shared<CountPriorStats>();
  auto cfg = parse_model_spec("countprior");
  cfg.prior = stats;
  EXPECT_EQ(roll(cfg, f, kPlan, 3).frames, roll(cfg, f, kPlan, 3).frames);
}

TEST(Controllability, OracleIsOneAndNoiseLowersIt) {
  std::vector<GridScene> scenes = {gen_scene(10), gen_scene(11)};
  const auto items = eval_items(scenes, 32, 77);
  EXPECT_DOUBLE_EQ(controllability(parse_model_spec("oracle"), items), 1.0);
  double prev = 2.0;
  for (double p : {0.0, 0.25, 0.5, 1.0}) {
    WorldModelConfig c = parse_model_spec("noisy-action:0");
    c.p_flip = p;
    const double v = controllability(c, items);
    EXPECT_LE(v, prev + 1e-12) << "p_flip " << p;
    prev = v;
  }
  EXPECT_LT(prev, 1.0);
}

TEST(Controllability, FrozenScoreEqualsStaticFrameDistance) {
  std::vector<GridScene> scenes = {gen_scene(12)};
  const auto items = eval_items(scenes, 16, 5);
  double sum = 0.0;
  int n = 0;
  for (const auto& it : items) {
    auto still = render_panorama(*it.scene, it.pose);
    still.pose.reset();
    for (const auto& t : it.truth_pano) {
      sum += view_distance(still, t);
      ++n;
    }
  }
  EXPECT_NEAR(controllability(parse_model_spec("frozen"), items), 1.0 - sum / n, 1e-12);
}

TEST(Quality, FrozenNeverFlickers) {
  const auto f = fixture(13);
  auto m = make_world_model(parse_model_spec("frozen"), {});
  const auto frozen = m->rollout(f.ctx, to_trajectory(kPlan, f.pose), 4, 0);
  PredictedRollout one;
  one.frames = {f.ctx.observation};
  EXPECT_DOUBLE_EQ(quality(frozen), quality(one));
  // Rotating a panorama keeps its within-frame smoothness but makes classes flicker.
  PredictedRollout spinning;
  for (int k = 0; k < 4; ++k) spinning.frames.push_back(rotate_panorama(f.ctx.observation, k));
  EXPECT_GE(quality(frozen), quality(spinning));
}

TEST(Quality, DecreasesWithObservationNoise) {
  std::vector<GridScene> scenes = {gen_scene(14), gen_scene(15)};
  const auto items = eval_items(scenes, 24, 8);
  double prev = 2.0;
  for (const auto* spec : {"noisy-obs:0:0", "noisy-obs:0.5:0", "noisy-obs:1:0"}) {
    const double q = evaluate_model(parse_model_spec(spec), items).mean_quality;
    EXPECT_LT(q, prev) << spec;
    prev = q;
  }
}

TEST(Quality, IgnoresActionCorruption) {
  std::vector<GridScene> scenes = {gen_scene(16), gen_scene(17)};
  const auto items = eval_items(scenes, 64, 9);
  const double q_oracle = evaluate_model(parse_model_spec("oracle"), items).mean_quality;
  const double q_noisy = evaluate_model(parse_model_spec("noisy-action:0.5"), items).mean_quality;
  EXPECT_NEAR(q_noisy, q_oracle, 0.02);
}

TEST(Quality, CorridorRegression) {
  const auto s = open_room(60, 7);
  const Pose p = s.center_of({10, 3}, Heading(0));
  auto m = make_world_model(parse_model_spec("oracle"), {&s, &p});
  RolloutContext ctx{render_panorama(s, p), p};
  const auto r = m->rollout(ctx, to_trajectory(kPlan, p), 4, 0);
  EXPECT_NEAR(quality(r), 0.998160352, 1e-8);
}

TEST(CountPrior, MoreDataMeansCloserRollouts) {
  const auto records = make_training_records(4, 0.5, 123, 1, 200);
  ASSERT_GE(records.size(), 200u);
  std::vector<GridScene> scenes = {gen_scene(20), gen_scene(21), gen_scene(22)};
  const auto items = eval_items(scenes, 40, 10);
  auto empty = parse_model_spec("countprior");
  empty.prior = std::make_shared<CountPriorStats>();
  auto trained = empty;
  auto stats = std::make_shared<CountPriorStats>();
  stats->fit(std::span<const TrajectoryRecord>(records.data(), 200));
  trained.prior = stats;
  EXPECT_EQ(stats->trajectories(), 200u);
  EXPECT_GT(controllability(trained, items), controllability(empty, items));
}

TEST(CountPrior, UninformedPredictionIsUniform) {
  CountPriorStats s;
  const auto c = s.predict(1.0, 0);
  EXPECT_GE(c.depth_m, 1.0f);
  EXPECT_EQ(c.instance_id, 0);
  s.add_sample(1.0, 3, 0.6, 5);
  for (int i = 0; i < 50; ++i) s.add_sample(1.0, 3, 0.6, 5);
  EXPECT_EQ(s.predict(1.0, 3).class_id, 5);
  EXPECT_EQ(s.samples(), 51u);
}
