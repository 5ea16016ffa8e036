#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wmbench/planner.hpp"
#include "wmbench/remote.hpp"
#include "wmbench/scenegen.hpp"
#include "wmbench/wire.hpp"

using namespace wmbench;
using namespace wmbench::testing;
using AP = ActionPrimitive;

namespace {

WorldModelConfig remote(const std::string& args, double timeout_s = 10.0) {
  auto c = parse_model_spec(std::string("remote:") + WMBENCH_TEST_SERVER + " " + args);
  c.remote_timeout_s = timeout_s;
  return c;
}

struct Probe {
  RolloutContext ctx;
  ActionSequence seq;
};

Probe probe(const GridScene& s, Rng& rng, ObservationKind kind) {
  const Pose p = random_pose(s, rng);
  std::vector<AP> seq;
  const int n = uniform_int(rng, 1, 6);
  for (int k = 0; k < n; ++k) seq.push_back(heuristic_next(seq, rng));
  Probe out{{render(s, p, kind), p}, ActionSequence(seq)};
  out.ctx.observation.pose.reset();
  return out;
}

}  // namespace

TEST(Remote, HandshakeAdoptsDeclaredKinds) {
  auto m = make_world_model(remote("frozen lowlevel ego"), {});
  EXPECT_EQ(m->control_kind(), ControlKind::LowLevel);
  EXPECT_EQ(m->observation_kind(), ObservationKind::Ego);
  EXPECT_EQ(m->name(), "remote");
}

TEST(Remote, MatchesBuiltInFrozenOnRandomRequests) {
  const auto scene = gen_scene(3);
  Rng rng(17);
  auto pano = make_world_model(remote("frozen trajectory pano"), {});
  auto ego = make_world_model(remote("frozen text ego"), {});
  auto builtin_pano = make_world_model(parse_model_spec("frozen"), {});
  auto ego_cfg = parse_model_spec("frozen");
  ego_cfg.control_kind = ControlKind::Text;
  ego_cfg.observation_kind = ObservationKind::Ego;
  auto builtin_ego = make_world_model(ego_cfg, {});
  for (int i = 0; i < 20; ++i) {
    const bool use_ego = i % 2 == 1;
    auto& r = use_ego ? *ego : *pano;
    auto& b = use_ego ? *builtin_ego : *builtin_pano;
    const auto pr = probe(scene, rng, r.observation_kind());
    const auto control = encode_control(pr.seq, r.control_kind(), pr.ctx.pose_estimate, r.vocabulary());
    const int L = static_cast<int>(pr.seq.size());
    const auto got = r.rollout(pr.ctx, control, L, static_cast<std::uint64_t>(i));
    const auto want = b.rollout(pr.ctx, control, L, static_cast<std::uint64_t>(i));
    ASSERT_EQ(got.horizon(), L);
    EXPECT_EQ(got.source, "remote");
    for (int k = 0; k < L; ++k) {
      const auto& g = got.frames[static_cast<std::size_t>(k)];
      const auto& w = want.frames[static_cast<std::size_t>(k)];
      EXPECT_TRUE(g.same_content(w));
      EXPECT_EQ(wire::to_json(g).dump(), wire::to_json(w).dump());
    }
  }
}

TEST(Remote, TypedErrors) {
  const auto scene = gen_scene(4);
  Rng rng(1);
  const auto pr = probe(scene, rng, ObservationKind::Panorama);
  const int L = static_cast<int>(pr.seq.size());
  auto call = [&](const std::string& mode, double timeout = 10.0) {
    auto m = make_world_model(remote(mode + " trajectory pano", timeout), {});
    m->rollout(pr.ctx, to_trajectory(pr.seq, pr.ctx.pose_estimate), L, 0);
  };
  EXPECT_THROW(call("short"), FrameCountError);
  EXPECT_THROW(call("badversion"), VersionError);
  EXPECT_THROW(call("malformed"), MalformedResponseError);
  EXPECT_THROW(call("error"), RemoteReportedError);
  EXPECT_THROW(call("exit"), TransportError);
  EXPECT_THROW(call("silent", 0.3), TimeoutError);
  // Every failure is a ModelError, which the planner turns into a fallback.
  EXPECT_THROW(call("short"), ModelError);
}

TEST(Remote, ResponseParsing) {
  const std::string frame = R"({"kind":"ego","width":2,"cols":[[1.0,0,0],[2.0,1,1]]})";
  const auto ok = parse_rollout_response(R"({"v":1,"type":"frames","frames":[)" + frame + "]}", 1,
                                         ObservationKind::Ego, 2);
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_DOUBLE_EQ(ok[0].fov_deg, 90.0);
  EXPECT_THROW(parse_rollout_response(R"({"v":"2","type":"frames","frames":[]})", 0, ObservationKind::Ego, 2),
               VersionError);
  EXPECT_THROW(parse_rollout_response(R"({"v":1,"type":"frames","frames":[)" + frame + "]}", 1,
                                      ObservationKind::Panorama, 2),
               MalformedResponseError);
  EXPECT_THROW(parse_rollout_response(R"({"v":1,"type":"frames","frames":[)" + frame + "]}", 2,
                                      ObservationKind::Ego, 2),
               FrameCountError);
  EXPECT_THROW(parse_rollout_response("[1,2]", 1, ObservationKind::Ego, 2), MalformedResponseError);
}

TEST(Remote, RequestShape) {
  Observation o;
  o.kind = ObservationKind::Ego;
  o.columns = {{1.5f, 2, 3}};
  const auto req = make_rollout_request(o, TextControl{"stop"}, 1, 7);
  EXPECT_EQ(req.dump(),
            R"({"control":{"kind":"text","prompt":"stop"},"horizon":1,"obs":{"cols":[[1.5,2,3]],"kind":"ego","width":1},"seed":7,"type":"rollout","v":1})");
}

TEST(Remote, UnreachableEndpointFailsAtConstruction) {
  EXPECT_THROW(make_world_model(parse_model_spec("remote:exit 0"), {}), ModelError);
}
