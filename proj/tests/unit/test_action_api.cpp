#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"
#include "wmbench/action_api.hpp"
#include "wmbench/wire.hpp"

using namespace wmbench;
using AP = ActionPrimitive;

namespace {

ActionSequence random_sequence(Rng& rng, int max_len = 8) {
  const int n = uniform_int(rng, 1, max_len);
  std::vector<AP> items;
  for (int i = 0; i < n; ++i) items.push_back(static_cast<AP>(uniform_int(rng, 0, 2)));
  if (uniform01(rng) < 0.2) items.back() = AP::Stop;
  return ActionSequence(std::move(items));
}

}  // namespace

TEST(ActionSequence, Invariants) {
  EXPECT_THROW(ActionSequence(std::vector<AP>{}), std::invalid_argument);
  EXPECT_THROW(ActionSequence({AP::Stop, AP::Forward}), std::invalid_argument);
  EXPECT_NO_THROW(ActionSequence({AP::Forward, AP::Stop}));
  const ActionSequence s({AP::Forward, AP::TurnLeft, AP::Forward});
  EXPECT_EQ(s.truncated(2), ActionSequence({AP::Forward, AP::TurnLeft}));
  EXPECT_EQ(s.truncated(0), ActionSequence({AP::Forward}));
  EXPECT_EQ(s.truncated(9), s);
}

TEST(TextControl, Templates) {
  EXPECT_EQ(to_text(ActionSequence({AP::Forward})).prompt, "move forward 0.2 meters");
  EXPECT_EQ(to_text(ActionSequence({AP::TurnLeft, AP::Forward})).prompt,
            "turn left 22.5 degrees, then move forward 0.2 meters");
  EXPECT_EQ(to_text(ActionSequence({AP::TurnRight, AP::Stop})).prompt, "turn right 22.5 degrees, then stop");
}

TEST(TextControl, ParseBackRecoversSequence) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto seq = random_sequence(rng);
    EXPECT_EQ(parse_text(to_text(seq)), seq);
  }
  EXPECT_THROW(parse_text({"walk somewhere"}), ControlDecodeError);
}

TEST(TrajectoryControl, Examples) {
  const auto t = to_trajectory(ActionSequence({AP::Forward}), {0, 0, Heading(0)});
  ASSERT_EQ(t.points.size(), 2u);
  EXPECT_EQ(t.points[0], (TrajectoryPoint{0, 0, 0}));
  EXPECT_EQ(t.points[1], (TrajectoryPoint{0.2, 0, 0}));
  const auto stop = to_trajectory(ActionSequence({AP::Stop}), {1, 2, Heading(3)});
  EXPECT_EQ(stop.points[0], stop.points[1]);
}

TEST(TrajectoryControl, FinalPointIsKinematicFold) {
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto seq = random_sequence(rng);
    const Pose start{uniform01(rng) * 5, uniform01(rng) * 5, Heading(uniform_int(rng, 0, 15))};
    Pose p = start;
    for (auto a : seq) p = apply_action_unobstructed(p, a);
    const auto t = to_trajectory(seq, start);
    ASSERT_EQ(t.points.size(), seq.size() + 1);
    EXPECT_DOUBLE_EQ(t.points.back().x, p.x);
    EXPECT_DOUBLE_EQ(t.points.back().y, p.y);
    EXPECT_DOUBLE_EQ(t.points.back().heading_deg, p.heading.degrees());
    EXPECT_EQ(parse_trajectory(t), seq);
  }
}

TEST(LowLevelControl, VocabularyMapping) {
  const auto id = ActionVocabulary::identity();
  const auto ll = to_lowlevel(ActionSequence({AP::Forward, AP::TurnRight}), id);
  EXPECT_EQ(ll.tokens, (std::vector<std::string>{"Forward", "TurnRight"}));

  const ActionVocabulary renamed({{AP::Forward, "FWD"}, {AP::TurnLeft, "7"}, {AP::TurnRight, "8"}});
  EXPECT_EQ(to_lowlevel(ActionSequence({AP::Forward}), renamed).tokens, std::vector<std::string>{"FWD"});
  EXPECT_THROW(to_lowlevel(ActionSequence({AP::Stop}), renamed), UnmappablePrimitive);
  EXPECT_THROW(parse_lowlevel({{"JUMP"}}, renamed), ControlDecodeError);
  EXPECT_THROW(ActionVocabulary({{AP::Forward, "x"}, {AP::TurnLeft, "x"}}), std::invalid_argument);

  Rng rng(3);
  const ActionVocabulary full({{AP::Forward, "a0"}, {AP::TurnLeft, "a1"}, {AP::TurnRight, "a2"}, {AP::Stop, "a3"}});
  for (int i = 0; i < 100; ++i) {
    const auto seq = random_sequence(rng);
    const auto enc = to_lowlevel(seq, full);
    EXPECT_EQ(enc.tokens.size(), seq.size());
    EXPECT_EQ(parse_lowlevel(enc, full), seq);
  }
}

TEST(EncodeControl, DispatchAndInjectivity) {
  const auto vocab = ActionVocabulary::identity();
  const Pose start{1, 1, Heading(0)};
  const ActionSequence seq({AP::TurnLeft, AP::Forward});
  EXPECT_EQ(std::get<TextControl>(encode_control(seq, ControlKind::Text, start, vocab)), to_text(seq));
  EXPECT_EQ(std::get<TrajectoryControl>(encode_control(seq, ControlKind::Trajectory, start, vocab)),
            to_trajectory(seq, start));
  EXPECT_EQ(std::get<LowLevelControl>(encode_control(seq, ControlKind::LowLevel, start, vocab)),
            to_lowlevel(seq, vocab));
  EXPECT_THROW(to_text(ActionSequence({AP::Null})), std::invalid_argument);

  // Every sequence of length <= 4 over the motion primitives gets a distinct encoding.
  for (auto kind : {ControlKind::Text, ControlKind::Trajectory, ControlKind::LowLevel}) {
    std::set<std::string> seen;
    int total = 0;
    for (int len = 1; len <= 4; ++len) {
      int count = 1;
      for (int i = 0; i < len; ++i) count *= 3;
      for (int code = 0; code < count; ++code) {
        std::vector<AP> items;
        for (int i = 0, c = code; i < len; ++i, c /= 3) items.push_back(static_cast<AP>(c % 3));
        seen.insert(wire::to_json(encode_control(ActionSequence(items), kind, start, vocab)).dump());
        ++total;
      }
    }
    EXPECT_EQ(static_cast<int>(seen.size()), total) << to_string(kind);
  }
}

TEST(Wire, RoundTrips) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto seq = random_sequence(rng);
    EXPECT_EQ(wire::actions_from_json(wire::to_json(seq)), seq);
    const Pose p{uniform01(rng), uniform01(rng), Heading(uniform_int(rng, 0, 15))};
    EXPECT_EQ(wire::pose_from_json(wire::to_json(p)), p);
    for (auto kind : {ControlKind::Text, ControlKind::Trajectory, ControlKind::LowLevel}) {
      const auto c = encode_control(seq, kind, p, ActionVocabulary::identity());
      EXPECT_EQ(wire::control_from_json(wire::to_json(c)), c);
    }
  }
  Observation o;
  o.kind = ObservationKind::Panorama;
  o.fov_deg = 360.0;
  o.columns = {{1.25f, 2, 3}, {20.0f, 0, 0}};
  const auto j = wire::to_json(o);
  EXPECT_EQ(j.dump(), R"({"cols":[[1.25,2,3],[20.0,0,0]],"kind":"pano","width":2})");
  EXPECT_TRUE(wire::observation_from_json(j).same_content(o));
  auto bad = j;
  bad["width"] = 3;
  EXPECT_THROW(wire::observation_from_json(bad), std::invalid_argument);
}
