#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "wmbench/datagen.hpp"
#include "wmbench/render.hpp"
#include "wmbench/scenegen.hpp"

using namespace wmbench;
using namespace wmbench::testing;

namespace {

// Independent leaf-score reference: eccentricity and mean over reachable peers.
std::vector<double> leaf_scores_reference(const DistanceMatrix& D, double alpha) {
  std::vector<double> out;
  for (std::size_t i = 0; i < D.size(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < D.size(); ++j)
      if (j != i && std::isfinite(D[i][j])) row.push_back(D[i][j]);
    if (row.empty()) {
      out.push_back(0.0);
      continue;
    }
    double mx = row[0], sum = 0.0;
    for (double d : row) {
      mx = std::max(mx, d);
      sum += d;
    }
    out.push_back(mx + alpha * sum / static_cast<double>(row.size()));
  }
  return out;
}

DistanceMatrix random_metric(Rng& rng, int n) {
  // Points on a line with occasional disconnected groups.
  std::vector<double> x(static_cast<std::size_t>(n));
  std::vector<int> comp(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = uniform01(rng) * 10.0;
    comp[static_cast<std::size_t>(i)] = uniform_int(rng, 0, 2);
  }
  DistanceMatrix D(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < D.size(); ++i)
    for (std::size_t j = 0; j < D.size(); ++j)
      D[i][j] = i == j ? 0.0 : comp[i] == comp[j] ? std::abs(x[i] - x[j]) : kNoPath;
  return D;
}

void expect_replays(const GridScene& scene, const TrajectoryRecord& r) {
  ASSERT_FALSE(r.steps.empty());
  EXPECT_EQ(r.steps.front().action, ActionPrimitive::Null);
  Pose p = r.steps.front().pose;
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    if (k > 0) {
      ASSERT_NE(r.steps[k].action, ActionPrimitive::Null);
      p = apply_action(scene, p, r.steps[k].action);
    }
    ASSERT_EQ(p, r.steps[k].pose) << "step " << k;
    ASSERT_EQ(render_panorama(scene, p), r.steps[k].panorama) << "step " << k;
  }
  EXPECT_EQ(r.id, record_id(r));
}

GridScene long_corridor() {
  std::vector<std::string> rows(5, std::string(72, '.'));
  for (auto& row : rows) row.front() = row.back() = '#';
  rows.front() = rows.back() = std::string(72, '#');
  return scene_from_rows(rows);
}

}  // namespace

TEST(LeafScores, WorkedExamples) {
  const auto two = leaf_scores({{0, 4}, {4, 0}}, 1.7);
  EXPECT_NEAR(two[0], 10.8, 1e-12);
  EXPECT_NEAR(two[1], 10.8, 1e-12);

  EXPECT_EQ(leaf_scores({{0}}, 1.7), std::vector<double>{0.0});

  const auto line = leaf_scores({{0, 1, 2}, {1, 0, 1}, {2, 1, 0}}, 1.7);
  EXPECT_NEAR(line[0], 4.55, 1e-12);
  EXPECT_NEAR(line[1], 2.7, 1e-12);
  EXPECT_NEAR(line[2], 4.55, 1e-12);
}

TEST(LeafScores, MatchesReferenceOnRandomMatrices) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto D = random_metric(rng, uniform_int(rng, 1, 12));
    const double alpha = uniform01(rng) * 3.0;
    const auto got = leaf_scores(D, alpha);
    const auto want = leaf_scores_reference(D, alpha);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(LeafScores, RejectsMalformedMatrices) {
  EXPECT_THROW(leaf_scores({{0, 1}, {2, 0}}, 1.0), std::invalid_argument);
  EXPECT_THROW(leaf_scores({{1}}, 1.0), std::invalid_argument);
  EXPECT_THROW(leaf_scores({{0, 1}}, 1.0), std::invalid_argument);
}

TEST(Prune, KeptPointsRespectRadiusAndAreMaximal) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto D = random_metric(rng, uniform_int(rng, 1, 20));
    const auto scores = leaf_scores(D, 1.7);
    const double r_f = 0.5 + uniform01(rng) * 3.0;
    const auto kept = prune_by_radius(D, scores, r_f);
    ASSERT_FALSE(kept.empty());
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = a + 1; b < kept.size(); ++b) EXPECT_GE(D[kept[a]][kept[b]], r_f);
    // Every rejected point sits within r_f of a kept point with a score at least as high.
    for (std::size_t i = 0; i < D.size(); ++i) {
      if (std::find(kept.begin(), kept.end(), i) != kept.end()) continue;
      const bool shadowed = std::any_of(kept.begin(), kept.end(),
                                        [&](std::size_t k) { return D[i][k] < r_f && scores[k] >= scores[i]; });
      EXPECT_TRUE(shadowed) << "point " << i;
    }
    // Acceptance order is non-increasing in score.
    for (std::size_t a = 1; a < kept.size(); ++a) EXPECT_GE(scores[kept[a - 1]], scores[kept[a]]);
  }
}

TEST(Generate, SingleWaypointGivesOneFrameRecord) {
  const auto scene = open_room(10, 10);
  WaypointSet ws;
  ws.points = {{4, 4}};
  ws.D = {{0.0}};
  ws.scores = {0.0};
  ws.sampled = 1;
  ws.r_f = 3.0;
  Rng rng(1);
  const auto records = generate_trajectories(scene, ws, 0.2, rng);
  ASSERT_EQ(records.size(), 1u);
  ASSERT_EQ(records[0].steps.size(), 1u);
  EXPECT_EQ(scene.cell_of(records[0].steps[0].pose), (Cell{4, 4}));
  expect_replays(scene, records[0]);
}

TEST(Generate, TwoDistantWaypointsGiveOneTrajectory) {
  const auto scene = long_corridor();
  const std::vector<Cell> pts = {{5, 2}, {65, 2}};
  WaypointSet ws;
  ws.points = pts;
  ws.D = geodesic_matrix(scene, pts);
  EXPECT_NEAR(ws.D[0][1], 6.0, 1e-9);
  ws.scores = leaf_scores(ws.D, 1.7);
  ws.sampled = 2;
  ws.r_f = 3.0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(seed);
    const auto records = generate_trajectories(scene, ws, 0.2, rng);
    ASSERT_EQ(records.size(), 1u);
    expect_replays(scene, records[0]);
    const Cell a = scene.cell_of(records[0].steps.front().pose);
    const Cell b = scene.cell_of(records[0].steps.back().pose);
    EXPECT_TRUE((a == pts[0] && std::abs(b.x - pts[1].x) <= 1) || (a == pts[1] && std::abs(b.x - pts[0].x) <= 1));
  }
}

TEST(Generate, CoverageSpacingAndReplayOnRandomRooms) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto scene = random_scene(seed, 20, 20, 0.08);
    Rng rng(seed);
    const auto ws = sample_waypoints(scene, 4.0, 1.7, 0.6, 40, rng);
    for (std::size_t a = 0; a < ws.points.size(); ++a)
      for (std::size_t b = a + 1; b < ws.points.size(); ++b) EXPECT_GE(ws.D[a][b], ws.r_f);

    const auto records = generate_trajectories(scene, ws, 0.2, rng);
    ASSERT_FALSE(records.empty());
    for (const auto& r : records) expect_replays(scene, r);
    for (const auto& w : ws.points) {
      const GeodesicField field(scene, w);
      bool covered = false;
      for (const auto& r : records)
        for (const auto& s : r.steps) {
          const auto d = field.distance(scene.cell_of(s.pose));
          covered = covered || (d && *d <= ws.r_f);
        }
      EXPECT_TRUE(covered) << "waypoint " << w.x << "," << w.y << " seed " << seed;
    }
  }
}

TEST(Generate, DatasetIsDeterministicPerSeed) {
  const auto scene = gen_scene(3, SceneGenParams{40, 30, 2, 0.2});
  DatagenParams p;
  p.scale = 0.5;
  const auto a = generate_dataset(scene, "s", p, 9);
  const auto b = generate_dataset(scene, "s", p, 9);
  EXPECT_EQ(a, b);
  for (const auto& r : a) EXPECT_EQ(r.scene, "s");
}

TEST(FilterOverlap, StationaryKeptAndSpinningDropped) {
  const auto scene = open_room(12, 12);
  const Pose p = scene.center_of({6, 6}, Heading(0));
  TrajectoryRecord still;
  still.steps.push_back({p, ActionPrimitive::Null, render_panorama(scene, p)});
  for (int k = 0; k < 3; ++k) still.steps.push_back({p, ActionPrimitive::Forward, render_panorama(scene, p)});
  EXPECT_DOUBLE_EQ(mean_consecutive_overlap(still, 0.1), 1.0);

  TrajectoryRecord spin;
  for (int k = 0; k < 4; ++k) {
    const Pose q{p.x, p.y, Heading(k % 2 == 0 ? 0 : 8)};
    spin.steps.push_back({q, k == 0 ? ActionPrimitive::Null : ActionPrimitive::TurnLeft, render_panorama(scene, q)});
  }
  EXPECT_DOUBLE_EQ(mean_consecutive_overlap(spin, 0.1), 0.0);

  TrajectoryRecord single;
  single.steps.push_back(still.steps.front());
  EXPECT_DOUBLE_EQ(mean_consecutive_overlap(single, 0.1), 1.0);

  const std::vector<TrajectoryRecord> all = {still, spin, single};
  const auto kept = filter_overlap(all, 0.55);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], still);
  EXPECT_EQ(kept[1], single);
}

TEST(FilterOverlap, MatchesPerRecordThreshold) {
  const auto scene = gen_scene(8, SceneGenParams{40, 30, 2, 0.2});
  DatagenParams p;
  p.scale = 0.5;
  const auto records = generate_dataset(scene, "s", p, 2);
  ASSERT_GT(records.size(), 1u);
  for (double threshold : {0.3, 0.55, 0.8}) {
    std::vector<TrajectoryRecord> want;
    for (const auto& r : records) {
      double sum = 0.0;
      for (std::size_t k = 1; k < r.steps.size(); ++k) {
        const auto& a = r.steps[k - 1];
        const auto& b = r.steps[k];
        sum += overlap_ratio(front_view(a.panorama), a.pose, front_view(b.panorama), b.pose, 0.1);
      }
      const double mean = r.steps.size() < 2 ? 1.0 : sum / static_cast<double>(r.steps.size() - 1);
      if (mean >= threshold) want.push_back(r);
    }
    EXPECT_EQ(filter_overlap(records, threshold), want);
  }
}

TEST(DatasetIo, RoundTripAndManifestCounts) {
  const auto scene = gen_scene(4, SceneGenParams{40, 30, 2, 0.2});
  DatagenParams p;
  p.scale = 0.5;
  auto records = generate_dataset(scene, "scene_a", p, 1);
  ASSERT_GE(records.size(), 3u);
  records.resize(3);
  records[2].scene = "scene_b";
  records[2].id = record_id(records[2]);

  TempDir dir;
  write_dataset(records, p, dir.str());
  DatasetManifest m;
  const auto back = read_dataset(dir.str(), &m);
  EXPECT_EQ(back, records);
  EXPECT_EQ(m.trajectories, 3);
  EXPECT_EQ(m.scenes, 2);
  long long frames = 0;
  for (const auto& r : records) frames += static_cast<long long>(r.steps.size());
  EXPECT_EQ(m.frames, frames);
  EXPECT_EQ(m.poses, frames);
  EXPECT_EQ(m.actions, frames);
  EXPECT_EQ(m.ids.size(), 3u);
  EXPECT_DOUBLE_EQ(m.params.scale, 0.5);
}

TEST(DatasetIo, TamperedRecordIsNamed) {
  const auto scene = gen_scene(4, SceneGenParams{40, 30, 2, 0.2});
  DatagenParams p;
  p.scale = 0.5;
  auto records = generate_dataset(scene, "scene_a", p, 1);
  records.resize(std::min<std::size_t>(records.size(), 3));
  TempDir dir;
  write_dataset(records, p, dir.str());

  const auto& victim = records.back();
  const auto file = std::filesystem::path(dir.str()) / "records" / (victim.id + ".json");
  std::stringstream ss;
  ss << std::ifstream(file, std::ios::binary).rdbuf();
  std::string text = ss.str();
  const auto at = text.find("scene_a");
  ASSERT_NE(at, std::string::npos);
  text[at + 6] = 'b';
  std::ofstream(file, std::ios::binary) << text;

  try {
    read_dataset(dir.str());
    FAIL() << "tampering went unnoticed";
  } catch (const DatasetIntegrityError& e) {
    EXPECT_EQ(e.record(), victim.id);
  }
}

TEST(DatasetIo, RefusesRecordsWithStaleIds) {
  const auto scene = open_room(8, 8);
  TrajectoryRecord r;
  const Pose p = scene.center_of({3, 3});
  r.steps.push_back({p, ActionPrimitive::Null, render_panorama(scene, p)});
  r.id = "0000000000000000";
  TempDir dir;
  const std::vector<TrajectoryRecord> one = {r};
  EXPECT_THROW(write_dataset(one, DatagenParams{}, dir.str()), DatasetIntegrityError);
}

TEST(DatagenParams, Validation) {
  DatagenParams p;
  EXPECT_NO_THROW(p.validate());
  p.eta = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.r_f = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.scale = 0.5;
  EXPECT_DOUBLE_EQ(p.effective_rf(), 1.5);
  EXPECT_DOUBLE_EQ(p.effective_rho(), 16.0);
}
