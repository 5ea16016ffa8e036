#include <benchmark/benchmark.h>

#include "wmbench/datagen.hpp"
#include "wmbench/planner.hpp"
#include "wmbench/render.hpp"
#include "wmbench/scenegen.hpp"
#include "wmbench/world_model.hpp"

using namespace wmbench;

namespace {

const GridScene& scene() {
  static const GridScene s = gen_scene(1);
  return s;
}

Pose start_pose() {
  const auto free = scene().free_cells();
  return scene().center_of(free[free.size() / 2], Heading(3));
}

}  // namespace

static void BM_RenderPanorama(benchmark::State& state) {
  const Pose p = start_pose();
  for (auto _ : state) benchmark::DoNotOptimize(render_panorama(scene(), p));
}
BENCHMARK(BM_RenderPanorama);

static void BM_RaycastView(benchmark::State& state) {
  const Pose p = start_pose();
  for (auto _ : state) benchmark::DoNotOptimize(raycast_view(scene(), p));
}
BENCHMARK(BM_RaycastView);

static void BM_ShortestPath(benchmark::State& state) {
  const auto free = scene().free_cells();
  const Pose from = scene().center_of(free.front(), Heading(0));
  const Cell to = free.back();
  for (auto _ : state) benchmark::DoNotOptimize(shortest_path(scene(), from, to));
}
BENCHMARK(BM_ShortestPath);

static void BM_GeodesicField(benchmark::State& state) {
  const Cell c = scene().cell_of(start_pose());
  for (auto _ : state) benchmark::DoNotOptimize(GeodesicField(scene(), c));
}
BENCHMARK(BM_GeodesicField);

static void BM_PlanStepOracle(benchmark::State& state) {
  const Pose p = start_pose();
  const auto cfg = parse_model_spec("oracle");
  auto model = make_world_model(cfg, {&scene(), &p});
  const Panorama obs = render_panorama(scene(), p);
  PlannerConfig pc{static_cast<int>(state.range(0)), 4, 2, ProposalPolicy::Heuristic, false};
  TaskGoal goal;
  goal.kind = TaskKind::ImageNav;
  goal.goal_pano = render_panorama(scene(), scene().center_of(scene().free_cells().front()));
  goal.goal_ego = front_view(goal.goal_pano);
  for (auto _ : state) {
    PlannerState st;
    st.rng = Rng(7);
    benchmark::DoNotOptimize(plan_step(pc, st, obs, p, goal, model.get(), nullptr));
  }
}
BENCHMARK(BM_PlanStepOracle)->Arg(1)->Arg(4)->Arg(8);

static void BM_LeafScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  DistanceMatrix D(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) D[i][j] = D[j][i] = uniform01(rng) * 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(leaf_scores(D, 1.7));
}
BENCHMARK(BM_LeafScores)->Arg(64)->Arg(256);

static void BM_GenerateDataset(benchmark::State& state) {
  DatagenParams p;
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(scene(), "bench", p, 1));
}
BENCHMARK(BM_GenerateDataset)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
