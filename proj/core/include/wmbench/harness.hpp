#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmbench/count_prior.hpp"
#include "wmbench/datagen.hpp"
#include "wmbench/metrics.hpp"
#include "wmbench/scenegen.hpp"

namespace wmbench {

struct DecouplingCell {
  std::string model;  // model spec string
};

struct RunConfig {
  std::string suite;               // suite.jsonl path
  std::string model = "none";      // model spec, "none" runs without a world model
  std::optional<int> M;            // planner overrides applied to every episode
  std::optional<int> L;
  std::optional<int> commit_len;
  int jobs = 1;
  std::uint64_t seed = 0;
  int seeds = 1;                   // sweeps average over seed, seed+1, ...
  std::string out = "out";
  std::string dataset;             // CountPrior training data; generated when empty
  std::vector<int> m_values = {1, 2, 4, 8};
  std::string inference_model = "noisy-action:0.25";
  std::vector<int> data_sizes = {10, 50, 200, 800};
  int data_scenes = 60;            // scenes generated for the data sweep when no dataset is given
  double data_scale = 0.5;
  std::vector<std::string> decoupling_models = {
      "oracle",           "noisy-action:0.1", "noisy-action:0.25", "noisy-action:0.5", "noisy-action:0.75",
      "noisy-obs:0.25:0.05", "noisy-obs:0.5:0.1", "noisy-obs:1:0.2", "noisy-obs:2:0.4", "frozen"};
  int eval_items = 60;             // controllability probes per sweep

  void validate() const;
  nlohmann::json to_json() const;
  /// Stable hash of the full configuration.
  std::string fingerprint() const;
};

/// Fields present in `j` override `base`.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Resolves a model spec; "none" yields nullopt. CountPrior specs receive `prior`.
std::optional<WorldModelConfig> resolve_model(const std::string& spec,
                                              std::shared_ptr<const CountPriorStats> prior = nullptr);

void apply_overrides(const RunConfig& config, std::vector<EpisodeSpec>& specs);

/// Runs every episode with `jobs` workers. Results come back in suite order
/// regardless of completion order.
std::vector<EpisodeResult> run_episodes(const LoadedSuite& suite, const WorldModelConfig* model, std::uint64_t seed,
                                        int jobs);

struct RunOutput {
  SuiteReport report;
  std::vector<EpisodeResult> results;
  std::string csv;
  std::string jsonl;
};

/// `run`: executes the suite once and writes report.csv and episodes.jsonl
/// into config.out when `write` is set.
RunOutput run_suite(const RunConfig& config, bool write = true,
                    std::shared_ptr<const CountPriorStats> prior = nullptr);

/// Pooled success rate over all episodes.
double pooled_sr(const std::vector<EpisodeResult>& results);

struct InferenceRow {
  int M = 0;
  double sr = 0.0;  // mean over seeds
  double sr_imagenav = 0.0;
  double sr_ar = 0.0;
  double wm_inferences_mean = 0.0;
  std::vector<double> sr_per_seed;
};
std::vector<InferenceRow> sweep_inference(const RunConfig& config, bool write = true);
std::string inference_csv(const std::vector<InferenceRow>& rows);

struct DataRow {
  int size = 0;
  double controllability = 0.0;
  double sr = 0.0;  // AR success rate, mean over seeds
  std::vector<double> sr_per_seed;
};
std::vector<DataRow> sweep_data(const RunConfig& config, bool write = true);
std::string data_csv(const std::vector<DataRow>& rows);

struct DecouplingRow {
  std::string variant;
  double quality = 0.0;
  double controllability = 0.0;
  double sr = 0.0;
  std::vector<double> sr_per_seed;
};
std::vector<DecouplingRow> sweep_decoupling(const RunConfig& config, bool write = true);
std::string decoupling_csv(const std::vector<DecouplingRow>& rows);

/// Deterministic controllability probes: poses and L=4 heuristic plans drawn
/// from the suite's scenes.
std::vector<ControlEvalItem> make_probe_items(const LoadedSuite& suite, int count, std::uint64_t seed);

/// Trajectory dataset for the data sweep, from `scenes` freshly generated
/// layouts that share no seed with the evaluation suite.
std::vector<TrajectoryRecord> make_training_records(int scenes, double scale, std::uint64_t seed, int jobs,
                                                    std::size_t at_least = 0);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace wmbench
