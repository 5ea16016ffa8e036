#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmbench/tasks.hpp"

namespace wmbench {

class MetricError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// All percentages are in [0, 100]. Every function throws MetricError on an
// empty result set or on out-of-domain inputs.
double success_rate(std::span<const EpisodeResult> results);
double spl(std::span<const EpisodeResult> results);
double spl_aeqa(std::span<const EpisodeResult> results);
double answering_score(std::span<const EpisodeResult> results);
/// Executed primitives for AR/ImageNav, meters travelled for InfoSeek.
double mean_trajectory(std::span<const EpisodeResult> results);

struct TaskRow {
  TaskKind task = TaskKind::ImageNav;
  int episodes = 0;
  int successes = 0;
  double sr = 0.0;
  double spl = 0.0;
  double mean_traj = 0.0;
  std::optional<double> ans_score;  // InfoSeek only
  std::optional<double> spl_aeqa;   // InfoSeek only
  double wm_inferences_mean = 0.0;
  int fallbacks = 0;
};

struct SuiteReport {
  std::string model;
  int M = 0;  // 0 when the suite mixes per-task planner defaults
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<TaskRow> rows;  // one per task present, in TaskKind order
};

/// Aggregates results per task. Ordering of `results` does not matter.
SuiteReport make_report(std::span<const EpisodeResult> results, std::string model, int M, std::uint64_t seed,
                        std::string fingerprint = {});

inline constexpr const char* kReportHeader = "task,model,M,SR,SPL,mean_traj,ans_score,spl_aeqa,wm_inferences_mean,seed";

/// Machine CSV, header included; numbers printed with fixed precision.
std::string report_csv(const SuiteReport& r);
/// Aligned table for stdout; notes the per-task trajectory unit.
std::string report_table(const SuiteReport& r);

/// Fixed 4-decimal formatting used in every CSV.
std::string fmt4(double v);

}  // namespace wmbench
