#include "wmbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wmbench {

namespace {

void require_nonempty(std::span<const EpisodeResult> results) {
  if (results.empty()) throw MetricError("metric over an empty result set");
}

void check_lengths(const EpisodeResult& r) {
  if (!(r.path_length >= 0.0) || !(r.shortest_length >= 0.0)) {
    throw MetricError("negative path length in episode " + r.episode_id);
  }
}

// L* / max(L, L*) with the start-at-goal convention.
double efficiency(const EpisodeResult& r) {
  check_lengths(r);
  if (r.shortest_length == 0.0) return 1.0;
  return r.shortest_length / std::max(r.path_length, r.shortest_length);
}

int sigma_of(const EpisodeResult& r) {
  if (!r.answer_score) return 1;
  const int s = *r.answer_score;
  if (s < 1 || s > 5) throw MetricError("answer score out of [1,5] in episode " + r.episode_id);
  return s;
}

}  // namespace

double success_rate(std::span<const EpisodeResult> results) {
  require_nonempty(results);
  const auto n = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.success; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(results.size());
}

double spl(std::span<const EpisodeResult> results) {
  require_nonempty(results);
  double sum = 0.0;
  for (const auto& r : results) {
    const double e = efficiency(r);
    if (r.success) sum += e;
  }
  return 100.0 * sum / static_cast<double>(results.size());
}

double spl_aeqa(std::span<const EpisodeResult> results) {
  require_nonempty(results);
  double sum = 0.0;
  for (const auto& r : results) {
    const double e = efficiency(r);
    const int s = sigma_of(r);
    if (r.answer) sum += (s - 1) / 4.0 * e;
  }
  return 100.0 * sum / static_cast<double>(results.size());
}

double answering_score(std::span<const EpisodeResult> results) {
  require_nonempty(results);
  double sum = 0.0;
  for (const auto& r : results) sum += r.answer ? sigma_of(r) : 1;
  const double mean = sum / static_cast<double>(results.size());
  return (mean - 1.0) / 4.0 * 100.0;
}

double mean_trajectory(std::span<const EpisodeResult> results) {
  require_nonempty(results);
  double sum = 0.0;
  for (const auto& r : results) {
    check_lengths(r);
    sum += r.task == TaskKind::InfoSeek ? r.path_length : static_cast<double>(r.steps_executed);
  }
  return sum / static_cast<double>(results.size());
}

SuiteReport make_report(std::span<const EpisodeResult> results, std::string model, int M, std::uint64_t seed,
                        std::string fingerprint) {
  SuiteReport rep{std::move(model), M, seed, std::move(fingerprint), {}};
  for (TaskKind t : {TaskKind::ImageNav, TaskKind::AR, TaskKind::InfoSeek}) {
    std::vector<EpisodeResult> sub;
    for (const auto& r : results)
      if (r.task == t) sub.push_back(r);
    if (sub.empty()) continue;
    // Canonical order keeps floating-point sums independent of input order.
    std::sort(sub.begin(), sub.end(), [](const auto& a, const auto& b) { return a.episode_id < b.episode_id; });
    TaskRow row;
    row.task = t;
    row.episodes = static_cast<int>(sub.size());
    row.successes = static_cast<int>(std::count_if(sub.begin(), sub.end(), [](const auto& r) { return r.success; }));
    row.sr = success_rate(sub);
    row.spl = spl(sub);
    row.mean_traj = mean_trajectory(sub);
    if (t == TaskKind::InfoSeek) {
      row.ans_score = answering_score(sub);
      row.spl_aeqa = spl_aeqa(sub);
    }
    double inf = 0.0;
    for (const auto& r : sub) {
      inf += r.wm_inference_count;
      row.fallbacks += r.fallback_count;
    }
    row.wm_inferences_mean = inf / static_cast<double>(sub.size());
    rep.rows.push_back(row);
  }
  return rep;
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string report_csv(const SuiteReport& r) {
  std::ostringstream os;
  os << kReportHeader << '\n';
  for (const auto& row : r.rows) {
    os << to_string(row.task) << ',' << r.model << ',' << r.M << ',' << fmt4(row.sr) << ',' << fmt4(row.spl) << ','
       << fmt4(row.mean_traj) << ',' << (row.ans_score ? fmt4(*row.ans_score) : "") << ','
       << (row.spl_aeqa ? fmt4(*row.spl_aeqa) : "") << ',' << fmt4(row.wm_inferences_mean) << ',' << r.seed << '\n';
  }
  return os.str();
}

std::string report_table(const SuiteReport& r) {
  std::ostringstream os;
  char line[256];
  os << "model " << r.model << "  M " << r.M << "  seed " << r.seed;
  if (!r.fingerprint.empty()) os << "  config " << r.fingerprint;
  os << "\nmean_traj unit: steps for ar/imagenav, meters for infoseek\n";
  std::snprintf(line, sizeof line, "%-9s %5s %8s %8s %10s %9s %9s %8s %9s\n", "task", "N", "SR", "SPL", "mean_traj",
                "ans", "spl_aeqa", "wm_inf", "fallback");
  os << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof line, "%-9s %5d %8.2f %8.2f %10.2f %9s %9s %8.2f %9d\n", to_string(row.task).c_str(),
                  row.episodes, row.sr, row.spl, row.mean_traj,
                  row.ans_score ? fmt4(*row.ans_score).c_str() : "-", row.spl_aeqa ? fmt4(*row.spl_aeqa).c_str() : "-",
                  row.wm_inferences_mean, row.fallbacks);
    os << line;
  }
  return os.str();
}

}  // namespace wmbench
