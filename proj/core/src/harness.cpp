#include "wmbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "wmbench/planner.hpp"

namespace wmbench {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (seeds < 1) throw std::invalid_argument("seeds must be at least 1");
  if (M && *M < 1) throw std::invalid_argument("M must be at least 1");
  if (L && *L < 1) throw std::invalid_argument("L must be at least 1");
  if (commit_len && *commit_len < 1) throw std::invalid_argument("commit_len must be at least 1");
  if (eval_items < 1) throw std::invalid_argument("eval_items must be at least 1");
  for (int m : m_values)
    if (m < 1) throw std::invalid_argument("m_values must be positive");
  for (int s : data_sizes)
    if (s < 0) throw std::invalid_argument("data_sizes must be non-negative");
}

json RunConfig::to_json() const {
  json j = {{"suite", suite},
            {"model", model},
            {"jobs", jobs},
            {"seed", seed},
            {"seeds", seeds},
            {"out", out},
            {"dataset", dataset},
            {"m_values", m_values},
            {"inference_model", inference_model},
            {"data_sizes", data_sizes},
            {"data_scenes", data_scenes},
            {"data_scale", data_scale},
            {"decoupling_models", decoupling_models},
            {"eval_items", eval_items}};
  j["M"] = M ? json(*M) : json(nullptr);
  j["L"] = L ? json(*L) : json(nullptr);
  j["commit_len"] = commit_len ? json(*commit_len) : json(nullptr);
  return j;
}

std::string RunConfig::fingerprint() const {
  json j = to_json();
  // Execution details that cannot change results.
  j.erase("jobs");
  j.erase("out");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> known = {
      "suite",      "model",          "M",           "L",           "commit_len",        "jobs",
      "seed",       "seeds",          "out",         "dataset",     "m_values",          "inference_model",
      "data_sizes", "data_scenes",    "data_scale",  "decoupling_models", "eval_items"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw std::invalid_argument("unknown config key " + k);
  }
  auto opt_int = [&](const char* key, std::optional<int>& dst) {
    if (j.contains(key)) dst = j[key].is_null() ? std::nullopt : std::optional<int>(j[key].get<int>());
  };
  c.suite = j.value("suite", c.suite);
  c.model = j.value("model", c.model);
  opt_int("M", c.M);
  opt_int("L", c.L);
  opt_int("commit_len", c.commit_len);
  c.jobs = j.value("jobs", c.jobs);
  c.seed = j.value("seed", c.seed);
  c.seeds = j.value("seeds", c.seeds);
  c.out = j.value("out", c.out);
  c.dataset = j.value("dataset", c.dataset);
  c.m_values = j.value("m_values", c.m_values);
  c.inference_model = j.value("inference_model", c.inference_model);
  c.data_sizes = j.value("data_sizes", c.data_sizes);
  c.data_scenes = j.value("data_scenes", c.data_scenes);
  c.data_scale = j.value("data_scale", c.data_scale);
  c.decoupling_models = j.value("decoupling_models", c.decoupling_models);
  c.eval_items = j.value("eval_items", c.eval_items);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

std::optional<WorldModelConfig> resolve_model(const std::string& spec, std::shared_ptr<const CountPriorStats> prior) {
  if (spec == "none" || spec.empty()) return std::nullopt;
  WorldModelConfig c = parse_model_spec(spec);
  if (c.variant == ModelVariant::CountPrior) {
    c.prior = prior ? prior : std::make_shared<const CountPriorStats>();
  }
  c.validate();
  return c;
}

void apply_overrides(const RunConfig& config, std::vector<EpisodeSpec>& specs) {
  for (auto& s : specs) {
    if (config.M) s.planner.M = *config.M;
    if (config.L) s.planner.L = *config.L;
    if (config.commit_len) s.planner.commit_len = *config.commit_len;
    s.planner.commit_len = std::min(s.planner.commit_len, s.planner.L);
    s.planner.validate();
  }
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(jobs, n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  // Report the lowest-index failure so errors do not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<EpisodeResult> run_episodes(const LoadedSuite& suite, const WorldModelConfig* model, std::uint64_t seed,
                                        int jobs) {
  std::vector<EpisodeResult> results(suite.specs.size());
  parallel_for(static_cast<int>(suite.specs.size()), jobs, [&](int i) {
    const auto& spec = suite.specs[static_cast<std::size_t>(i)];
    results[static_cast<std::size_t>(i)] = run_episode(spec, suite.scenes.at(spec.scene_path), model, seed);
  });
  return results;
}

namespace {

LoadedSuite load_for(const RunConfig& config) {
  if (config.suite.empty()) throw std::invalid_argument("no suite given");
  LoadedSuite suite = load_suite(config.suite);
  apply_overrides(config, suite.specs);
  return suite;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string jsonl_of(const std::vector<EpisodeResult>& results) {
  std::string out;
  for (const auto& r : results) out += to_json(r).dump() + "\n";
  return out;
}

LoadedSuite only_task(const LoadedSuite& suite, TaskKind task) {
  LoadedSuite out;
  out.scenes = suite.scenes;
  for (const auto& s : suite.specs)
    if (s.task == task) out.specs.push_back(s);
  return out;
}

double sr_of(const std::vector<EpisodeResult>& results, TaskKind task) {
  std::vector<EpisodeResult> sub;
  for (const auto& r : results)
    if (r.task == task) sub.push_back(r);
  return sub.empty() ? 0.0 : success_rate(sub);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string seed_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt4(v[i]);
  return s;
}

}  // namespace

double pooled_sr(const std::vector<EpisodeResult>& results) {
  return results.empty() ? 0.0 : success_rate(results);
}

RunOutput run_suite(const RunConfig& config, bool write, std::shared_ptr<const CountPriorStats> prior) {
  config.validate();
  const LoadedSuite suite = load_for(config);
  const auto model = resolve_model(config.model, std::move(prior));
  RunOutput out;
  out.results = run_episodes(suite, model ? &*model : nullptr, config.seed, config.jobs);
  out.report = make_report(out.results, model ? model->label() : "none", config.M.value_or(0), config.seed,
                           config.fingerprint());
  out.csv = out.results.empty() ? std::string(kReportHeader) + "\n" : report_csv(out.report);
  out.jsonl = jsonl_of(out.results);
  if (write) {
    write_file(fs::path(config.out) / "report.csv", out.csv);
    write_file(fs::path(config.out) / "episodes.jsonl", out.jsonl);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<InferenceRow> sweep_inference(const RunConfig& config, bool write) {
  config.validate();
  const LoadedSuite base = load_for(config);
  const auto model = resolve_model(config.inference_model);
  std::vector<InferenceRow> rows;
  for (int M : config.m_values) {
    LoadedSuite suite = base;
    for (auto& s : suite.specs) s.planner.M = M;
    InferenceRow row;
    row.M = M;
    std::vector<double> nav, ar, inf;
    for (int k = 0; k < config.seeds; ++k) {
      const auto results = run_episodes(suite, model ? &*model : nullptr, config.seed + k, config.jobs);
      row.sr_per_seed.push_back(pooled_sr(results));
      nav.push_back(sr_of(results, TaskKind::ImageNav));
      ar.push_back(sr_of(results, TaskKind::AR));
      double n = 0.0;
      for (const auto& r : results) n += r.wm_inference_count;
      inf.push_back(results.empty() ? 0.0 : n / static_cast<double>(results.size()));
    }
    row.sr = mean(row.sr_per_seed);
    row.sr_imagenav = mean(nav);
    row.sr_ar = mean(ar);
    row.wm_inferences_mean = mean(inf);
    rows.push_back(row);
  }
  if (write) write_file(fs::path(config.out) / "sweep_inference.csv", inference_csv(rows));
  return rows;
}

std::string inference_csv(const std::vector<InferenceRow>& rows) {
  std::ostringstream os;
  os << "M,SR,SR_imagenav,SR_ar,wm_inferences_mean,SR_per_seed\n";
  for (const auto& r : rows) {
    os << r.M << ',' << fmt4(r.sr) << ',' << fmt4(r.sr_imagenav) << ',' << fmt4(r.sr_ar) << ','
       << fmt4(r.wm_inferences_mean) << ',' << seed_list(r.sr_per_seed) << '\n';
  }
  return os.str();
}

std::vector<ControlEvalItem> make_probe_items(const LoadedSuite& suite, int count, std::uint64_t seed) {
  std::vector<const GridScene*> scenes;
  for (const auto& [name, scene] : suite.scenes) scenes.push_back(&scene);
  if (scenes.empty()) throw std::invalid_argument("suite has no scenes to probe");
  std::vector<ControlEvalItem> items;
  Rng rng(derive_seed({seed, 0x70726f6265ULL}));
  for (int i = 0; i < count; ++i) {
    const GridScene& scene = *scenes[static_cast<std::size_t>(i) % scenes.size()];
    const auto free = scene.free_cells();
    const Cell c = free[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(free.size()) - 1))];
    const Pose pose = scene.center_of(c, Heading(uniform_int(rng, 0, kHeadingCount - 1)));
    std::vector<ActionPrimitive> seq;
    for (int k = 0; k < 4; ++k) seq.push_back(heuristic_next(seq, rng));
    items.push_back(make_eval_item(scene, pose, ActionSequence(std::move(seq)), derive_seed({seed, 0x6974ULL,
                                                                                             static_cast<std::uint64_t>(i)})));
  }
  return items;
}

std::vector<TrajectoryRecord> make_training_records(int scenes, double scale, std::uint64_t seed, int jobs,
                                                    std::size_t at_least) {
  DatagenParams params;
  params.scale = scale;
  std::vector<TrajectoryRecord> all;
  int start = 0;
  int batch = std::max(scenes, 1);
  while (true) {
    std::vector<std::vector<TrajectoryRecord>> per(static_cast<std::size_t>(batch));
    parallel_for(batch, jobs, [&](int i) {
      const int s = start + i;
      const GridScene scene = gen_scene(derive_seed({seed, 0x747261696eULL, static_cast<std::uint64_t>(s)}));
      char name[32];
      std::snprintf(name, sizeof name, "train_%04d", s);
      per[static_cast<std::size_t>(i)] =
          generate_dataset(scene, name, params, derive_seed({seed, static_cast<std::uint64_t>(s)}));
    });
    for (auto& v : per) all.insert(all.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    start += batch;
    if (all.size() >= at_least) break;
    batch = std::max(1, jobs);
  }
  return all;
}

std::vector<DataRow> sweep_data(const RunConfig& config, bool write) {
  config.validate();
  const LoadedSuite base = load_for(config);
  const LoadedSuite ar_suite = only_task(base, TaskKind::AR);
  const auto probes = make_probe_items(base, config.eval_items, config.seed);
  const std::size_t largest =
      config.data_sizes.empty() ? 0 : static_cast<std::size_t>(*std::max_element(config.data_sizes.begin(),
                                                                                 config.data_sizes.end()));
  std::vector<TrajectoryRecord> records;
  if (!config.dataset.empty()) {
    records = read_dataset(config.dataset);
  } else {
    records = make_training_records(config.data_scenes, config.data_scale, config.seed, config.jobs, largest);
  }
  if (records.size() < largest) {
    throw std::invalid_argument("dataset holds " + std::to_string(records.size()) + " trajectories, sweep needs " +
                                std::to_string(largest));
  }
  std::vector<DataRow> rows;
  for (int size : config.data_sizes) {
    auto stats = std::make_shared<CountPriorStats>();
    stats->fit(std::span<const TrajectoryRecord>(records.data(), static_cast<std::size_t>(size)));
    auto model = resolve_model("countprior", stats);
    DataRow row;
    row.size = size;
    row.controllability = controllability(*model, probes);
    for (int k = 0; k < config.seeds; ++k) {
      row.sr_per_seed.push_back(pooled_sr(run_episodes(ar_suite, &*model, config.seed + k, config.jobs)));
    }
    row.sr = mean(row.sr_per_seed);
    rows.push_back(row);
  }
  if (write) write_file(fs::path(config.out) / "sweep_data.csv", data_csv(rows));
  return rows;
}

std::string data_csv(const std::vector<DataRow>& rows) {
  std::ostringstream os;
  os << "size,controllability,SR,SR_per_seed\n";
  for (const auto& r : rows) {
    os << r.size << ',' << fmt4(r.controllability) << ',' << fmt4(r.sr) << ',' << seed_list(r.sr_per_seed) << '\n';
  }
  return os.str();
}

std::vector<DecouplingRow> sweep_decoupling(const RunConfig& config, bool write) {
  config.validate();
  const LoadedSuite suite = load_for(config);
  const auto probes = make_probe_items(suite, config.eval_items, config.seed);
  std::vector<DecouplingRow> rows;
  for (const auto& spec : config.decoupling_models) {
    const auto model = resolve_model(spec);
    if (!model) throw std::invalid_argument("decoupling cells need a world model");
    DecouplingRow row;
    row.variant = model->label();
    const auto eval = evaluate_model(*model, probes);
    row.quality = eval.mean_quality;
    row.controllability = eval.controllability;
    for (int k = 0; k < config.seeds; ++k) {
      row.sr_per_seed.push_back(pooled_sr(run_episodes(suite, &*model, config.seed + k, config.jobs)));
    }
    row.sr = mean(row.sr_per_seed);
    rows.push_back(row);
  }
  if (write) write_file(fs::path(config.out) / "sweep_decoupling.csv", decoupling_csv(rows));
  return rows;
}

std::string decoupling_csv(const std::vector<DecouplingRow>& rows) {
  std::ostringstream os;
  os << "variant,quality,controllability,SR,SR_per_seed\n";
  for (const auto& r : rows) {
    os << '"' << r.variant << '"' << ',' << fmt4(r.quality) << ',' << fmt4(r.controllability) << ',' << fmt4(r.sr)
       << ',' << seed_list(r.sr_per_seed) << '\n';
  }
  return os.str();
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("spearman needs two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean(ra), mb = mean(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace wmbench
