// Command-line front end for the evaluation harness.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "wmbench/datagen.hpp"
#include "wmbench/harness.hpp"
#include "wmbench/scenegen.hpp"

namespace fs = std::filesystem;
using namespace wmbench;

namespace {

struct CommonFlags {
  std::string config, suite, model, out;
  std::uint64_t seed = 0;
  int jobs = 1, seeds = 1, M = 0, L = 0, commit_len = 0;
  CLI::Option *o_suite{}, *o_model{}, *o_out{}, *o_seed{}, *o_jobs{}, *o_seeds{}, *o_M{}, *o_L{}, *o_commit{};
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  f.o_suite = app->add_option("--suite", f.suite, "suite.jsonl");
  f.o_model = app->add_option("--model", f.model, "oracle | frozen | noisy-action:p | noisy-obs:s:pc | countprior | remote:cmd | none");
  f.o_out = app->add_option("--out", f.out, "output directory");
  f.o_seed = app->add_option("--seed", f.seed, "global seed");
  f.o_jobs = app->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  f.o_seeds = app->add_option("--seeds", f.seeds, "seeds averaged by sweeps")->check(CLI::PositiveNumber);
  f.o_M = app->add_option("--M", f.M, "candidate count override")->check(CLI::PositiveNumber);
  f.o_L = app->add_option("--L", f.L, "horizon override")->check(CLI::PositiveNumber);
  f.o_commit = app->add_option("--commit-len", f.commit_len, "commit length override")->check(CLI::PositiveNumber);
}

// Config file first, then flags given on the command line.
RunConfig resolve(const CommonFlags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config(f.config, c);
  if (f.o_suite->count()) c.suite = f.suite;
  if (f.o_model->count()) c.model = f.model;
  if (f.o_out->count()) c.out = f.out;
  if (f.o_seed->count()) c.seed = f.seed;
  if (f.o_jobs->count()) c.jobs = f.jobs;
  if (f.o_seeds->count()) c.seeds = f.seeds;
  if (f.o_M->count()) c.M = f.M;
  if (f.o_L->count()) c.L = f.L;
  if (f.o_commit->count()) c.commit_len = f.commit_len;
  c.validate();
  return c;
}

void print_defaults(const RunConfig& c) { std::cout << "config " << c.to_json().dump() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wmbench: closed-loop evaluation of action-conditioned world models"};
  app.require_subcommand(1);

  CommonFlags run_f, inf_f, data_f, dec_f;
  auto* run = app.add_subcommand("run", "run a suite once; writes report.csv and episodes.jsonl");
  add_common(run, run_f);
  auto* sinf = app.add_subcommand("sweep-inference", "vary candidate count M; writes sweep_inference.csv");
  add_common(sinf, inf_f);
  std::vector<int> m_values;
  sinf->add_option("--m-values", m_values, "M grid");
  auto* sdata = app.add_subcommand("sweep-data", "vary CountPrior training size; writes sweep_data.csv");
  add_common(sdata, data_f);
  std::string dataset;
  std::vector<int> sizes;
  sdata->add_option("--dataset", dataset, "dataset directory (generated when omitted)");
  sdata->add_option("--sizes", sizes, "nested training-set sizes");
  auto* sdec = app.add_subcommand("sweep-decoupling", "quality vs controllability vs SR; writes sweep_decoupling.csv");
  add_common(sdec, dec_f);

  auto* dg = app.add_subcommand("datagen", "generate a trajectory dataset for one scene");
  std::string dg_scene, dg_out = "dataset";
  DatagenParams dgp;
  std::uint64_t dg_seed = 0;
  dg->add_option("--scene", dg_scene, "scene file")->required()->check(CLI::ExistingFile);
  dg->add_option("--rho", dgp.rho, "points per m^2");
  dg->add_option("--alpha", dgp.alpha, "leaf-score weight");
  dg->add_option("--rf", dgp.r_f, "pruning radius, meters");
  dg->add_option("--eta", dgp.eta, "leaf ratio");
  dg->add_option("--floor-min", dgp.floor_min, "minimum sampled points");
  dg->add_option("--scale", dgp.scale, "length scale for rho and r_f");
  dg->add_flag("--filter", dgp.filter, "drop low-overlap trajectories");
  dg->add_option("--filter-threshold", dgp.filter_threshold, "overlap threshold");
  dg->add_option("--seed", dg_seed, "seed");
  dg->add_option("--out", dg_out, "output directory");

  auto* gs = app.add_subcommand("gen-scenes", "generate scene files");
  int gs_count = 10;
  std::uint64_t gs_seed = 0;
  std::string gs_out = "scenes";
  SceneGenParams sgp;
  gs->add_option("--count", gs_count, "number of scenes");
  gs->add_option("--seed", gs_seed, "seed");
  gs->add_option("--out", gs_out, "output directory");
  gs->add_option("--width", sgp.width, "cells");
  gs->add_option("--height", sgp.height, "cells");
  gs->add_option("--rooms", sgp.room_count, "room count");
  gs->add_option("--density", sgp.object_density, "objects per m^2");

  auto* gsu = app.add_subcommand("gen-suite", "generate scenes and an episode suite");
  std::string gsu_task = "standard", gsu_out = "suite";
  int gsu_scenes = 10, gsu_eps = 5;
  std::uint64_t gsu_seed = 0;
  gsu->add_option("--task", gsu_task, "imagenav | ar | infoseek | standard")
      ->check(CLI::IsMember({"imagenav", "ar", "infoseek", "standard"}));
  gsu->add_option("--scenes", gsu_scenes, "scene count");
  gsu->add_option("--episodes", gsu_eps, "episodes per scene and task");
  gsu->add_option("--seed", gsu_seed, "seed");
  gsu->add_option("--out", gsu_out, "output directory");

  auto* val = app.add_subcommand("validate", "check a suite, replay episode traces, or verify a dataset");
  std::string v_suite, v_episodes, v_dataset;
  val->add_option("--suite", v_suite, "suite.jsonl");
  val->add_option("--episodes", v_episodes, "episodes.jsonl to replay against --suite");
  val->add_option("--dataset", v_dataset, "dataset directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const RunConfig c = resolve(run_f);
      print_defaults(c);
      const auto out = run_suite(c);
      std::cout << report_table(out.report);
    } else if (sinf->parsed()) {
      RunConfig c = resolve(inf_f);
      if (!m_values.empty()) c.m_values = m_values;
      if (inf_f.o_model->count()) c.inference_model = inf_f.model;
      print_defaults(c);
      std::cout << inference_csv(sweep_inference(c));
    } else if (sdata->parsed()) {
      RunConfig c = resolve(data_f);
      if (!dataset.empty()) c.dataset = dataset;
      if (!sizes.empty()) c.data_sizes = sizes;
      print_defaults(c);
      std::cout << data_csv(sweep_data(c));
    } else if (sdec->parsed()) {
      RunConfig c = resolve(dec_f);
      print_defaults(c);
      std::cout << decoupling_csv(sweep_decoupling(c));
    } else if (dg->parsed()) {
      const GridScene scene = load_scene(dg_scene);
      GenerationLog log;
      const auto records = generate_dataset(scene, fs::path(dg_scene).filename().string(), dgp, dg_seed, &log);
      write_dataset(records, dgp, dg_out);
      for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
      std::size_t frames = 0;
      for (const auto& r : records) frames += r.steps.size();
      std::cout << records.size() << " trajectories, " << frames << " frames written to " << dg_out << "\n";
    } else if (gs->parsed()) {
      fs::create_directories(gs_out);
      for (int i = 0; i < gs_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03d.txt", i);
        save_scene(gen_scene(derive_seed({gs_seed, static_cast<std::uint64_t>(i)}), sgp), (fs::path(gs_out) / name).string());
      }
      std::cout << gs_count << " scenes written to " << gs_out << "\n";
    } else if (gsu->parsed()) {
      GeneratedSuite s;
      if (gsu_task == "standard") {
        s = gen_standard_suite(gsu_seed, gsu_out);
      } else {
        s = gen_suite({task_kind_from_string(gsu_task)}, gsu_scenes, gsu_eps, gsu_seed, gsu_out);
      }
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << s.specs.size() << " episodes over " << s.scene_files.size() << " scenes written to " << gsu_out
                << "/suite.jsonl\n";
    } else if (val->parsed()) {
      int bad = 0;
      if (!v_dataset.empty()) {
        DatasetManifest m;
        const auto records = read_dataset(v_dataset, &m);
        std::cout << "dataset ok: " << m.trajectories << " trajectories, " << m.frames << " frames\n";
      }
      if (!v_suite.empty()) {
        const LoadedSuite suite = load_suite(v_suite);
        std::cout << "suite ok: " << suite.specs.size() << " episodes, " << suite.scenes.size() << " scenes\n";
        if (!v_episodes.empty()) {
          std::map<std::string, const EpisodeSpec*> by_id;
          for (const auto& s : suite.specs) by_id[s.id] = &s;
          std::ifstream in(v_episodes);
          if (!in) throw std::runtime_error("cannot open " + v_episodes);
          std::string line;
          int n = 0;
          while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto r = result_from_json(nlohmann::json::parse(line));
            ++n;
            auto it = by_id.find(r.episode_id);
            if (it == by_id.end()) {
              std::cerr << r.episode_id << ": not in suite\n";
              ++bad;
              continue;
            }
            const std::string err = validate_trace(*it->second, suite.scenes.at(it->second->scene_path), r);
            if (!err.empty()) {
              std::cerr << r.episode_id << ": " << err << "\n";
              ++bad;
            }
          }
          std::cout << n - bad << "/" << n << " traces valid\n";
        }
      }
      return bad ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
