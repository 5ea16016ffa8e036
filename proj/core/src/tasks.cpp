#include "wmbench/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <queue>

#include "wmbench/palette.hpp"
#include "wmbench/wire.hpp"

namespace wmbench {

using nlohmann::json;

PlannerConfig default_planner(TaskKind task) {
  switch (task) {
    case TaskKind::AR: return {2, 4, 4, ProposalPolicy::Heuristic, false};
    case TaskKind::ImageNav: return {3, 5, 3, ProposalPolicy::GoalDirected, false};
    case TaskKind::InfoSeek: return {3, 14, 14, ProposalPolicy::GoalDirected, true};
  }
  throw std::invalid_argument("unknown task");
}

int default_budget(TaskKind task) {
  switch (task) {
    case TaskKind::AR: return kArBudget;
    case TaskKind::ImageNav: return kImageNavBudget;
    case TaskKind::InfoSeek: return kInfoSeekBudget;
  }
  throw std::invalid_argument("unknown task");
}

void validate_spec(const EpisodeSpec& spec, const GridScene& scene) {
  const Cell start = scene.cell_of(spec.start);
  if (!scene.is_free(start)) throw SpecError(spec.id + ": start pose is not in a free cell");
  if (spec.budget <= 0) throw SpecError(spec.id + ": budget must be positive");
  try {
    spec.planner.validate();
  } catch (const std::invalid_argument& e) {
    throw SpecError(spec.id + ": " + e.what());
  }
  switch (spec.task) {
    case TaskKind::ImageNav: {
      const Cell goal = scene.cell_of(spec.goal_pose);
      if (!scene.is_free(goal)) throw SpecError(spec.id + ": goal pose is not in a free cell");
      if (!geodesic_distance(scene, start, goal)) throw SpecError(spec.id + ": goal unreachable from start");
      break;
    }
    case TaskKind::AR:
      if (!scene.find_instance(spec.target_instance)) throw SpecError(spec.id + ": AR target not in scene");
      break;
    case TaskKind::InfoSeek:
      if (!scene.find_instance(spec.question.anchor_instance)) throw SpecError(spec.id + ": anchor not in scene");
      if (spec.answer.empty()) throw SpecError(spec.id + ": missing ground-truth answer");
      break;
  }
  if (spec.shortest_length < 0.0) throw SpecError(spec.id + ": negative shortest length");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string proposal_name(ProposalPolicy p) { return p == ProposalPolicy::Heuristic ? "heuristic" : "goal"; }
ProposalPolicy proposal_from(const std::string& s) {
  if (s == "heuristic") return ProposalPolicy::Heuristic;
  if (s == "goal") return ProposalPolicy::GoalDirected;
  throw std::invalid_argument("unknown proposal policy " + s);
}

}  // namespace

json to_json(const EpisodeSpec& s) {
  json goal;
  switch (s.task) {
    case TaskKind::ImageNav: goal = {{"pose", wire::to_json(s.goal_pose)}}; break;
    case TaskKind::AR: goal = {{"target", s.target_instance}, {"labels", s.labels}}; break;
    case TaskKind::InfoSeek:
      goal = {{"relation", s.question.relation}, {"anchor", s.question.anchor_instance}, {"answer", s.answer}};
      break;
  }
  return {{"id", s.id},
          {"task", to_string(s.task)},
          {"scene", s.scene_path},
          {"start", wire::to_json(s.start)},
          {"seed", s.seed},
          {"goal", goal},
          {"budget", s.budget},
          {"planner",
           {{"M", s.planner.M}, {"L", s.planner.L}, {"commit_len", s.planner.commit_len},
            {"proposal", proposal_name(s.planner.proposal)}, {"terminal_only", s.planner.terminal_only}}},
          {"shortest_length", s.shortest_length}};
}

EpisodeSpec spec_from_json(const json& j) {
  EpisodeSpec s;
  s.id = j.at("id").get<std::string>();
  s.task = task_kind_from_string(j.at("task").get<std::string>());
  s.scene_path = j.at("scene").get<std::string>();
  s.start = wire::pose_from_json(j.at("start"));
  s.seed = j.value("seed", std::uint64_t{0});
  const auto& goal = j.at("goal");
  switch (s.task) {
    case TaskKind::ImageNav: s.goal_pose = wire::pose_from_json(goal.at("pose")); break;
    case TaskKind::AR:
      s.target_instance = goal.at("target").get<int>();
      s.labels = goal.value("labels", std::vector<std::string>{});
      break;
    case TaskKind::InfoSeek:
      s.question.relation = goal.value("relation", std::string("color"));
      s.question.anchor_instance = goal.at("anchor").get<int>();
      s.answer = goal.at("answer").get<std::string>();
      break;
  }
  s.budget = j.value("budget", default_budget(s.task));
  s.planner = default_planner(s.task);
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    s.planner.M = p.value("M", s.planner.M);
    s.planner.L = p.value("L", s.planner.L);
    s.planner.commit_len = p.value("commit_len", s.planner.commit_len);
    if (p.contains("proposal")) s.planner.proposal = proposal_from(p["proposal"].get<std::string>());
    s.planner.terminal_only = p.value("terminal_only", s.planner.terminal_only);
  }
  s.shortest_length = j.value("shortest_length", 0.0);
  return s;
}

std::vector<EpisodeSpec> read_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open suite file " + path);
  std::vector<EpisodeSpec> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(spec_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_suite(const std::vector<EpisodeSpec>& specs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write suite file " + path);
  for (const auto& s : specs) out << to_json(s).dump() << '\n';
}

json to_json(const EpisodeResult& r) {
  json trace = json::array();
  for (const auto& t : r.trace) {
    json actions = json::array();
    for (auto a : t.executed) actions.push_back(std::string(to_string(a)));
    json step = {{"step", t.decision_step}, {"decision", t.answered ? "answer" : "plan"}, {"actions", actions},
                 {"pose", wire::to_json(t.pose_after)}, {"scores", t.scores}, {"winner", t.winner},
                 {"fallback", t.fallback}};
    if (t.answered) step["label"] = t.label;
    trace.push_back(std::move(step));
  }
  json j = {{"id", r.episode_id},
            {"task", to_string(r.task)},
            {"success", r.success},
            {"decision_steps", r.decision_steps},
            {"steps_executed", r.steps_executed},
            {"path_length", r.path_length},
            {"shortest_length", r.shortest_length},
            {"wm_inferences", r.wm_inference_count},
            {"fallbacks", r.fallback_count},
            {"start", wire::to_json(r.start)},
            {"trace", std::move(trace)}};
  j["answer"] = r.answer ? json(*r.answer) : json(nullptr);
  j["answer_score"] = r.answer_score ? json(*r.answer_score) : json(nullptr);
  return j;
}

EpisodeResult result_from_json(const json& j) {
  EpisodeResult r;
  r.episode_id = j.at("id").get<std::string>();
  r.task = task_kind_from_string(j.at("task").get<std::string>());
  r.success = j.at("success").get<bool>();
  r.decision_steps = j.at("decision_steps").get<int>();
  r.steps_executed = j.at("steps_executed").get<int>();
  r.path_length = j.at("path_length").get<double>();
  r.shortest_length = j.at("shortest_length").get<double>();
  r.wm_inference_count = j.at("wm_inferences").get<int>();
  r.fallback_count = j.at("fallbacks").get<int>();
  r.start = wire::pose_from_json(j.at("start"));
  if (!j.at("answer").is_null()) r.answer = j["answer"].get<std::string>();
  if (!j.at("answer_score").is_null()) r.answer_score = j["answer_score"].get<int>();
  for (const auto& t : j.at("trace")) {
    TraceStep s;
    s.decision_step = t.at("step").get<int>();
    s.answered = t.at("decision").get<std::string>() == "answer";
    if (s.answered) s.label = t.at("label").get<std::string>();
    for (const auto& a : t.at("actions")) s.executed.push_back(*action_from_string(a.get<std::string>()));
    s.pose_after = wire::pose_from_json(t.at("pose"));
    s.scores = t.at("scores").get<std::vector<double>>();
    s.winner = t.at("winner").get<int>();
    s.fallback = t.at("fallback").get<bool>();
    r.trace.push_back(std::move(s));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Environment and answerers

Environment::Environment(const GridScene& scene, const Pose& start) : scene_(&scene), pose_(start) {}

double Environment::step(ActionPrimitive a) {
  const Pose next = apply_action(*scene_, pose_, a);
  const double moved = std::hypot(next.x - pose_.x, next.y - pose_.y);
  pose_ = next;
  return moved;
}

Panorama Environment::observe() const { return render_panorama(*scene_, pose_); }

namespace {

// Dominant class among the target's columns in a view.
int observed_class(const Observation& o, int instance) {
  std::map<int, int> votes;
  for (const auto& c : o.columns)
    if (c.instance_id == instance) ++votes[c.class_id];
  int best = 0, best_n = 0;
  for (auto [cls, n] : votes) {
    if (n > best_n) {
      best = cls;
      best_n = n;
    }
  }
  return best;
}

}  // namespace

AnswerResult ar_answer(std::span<const Observation> views, int target_instance, std::span<const std::string> labels) {
  if (views.empty()) throw std::invalid_argument("ar_answer needs at least one view");
  AnswerResult r;
  std::size_t best_view = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const double v = central_visibility(views[i], target_instance);
    if (v > r.visibility) {
      r.visibility = v;
      best_view = i;
    }
  }
  r.confidence = std::min(1.0, r.visibility / kFullVisibility);
  if (r.visibility > 0.0) {
    r.label = class_name(observed_class(views[best_view], target_instance));
  } else {
    // Target never seen: name the most prominent visible object.
    std::map<int, int> counts;
    std::map<int, int> cls;
    for (const auto& v : views) {
      for (int i = 0; i < v.width(); ++i) {
        const auto& c = v.columns[static_cast<std::size_t>(i)];
        if (c.instance_id == 0) continue;
        ++counts[c.instance_id];
        cls.try_emplace(c.instance_id, c.class_id);
      }
    }
    int best = 0, best_n = 0;
    for (auto [id, n] : counts) {
      if (n > best_n) {
        best = id;
        best_n = n;
      }
    }
    r.label = best ? class_name(cls[best]) : (labels.empty() ? std::string() : labels.front());
  }
  return r;
}

AnswerResult infoseek_answer(std::span<const Observation> views, const GridScene& scene, const Question& q) {
  AnswerResult r;
  for (const auto& v : views) r.visibility = std::max(r.visibility, central_visibility(v, q.anchor_instance));
  r.confidence = std::min(1.0, r.visibility / kFullVisibility);
  if (r.visibility > 0.0) {
    const auto* info = scene.find_instance(q.anchor_instance);
    if (info) r.label = q.relation == "class" ? class_name(info->class_id) : color_of(info->display_name);
  }
  return r;
}

std::optional<double> answer_viewpoint_distance(const GridScene& scene, Cell start, int instance) {
  const auto* info = scene.find_instance(instance);
  if (!info || !scene.is_free(start)) return std::nullopt;
  const GeodesicField field(scene, start);
  const Pose centroid = scene.center_of(info->centroid);
  std::vector<std::pair<double, Cell>> order;
  for (const auto& c : scene.free_cells()) {
    const auto d = field.distance(c);
    if (!d) continue;
    const Pose p = scene.center_of(c);
    if (std::hypot(p.x - centroid.x, p.y - centroid.y) > 3.0) continue;
    order.push_back({*d, c});
  }
  std::sort(order.begin(), order.end());
  const double needed = kStopConfidence * kFullVisibility;
  for (const auto& [d, c] : order) {
    const Panorama pano = render_panorama(scene, scene.center_of(c));
    for (int s = 0; s < kHeadingCount; ++s) {
      if (central_visibility(front_view(rotate_panorama(pano, s)), instance) >= needed - 1e-12) return d;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Episode loops

namespace {

struct EpisodeRun {
  EpisodeRun(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* config, std::uint64_t seed)
      : env(scene, spec.start) {
    state.episode_seed = derive_seed({seed, spec.seed});
    state.rng.seed(derive_seed({seed, spec.seed, 0x706c616eULL}));
    result.episode_id = spec.id;
    result.task = spec.task;
    result.shortest_length = spec.shortest_length;
    result.start = spec.start;
    if (config) {
      WorldModelConfig c = *config;
      c.seed = derive_seed({config->seed, seed, spec.seed});
      try {
        model = make_world_model(c, env.view());
      } catch (const ModelError&) {
        model_failed = true;
      }
    }
  }

  StepOutcome plan(const PlannerConfig& pc, const Panorama& obs, const TaskGoal& goal, const Answerer* answerer) {
    StepOutcome out = plan_step(pc, state, obs, env.pose(), goal, model.get(), answerer);
    if (model_failed) {
      ++state.fallbacks;
      out.fallback = true;
    }
    return out;
  }

  double execute(ActionPrimitive a, TraceStep& t) {
    const double moved = env.step(a);
    result.path_length += moved;
    ++result.steps_executed;
    state.history.push_back(a);
    t.executed.push_back(a);
    return moved;
  }

  void finish() {
    result.wm_inference_count = state.wm_inferences;
    result.fallback_count = state.fallbacks;
  }

  Environment env;
  PlannerState state;
  std::unique_ptr<WorldModel> model;
  bool model_failed = false;
  EpisodeResult result;
};

TraceStep trace_of(int k, const StepOutcome& out) {
  TraceStep t;
  t.decision_step = k;
  t.scores = out.scores;
  t.winner = out.winner ? static_cast<int>(*out.winner) : -1;
  t.fallback = out.fallback;
  if (const auto* a = std::get_if<AnswerDecision>(&out.decision)) {
    t.answered = true;
    t.label = a->label;
  }
  return t;
}

bool within_goal(const Pose& p, const Pose& goal) { return std::hypot(p.x - goal.x, p.y - goal.y) <= kGoalRadiusM; }

}  // namespace

int dominant_instance(const Observation& view) {
  std::map<int, int> counts;
  for (const auto& c : view.columns)
    if (c.instance_id != 0) ++counts[c.instance_id];
  int best = 0, best_n = 0;
  for (auto [id, n] : counts) {
    if (n > best_n) {
      best = id;
      best_n = n;
    }
  }
  return best;
}

namespace {

// Heading at which the current panorama best resembles the goal image.
Heading best_matching_heading(const Panorama& obs, const EgoView& goal_ego, Heading current) {
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (int s = 0; s < kHeadingCount; ++s) {
    const double d = view_distance(front_view(rotate_panorama(obs, s)), goal_ego);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return current.turned(best);
}

// Nearest visible surface point of the instance in a panorama.
std::optional<std::pair<double, double>> sighting(const Panorama& obs, const Pose& pose, int instance) {
  int best = -1;
  for (int i = 0; i < obs.width(); ++i) {
    const auto& c = obs.columns[static_cast<std::size_t>(i)];
    if (c.instance_id == instance && (best < 0 || c.depth_m < obs.columns[static_cast<std::size_t>(best)].depth_m)) best = i;
  }
  if (best < 0) return std::nullopt;
  const auto& col = obs.columns[static_cast<std::size_t>(best)];
  const double deg = pose.heading.degrees() + obs.column_offset_deg(best);
  const double rad = deg * std::numbers::pi / 180.0;
  return std::make_pair(pose.x + col.depth_m * std::cos(rad), pose.y + col.depth_m * std::sin(rad));
}

}  // namespace

EpisodeResult run_imagenav(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                           std::uint64_t seed) {
  if (spec.task != TaskKind::ImageNav) throw SpecError("run_imagenav called with a non-ImageNav spec");
  validate_spec(spec, scene);
  EpisodeRun run(spec, scene, model, seed);
  TaskGoal goal;
  goal.kind = TaskKind::ImageNav;
  goal.goal_pano = render_panorama(scene, spec.goal_pose);
  goal.goal_ego = raycast_view(scene, spec.goal_pose);
  goal.goal_pano.pose.reset();
  goal.goal_ego.pose.reset();

  const int landmark = dominant_instance(goal.goal_ego);
  double landmark_depth = kMaxRangeM;
  for (const auto& c : goal.goal_ego.columns)
    if (c.instance_id == landmark) landmark_depth = std::min(landmark_depth, static_cast<double>(c.depth_m));
  if (within_goal(spec.start, spec.goal_pose)) {
    run.result.success = true;
    run.finish();
    return std::move(run.result);
  }
  bool done = false;
  for (int k = 0; k < spec.budget && !done; ++k) {
    const Panorama obs = run.env.observe();
    run.state.step = k;
    if (spec.planner.proposal == ProposalPolicy::GoalDirected) {
      if (landmark != 0) {
        if (auto seen = sighting(obs, run.env.pose(), landmark)) {
          // Closest point to us at the landmark distance the goal image shows.
          const Pose& p = run.env.pose();
          const double dx = seen->first - p.x, dy = seen->second - p.y;
          const double r = std::hypot(dx, dy);
          run.state.goal_point.reset();
          if (r > landmark_depth) {
            const double k = (r - landmark_depth) / r;
            run.state.goal_point = std::make_pair(p.x + k * dx, p.y + k * dy);
          }
        }
      }
      if (!run.state.goal_point) {
        run.state.goal_heading = best_matching_heading(obs, goal.goal_ego, run.env.pose().heading);
      }
    }
    const StepOutcome out = run.plan(spec.planner, obs, goal, nullptr);
    ++run.result.decision_steps;
    TraceStep t = trace_of(k, out);
    for (auto a : std::get<PlanDecision>(out.decision).seq) {
      run.execute(a, t);
      if (within_goal(run.env.pose(), spec.goal_pose)) {
        run.result.success = true;
        done = true;
        break;
      }
    }
    t.pose_after = run.env.pose();
    run.result.trace.push_back(std::move(t));
  }
  run.finish();
  return std::move(run.result);
}

EpisodeResult run_ar(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                     std::uint64_t seed) {
  if (spec.task != TaskKind::AR) throw SpecError("run_ar called with a non-AR spec");
  validate_spec(spec, scene);
  EpisodeRun run(spec, scene, model, seed);
  TaskGoal goal;
  goal.kind = TaskKind::AR;
  goal.target_instance = spec.target_instance;
  const Answerer answerer = [&](std::span<const Observation> views) {
    return ar_answer(views, spec.target_instance, spec.labels);
  };
  const std::string truth = class_name(scene.find_instance(spec.target_instance)->class_id);

  AnswerResult best;
  std::optional<AnswerResult> last;
  auto consider = [&](const AnswerResult& a) {
    if (a.visibility > best.visibility) best = a;
    last = a;
  };
  for (int k = 0; k < spec.budget; ++k) {
    const Panorama obs = run.env.observe();
    run.state.step = k;
    const StepOutcome out = run.plan(spec.planner, obs, goal, &answerer);
    ++run.result.decision_steps;
    consider(out.answer);
    TraceStep t = trace_of(k, out);
    if (const auto* ans = std::get_if<AnswerDecision>(&out.decision)) {
      run.result.answer = ans->label;
      t.pose_after = run.env.pose();
      run.result.trace.push_back(std::move(t));
      break;
    }
    for (auto a : std::get<PlanDecision>(out.decision).seq) run.execute(a, t);
    t.pose_after = run.env.pose();
    run.result.trace.push_back(std::move(t));
  }
  if (!run.result.answer) {
    const EgoView final_view = front_view(run.env.observe());
    consider(answerer(std::span<const Observation>(&final_view, 1)));
    run.result.answer = best.visibility > 0.0 ? best.label : (last ? last->label : std::string());
  }
  run.result.success = *run.result.answer == truth;
  run.finish();
  return std::move(run.result);
}

EpisodeResult run_infoseek(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                           std::uint64_t seed) {
  if (spec.task != TaskKind::InfoSeek) throw SpecError("run_infoseek called with a non-InfoSeek spec");
  validate_spec(spec, scene);
  EpisodeRun run(spec, scene, model, seed);
  TaskGoal goal;
  goal.kind = TaskKind::InfoSeek;
  goal.target_instance = spec.question.anchor_instance;
  const Answerer answerer = [&](std::span<const Observation> views) {
    return infoseek_answer(views, scene, spec.question);
  };
  int k = 0;
  while (run.result.steps_executed < spec.budget) {
    const Panorama obs = run.env.observe();
    if (auto seen = sighting(obs, run.env.pose(), spec.question.anchor_instance)) run.state.goal_point = seen;
    run.state.step = k;
    const StepOutcome out = run.plan(spec.planner, obs, goal, &answerer);
    ++run.result.decision_steps;
    TraceStep t = trace_of(k, out);
    if (const auto* ans = std::get_if<AnswerDecision>(&out.decision)) {
      run.result.answer = ans->label;
      t.pose_after = run.env.pose();
      run.result.trace.push_back(std::move(t));
      break;
    }
    for (auto a : std::get<PlanDecision>(out.decision).seq) {
      if (run.result.steps_executed >= spec.budget) break;
      run.execute(a, t);
    }
    t.pose_after = run.env.pose();
    run.result.trace.push_back(std::move(t));
    ++k;
  }
  if (!run.result.answer) {
    const EgoView final_view = front_view(run.env.observe());
    const auto a = answerer(std::span<const Observation>(&final_view, 1));
    if (a.confidence >= kStopConfidence) run.result.answer = a.label;
  }
  run.result.answer_score = run.result.answer && *run.result.answer == spec.answer ? 5 : 1;
  run.result.success = *run.result.answer_score == 5;
  run.finish();
  return std::move(run.result);
}

EpisodeResult run_episode(const EpisodeSpec& spec, const GridScene& scene, const WorldModelConfig* model,
                          std::uint64_t seed) {
  switch (spec.task) {
    case TaskKind::ImageNav: return run_imagenav(spec, scene, model, seed);
    case TaskKind::AR: return run_ar(spec, scene, model, seed);
    case TaskKind::InfoSeek: return run_infoseek(spec, scene, model, seed);
  }
  throw SpecError("unknown task");
}

std::string validate_trace(const EpisodeSpec& spec, const GridScene& scene, const EpisodeResult& r) {
  Pose pose = r.start;
  double path = 0.0;
  int actions = 0;
  for (const auto& t : r.trace) {
    for (auto a : t.executed) {
      const Pose next = apply_action(scene, pose, a);
      path += std::hypot(next.x - pose.x, next.y - pose.y);
      pose = next;
      ++actions;
    }
    if (!(pose == t.pose_after)) return "pose mismatch at decision step " + std::to_string(t.decision_step);
  }
  if (actions != r.steps_executed) return "executed action count mismatch";
  if (std::abs(path - r.path_length) > 1e-9) return "path length does not match replay";
  if (spec.task == TaskKind::InfoSeek) {
    if (r.steps_executed > spec.budget) return "primitive budget exceeded";
  } else if (r.decision_steps > spec.budget) {
    return "decision budget exceeded";
  }
  if (static_cast<int>(r.trace.size()) != r.decision_steps) return "trace length does not match decision steps";
  return {};
}

}  // namespace wmbench
