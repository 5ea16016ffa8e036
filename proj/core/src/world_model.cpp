#include "wmbench/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmbench/count_prior.hpp"
#include "wmbench/remote.hpp"
#include "wmbench/rng.hpp"

namespace wmbench {

namespace {

std::string fmt_num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

constexpr int kNoiseClasses = 13;

}  // namespace

std::string WorldModelConfig::label() const {
  switch (variant) {
    case ModelVariant::Oracle: return "oracle";
    case ModelVariant::NoisyAction: return "noisy-action(" + fmt_num(p_flip) + ")";
    case ModelVariant::NoisyObs: return "noisy-obs(" + fmt_num(sigma) + "," + fmt_num(p_class) + ")";
    case ModelVariant::Frozen: return "frozen";
    case ModelVariant::CountPrior: return "countprior";
    case ModelVariant::Remote: return "remote";
  }
  return "?";
}

void WorldModelConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(p_flip) || !prob(p_class)) throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  if (variant == ModelVariant::Remote && endpoint.empty()) throw std::invalid_argument("remote model needs an endpoint");
}

WorldModelConfig parse_model_spec(const std::string& spec) {
  std::vector<std::string> parts;
  std::string rest = spec;
  // The remote command may itself contain ':'; only split the variant off.
  if (rest.rfind("remote:", 0) == 0) {
    WorldModelConfig c;
    c.variant = ModelVariant::Remote;
    c.endpoint = rest.substr(7);
    c.validate();
    return c;
  }
  std::stringstream ss(rest);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) throw std::invalid_argument("empty model spec");
  WorldModelConfig c;
  const auto& v = parts[0];
  auto num = [&](std::size_t i) {
    if (i >= parts.size()) throw std::invalid_argument("model spec '" + spec + "' is missing a parameter");
    return std::stod(parts[i]);
  };
  if (v == "oracle") {
    c.variant = ModelVariant::Oracle;
  } else if (v == "frozen") {
    c.variant = ModelVariant::Frozen;
  } else if (v == "noisy-action") {
    c.variant = ModelVariant::NoisyAction;
    c.p_flip = num(1);
  } else if (v == "noisy-obs") {
    c.variant = ModelVariant::NoisyObs;
    c.sigma = num(1);
    c.p_class = num(2);
  } else if (v == "countprior") {
    c.variant = ModelVariant::CountPrior;
  } else {
    throw std::invalid_argument("unknown model variant '" + v + "'");
  }
  c.validate();
  return c;
}

ActionSequence check_request(const WorldModel& model, const ControlInput& control, int horizon) {
  if (kind_of(control) != model.control_kind()) {
    throw ControlKindMismatch("model expects " + to_string(model.control_kind()) + " control, got " +
                              to_string(kind_of(control)));
  }
  if (horizon < 1) throw ModelError("horizon must be at least 1");
  ActionSequence plan = decode_control(control, model.vocabulary());
  if (static_cast<int>(plan.size()) != horizon) throw ModelError("control length does not match horizon");
  return plan;
}

namespace {

class SimulatorModel : public WorldModel {
 public:
  SimulatorModel(WorldModelConfig config, EnvironmentView env) : config_(std::move(config)), env_(env) {
    if (!env_.scene || !env_.pose) throw ModelError("simulator-backed model needs an environment");
  }

  std::string name() const override { return config_.label(); }
  ControlKind control_kind() const override { return config_.control_kind; }
  ObservationKind observation_kind() const override { return config_.observation_kind; }
  const ActionVocabulary& vocabulary() const override { return config_.vocab; }

  PredictedRollout rollout(const RolloutContext& /*ctx*/, const ControlInput& control, int horizon,
                           std::uint64_t seed) override {
    const ActionSequence plan = check_request(*this, control, horizon);
    Rng rng(derive_seed({config_.seed, seed, 0x6e6f697365ULL}));
    std::vector<ActionPrimitive> executed = corrupt_actions(plan, rng);
    PredictedRollout out;
    out.source = name();
    out.aligned_actions = plan;
    Pose pose = *env_.pose;
    for (auto a : executed) {
      pose = apply_action(*env_.scene, pose, a);
      Observation frame = render(*env_.scene, pose, config_.observation_kind);
      frame.pose.reset();
      corrupt_frame(frame, rng);
      out.frames.push_back(std::move(frame));
    }
    return out;
  }

 protected:
  virtual std::vector<ActionPrimitive> corrupt_actions(const ActionSequence& plan, Rng&) const {
    return plan.items();
  }
  virtual void corrupt_frame(Observation&, Rng&) const {}

  WorldModelConfig config_;

 private:
  EnvironmentView env_;
};

class NoisyActionModel final : public SimulatorModel {
 public:
  using SimulatorModel::SimulatorModel;

 protected:
  // One uniform draw and one replacement draw per step regardless of p, so
  // that sweeps over p flip nested sets of steps under a fixed seed.
  std::vector<ActionPrimitive> corrupt_actions(const ActionSequence& plan, Rng& rng) const override {
    static constexpr ActionPrimitive kMotion[3] = {ActionPrimitive::Forward, ActionPrimitive::TurnLeft,
                                                   ActionPrimitive::TurnRight};
    std::vector<ActionPrimitive> out;
    for (auto a : plan) {
      const double u = uniform01(rng);
      const int pick = uniform_int(rng, 0, 1);
      if (u < config_.p_flip) {
        std::vector<ActionPrimitive> others;
        for (auto m : kMotion)
          if (m != a) others.push_back(m);
        a = others[static_cast<std::size_t>(std::min<int>(pick, static_cast<int>(others.size()) - 1))];
      }
      out.push_back(a);
    }
    return out;
  }
};

class NoisyObsModel final : public SimulatorModel {
 public:
  using SimulatorModel::SimulatorModel;

 protected:
  void corrupt_frame(Observation& frame, Rng& rng) const override {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (auto& c : frame.columns) {
      const double z = noise(rng);
      const double u = uniform01(rng);
      const int other = uniform_int(rng, 0, kNoiseClasses - 2);
      c.depth_m = static_cast<float>(std::clamp(c.depth_m + config_.sigma * z, 0.0, kMaxRangeM));
      if (u < config_.p_class) {
        c.class_id = other >= c.class_id ? other + 1 : other;
        c.instance_id = 0;
      }
    }
  }
};

class FrozenModel final : public WorldModel {
 public:
  explicit FrozenModel(WorldModelConfig config) : config_(std::move(config)) {}

  std::string name() const override { return config_.label(); }
  ControlKind control_kind() const override { return config_.control_kind; }
  ObservationKind observation_kind() const override { return config_.observation_kind; }
  const ActionVocabulary& vocabulary() const override { return config_.vocab; }

  PredictedRollout rollout(const RolloutContext& ctx, const ControlInput& control, int horizon,
                           std::uint64_t) override {
    PredictedRollout out;
    out.aligned_actions = check_request(*this, control, horizon);
    out.source = name();
    Observation frame = ctx.observation;
    frame.pose.reset();
    out.frames.assign(static_cast<std::size_t>(horizon), frame);
    return out;
  }

 private:
  WorldModelConfig config_;
};

}  // namespace

std::unique_ptr<WorldModel> make_world_model(const WorldModelConfig& config, EnvironmentView env) {
  config.validate();
  switch (config.variant) {
    case ModelVariant::Oracle: return std::make_unique<SimulatorModel>(config, env);
    case ModelVariant::NoisyAction: return std::make_unique<NoisyActionModel>(config, env);
    case ModelVariant::NoisyObs: return std::make_unique<NoisyObsModel>(config, env);
    case ModelVariant::Frozen: return std::make_unique<FrozenModel>(config);
    case ModelVariant::CountPrior:
      return std::make_unique<CountPriorModel>(config, env.scene ? env.scene->cell_size() : 0.1);
    case ModelVariant::Remote:
      return std::make_unique<RemoteWorldModel>(std::make_unique<SubprocessTransport>(config.endpoint), config);
  }
  throw std::invalid_argument("unknown model variant");
}

// ---------------------------------------------------------------------------
// Evaluation

ControlEvalItem make_eval_item(const GridScene& scene, const Pose& pose, ActionSequence actions, std::uint64_t seed) {
  ControlEvalItem item;
  item.scene = &scene;
  item.pose = pose;
  item.actions = std::move(actions);
  item.seed = seed;
  Pose p = pose;
  for (auto a : item.actions) {
    p = apply_action(scene, p, a);
    auto pano = render_panorama(scene, p);
    auto ego = raycast_view(scene, p);
    pano.pose.reset();
    ego.pose.reset();
    item.truth_pano.push_back(std::move(pano));
    item.truth_ego.push_back(std::move(ego));
  }
  return item;
}

ControlEvalResult evaluate_model(const WorldModelConfig& config, std::span<const ControlEvalItem> items) {
  if (items.empty()) throw std::invalid_argument("empty evaluation set");
  double dist_sum = 0.0, quality_sum = 0.0;
  std::size_t frames = 0;
  for (const auto& item : items) {
    const Pose pose = item.pose;
    auto model = make_world_model(config, {item.scene, &pose});
    const auto kind = model->observation_kind();
    RolloutContext ctx{render(*item.scene, pose, kind), pose};
    ctx.observation.pose.reset();
    const auto control = encode_control(item.actions, model->control_kind(), pose, model->vocabulary());
    const auto rollout = model->rollout(ctx, control, static_cast<int>(item.actions.size()), item.seed);
    const auto& truth = kind == ObservationKind::Panorama ? item.truth_pano : item.truth_ego;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      dist_sum += view_distance(rollout.frames[k], truth[k]);
      ++frames;
    }
    quality_sum += quality(rollout);
  }
  return {1.0 - dist_sum / static_cast<double>(frames), quality_sum / static_cast<double>(items.size())};
}

double controllability(const WorldModelConfig& config, std::span<const ControlEvalItem> items) {
  return evaluate_model(config, items).controllability;
}

double quality(const PredictedRollout& rollout) {
  if (rollout.frames.empty()) throw std::invalid_argument("empty rollout");
  double tv_sum = 0.0;
  for (const auto& f : rollout.frames) {
    const int w = f.width();
    const bool circular = f.kind == ObservationKind::Panorama;
    const int pairs = circular ? w : w - 1;
    if (pairs <= 0) continue;
    double tv = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const double a = f.columns[static_cast<std::size_t>(i)].depth_m;
      const double b = f.columns[static_cast<std::size_t>((i + 1) % w)].depth_m;
      tv += std::min(1.0, std::max(0.0, std::abs(a - b) - kSmoothnessBudgetM) / kDepthScaleM);
    }
    tv_sum += tv / pairs;
  }
  const double tv_term = tv_sum / static_cast<double>(rollout.frames.size());
  double flicker_term = 0.0;
  if (rollout.frames.size() > 1) {
    double flicker = 0.0;
    for (std::size_t k = 1; k < rollout.frames.size(); ++k) {
      const auto& a = rollout.frames[k - 1];
      const auto& b = rollout.frames[k];
      const auto n = std::min(a.columns.size(), b.columns.size());
      int changed = 0;
      for (std::size_t i = 0; i < n; ++i) changed += a.columns[i].class_id != b.columns[i].class_id;
      flicker += n ? static_cast<double>(changed) / static_cast<double>(n) : 0.0;
    }
    flicker_term = flicker / static_cast<double>(rollout.frames.size() - 1);
  }
  return std::clamp(1.0 - 0.5 * tv_term - 0.5 * flicker_term, 0.0, 1.0);
}

}  // namespace wmbench
