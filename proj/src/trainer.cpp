#include "skyrescue/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "skyrescue/error.hpp"

namespace skyrescue::trainer {

using maddpg::MatrixXd;
using maddpg::VectorXd;

namespace {

constexpr std::uint64_t kTrainKey = 0x7261696e;
constexpr std::uint64_t kEvalKey = 0x6576616c;

MatrixXd stack(const std::vector<const VectorXd*>& cols) {
  MatrixXd m(cols.front()->size(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = *cols[j];
  return m;
}

struct Minibatch {
  std::vector<MatrixXd> obs, act, mask, next_obs, next_mask;
  std::vector<VectorXd> reward;
  VectorXd done;
};

Minibatch gather(const maddpg::ReplayMemory& mem, const std::vector<std::size_t>& slots, int agents) {
  Minibatch b;
  const auto n = static_cast<Eigen::Index>(slots.size());
  b.done.resize(n);
  for (int u = 0; u < agents; ++u) {
    std::vector<const VectorXd*> o, a, m, no, nm;
    VectorXd r(n);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const auto& t = mem.at(slots[k]);
      const auto uu = static_cast<std::size_t>(u);
      o.push_back(&t.obs[uu]);
      a.push_back(&t.act[uu]);
      m.push_back(&t.mask[uu]);
      no.push_back(&t.next_obs[uu]);
      nm.push_back(&t.next_mask[uu]);
      r(static_cast<Eigen::Index>(k)) = t.reward[uu];
      b.done(static_cast<Eigen::Index>(k)) = t.done ? 1.0 : 0.0;
    }
    b.obs.push_back(stack(o));
    b.act.push_back(stack(a));
    b.mask.push_back(stack(m));
    b.next_obs.push_back(stack(no));
    b.next_mask.push_back(stack(nm));
    b.reward.push_back(r);
  }
  return b;
}

std::unique_ptr<maddpg::Actor> make_actor(Variant v, int obs_dim, int act_dim, const TrainerConfig& cfg, Rng& rng) {
  if (v == Variant::hg)
    return std::make_unique<maddpg::DiffusionActor>(obs_dim, act_dim, cfg.denoise_steps, cfg.actor_hidden, rng);
  return std::make_unique<maddpg::GaussianActor>(obs_dim, act_dim, cfg.actor_hidden, cfg.gaussian_sigma, rng);
}

std::unique_ptr<env::Policy> baseline_policy(Variant v) {
  switch (v) {
    case Variant::random: return std::make_unique<env::RandomPolicy>();
    case Variant::greedy_local: return std::make_unique<env::GreedyLocalPolicy>();
    case Variant::lyapunov: return std::make_unique<env::LyapunovPolicy>();
    default: throw Error(ErrorKind::usage_error, "variant " + to_string(v) + " has no fixed policy");
  }
}

void update(std::vector<Agent>& agents, maddpg::ReplayMemory& mem,
            const TrainerConfig& cfg, double beta_is, double noise_scale, Rng& rng) {
  const int U = static_cast<int>(agents.size());
  const auto sampled = mem.sample(static_cast<std::size_t>(cfg.batch), beta_is, rng);
  const Minibatch b = gather(mem, sampled.slots, U);
  const int obs_dim = static_cast<int>(b.obs[0].rows());
  const int act_dim = static_cast<int>(b.act[0].rows());

  std::vector<MatrixXd> feat, next_feat;
  for (int u = 0; u < U; ++u) {
    const auto uu = static_cast<std::size_t>(u);
    feat.push_back(maddpg::action_features(b.act[uu], b.mask[uu]));
    const MatrixXd next_raw = agents[uu].target_actor->act(b.next_obs[uu], rng, 0.0, nullptr);
    next_feat.push_back(maddpg::action_features(next_raw, b.next_mask[uu]));
  }
  const MatrixXd x = maddpg::critic_input(b.obs, feat);
  const MatrixXd next_x = maddpg::critic_input(b.next_obs, next_feat);

  VectorXd td_max = VectorXd::Zero(static_cast<Eigen::Index>(cfg.batch));
  for (int u = 0; u < U; ++u) {
    Agent& a = agents[static_cast<std::size_t>(u)];
    const VectorXd next_q = a.target_critic.forward_batch(next_x).row(0).transpose();
    const VectorXd y = maddpg::td_targets(b.reward[static_cast<std::size_t>(u)], next_q, b.done, cfg.gamma);
    const auto step = maddpg::critic_update(a.critic, a.critic_opt, x, y, sampled.weights, cfg.critic_lr);
    td_max = td_max.cwiseMax(step.td.cwiseAbs());
  }
  mem.update_priorities(sampled.slots, td_max);

  const Eigen::Index feat_base = static_cast<Eigen::Index>(U) * obs_dim;
  for (int u = 0; u < U; ++u) {
    Agent& a = agents[static_cast<std::size_t>(u)];
    const MatrixXd& mask = b.mask[static_cast<std::size_t>(u)];
    const Eigen::Index off = feat_base + static_cast<Eigen::Index>(u) * act_dim;
    maddpg::QAndGrad qg = [&](const MatrixXd& raw) {
      MatrixXd input = x;
      input.middleRows(off, act_dim) = maddpg::action_features(raw, mask);
      neural::GradTape tape;
      const VectorXd q = a.critic.forward_batch(input, &tape).row(0).transpose();
      const auto back = a.critic.backward(tape, MatrixXd::Ones(1, input.cols()));
      const MatrixXd d_feat = back.d_input.middleRows(off, act_dim);
      return std::make_pair(q, maddpg::action_features_backward(raw, mask, d_feat));
    };
    maddpg::ActorUpdateOptions opt;
    opt.lr = cfg.actor_lr;
    opt.noise_scale = noise_scale;
    opt.bc_weight = cfg.bc_weight;
    opt.bc_targets = &b.act[static_cast<std::size_t>(u)];
    opt.range_penalty = cfg.range_penalty;
    maddpg::actor_update(*a.actor, a.actor_opt, b.obs[static_cast<std::size_t>(u)], qg, opt, rng);
  }
  for (auto& a : agents) {
    neural::soft_update(a.target_critic, a.critic, cfg.psi);
    neural::soft_update(a.target_actor->net(), a.actor->net(), cfg.psi);
  }
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::hg: return "hg";
    case Variant::plain: return "plain";
    case Variant::random: return "random";
    case Variant::greedy_local: return "greedy-local";
    case Variant::lyapunov: return "lyapunov";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::hg, Variant::plain, Variant::random, Variant::greedy_local, Variant::lyapunov})
    if (to_string(v) == name) return v;
  throw Error(ErrorKind::usage_error, "unknown variant '" + name + "'");
}

bool learns(Variant v) { return v == Variant::hg || v == Variant::plain; }

TrainerConfig TrainerConfig::full() {
  TrainerConfig c;
  c.batch = 512;
  return c;
}

TrainerConfig TrainerConfig::batch300() {
  TrainerConfig c;
  c.batch = 300;
  return c;
}

TrainerConfig TrainerConfig::desk() {
  TrainerConfig c;
  c.batch = 64;
  c.actor_lr = 1e-3;
  c.critic_lr = 1e-3;
  c.update_every = 1;
  c.replay_capacity = 20000;
  return c;
}

std::uint64_t world_seed(std::uint64_t seed) { return splitmix64(seed ^ kTrainKey); }
std::uint64_t eval_world_seed(std::uint64_t seed) { return splitmix64(seed ^ kEvalKey) ^ 0x5a5a5a5a5a5a5a5aULL; }

env::EnvConfig env_config_for(const TrainerConfig& cfg, Variant variant) {
  env::EnvConfig e = cfg.env;
  e.assignment_mode = variant == Variant::plain ? assignment::Mode::round_robin : assignment::Mode::hungarian;
  return e;
}

ActorPolicy::ActorPolicy(const std::vector<Agent>& agents, double noise_scale, std::string name)
    : noise_scale_(noise_scale), name_(std::move(name)) {
  for (const auto& a : agents) actors_.push_back(a.actor.get());
}

env::VectorXd ActorPolicy::act(const env::World&, int uav, const env::Observation& obs, Rng& rng) const {
  const auto* a = actors_.at(static_cast<std::size_t>(uav));
  return a->act(MatrixXd(obs.features), rng, noise_scale_, nullptr).col(0);
}

std::unique_ptr<env::Policy> make_policy(const TrainResult& result) {
  if (learns(result.variant)) return std::make_unique<ActorPolicy>(result.agents, 0.0, to_string(result.variant));
  return baseline_policy(result.variant);
}

TrainResult train(std::shared_ptr<const scenario::Scenario> scn, const TrainerConfig& cfg, Variant variant) {
  if (cfg.episodes < 0 || cfg.batch < 1 || !(cfg.gamma > 0.0 && cfg.gamma < 1.0) || !(cfg.psi > 0.0 && cfg.psi <= 1.0) ||
      cfg.update_every < 1)
    throw Error(ErrorKind::invalid_range, "trainer config out of range");
  env::World world(scn, env_config_for(cfg, variant), world_seed(cfg.seed));
  TrainResult out;
  out.variant = variant;
  out.obs_dim = world.obs_dim();
  out.act_dim = world.act_dim();
  Rng rng = substream(cfg.seed, {kTrainKey, 1});
  const int U = world.uav_count();

  std::unique_ptr<env::Policy> fixed;
  if (!learns(variant)) {
    fixed = baseline_policy(variant);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      env::EpisodeResult r = env::run_episode(world, ep, {fixed.get()}, rng);
      env::merge(out.audit, env::audit_records(*scn, r.records));
      out.curve.push_back(r.metrics);
      out.last_plan = world.plan();
      out.last_episode = std::move(r);
    }
    return out;
  }

  Rng init = substream(cfg.seed, {kTrainKey, 2});
  for (int u = 0; u < U; ++u) {
    Agent a;
    a.actor = make_actor(variant, out.obs_dim, out.act_dim, cfg, init);
    a.target_actor = a.actor->clone();
    const int critic_in = U * (out.obs_dim + out.act_dim);
    a.critic = neural::Mlp({critic_in, cfg.critic_hidden, cfg.critic_hidden, 1}, init);
    a.target_critic = a.critic;
    out.agents.push_back(std::move(a));
  }
  maddpg::ReplayMemory mem(cfg.replay_capacity);
  const long total_steps = static_cast<long>(cfg.episodes) * scn->time.slots_per_episode();
  long steps = 0;

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = std::max(cfg.eps_floor, cfg.eps0 * std::pow(1.0 - cfg.eps_decay, ep));
    world.reset(ep);
    env::EpisodeResult r;
    while (!world.done()) {
      std::vector<VectorXd> raw;
      for (int u = 0; u < U; ++u)
        raw.push_back(out.agents[static_cast<std::size_t>(u)].actor->act(MatrixXd(world.observe(u).features), rng,
                                                                         eps, nullptr).col(0));
      env::StepResult s = world.step(raw);
      mem.push(maddpg::join(s.transitions));
      for (auto& rec : s.records) r.records.push_back(std::move(rec));
      r.resource_maps.push_back(std::move(s.resource_map));
      ++steps;
      if (mem.size() >= static_cast<std::size_t>(cfg.batch) && steps % cfg.update_every == 0) {
        const double frac = total_steps > 0 ? static_cast<double>(steps) / static_cast<double>(total_steps) : 1.0;
        const double beta_is = cfg.beta_is_start + (1.0 - cfg.beta_is_start) * std::min(1.0, frac);
        update(out.agents, mem, cfg, beta_is, eps, rng);
        ++out.updates;
      }
    }
    r.metrics = env::summarize(ep, r.records, world);
    env::merge(out.audit, env::audit_records(*scn, r.records));
    out.curve.push_back(r.metrics);
    out.last_plan = world.plan();
    out.last_episode = std::move(r);
  }
  return out;
}

EvalResult evaluate(std::shared_ptr<const scenario::Scenario> scn, const TrainerConfig& cfg, Variant variant,
                    const env::Policy& policy, std::uint64_t eval_seed, int episodes, bool keep_records) {
  env::World world(scn, env_config_for(cfg, variant), eval_seed);
  Rng rng = substream(eval_seed, {kEvalKey});
  EvalResult out;
  for (int ep = 0; ep < episodes; ++ep) {
    env::EpisodeResult r = env::run_episode(world, ep, {&policy}, rng);
    env::merge(out.audit, env::audit_records(*scn, r.records));
    out.mean_latency_s += r.metrics.mean_latency_s;
    out.mean_energy_j += r.metrics.mean_energy_j;
    out.mean_reward += r.metrics.mean_reward;
    out.mean_q += r.metrics.mean_q;
    out.episodes.push_back(r.metrics);
    out.last_plan = world.plan();
    if (keep_records) {
      for (auto& rec : r.records) out.records.push_back(std::move(rec));
      for (auto& m : r.resource_maps) out.resource_maps.push_back(std::move(m));
    }
  }
  if (episodes > 0) {
    out.mean_latency_s /= episodes;
    out.mean_energy_j /= episodes;
    out.mean_reward /= episodes;
    out.mean_q /= episodes;
  }
  return out;
}

void save_checkpoints(const TrainResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir + "/checkpoints.txt");
  if (!manifest) throw Error(ErrorKind::io_error, "cannot write " + dir + "/checkpoints.txt");
  for (std::size_t u = 0; u < result.agents.size(); ++u) {
    const auto& a = result.agents[u];
    const std::string actor = "actor_" + std::to_string(u) + ".skyn";
    const std::string critic = "critic_" + std::to_string(u) + ".skyn";
    neural::save_checkpoint(a.actor->net(), dir + "/" + actor);
    neural::save_checkpoint(a.critic, dir + "/" + critic);
    manifest << neural::checkpoint_manifest(a.actor->net(), actor) << "\n"
             << neural::checkpoint_manifest(a.critic, critic) << "\n";
  }
}

std::vector<Agent> load_checkpoints(const std::string& dir, Variant variant, const TrainerConfig& cfg, int uavs,
                                    int obs_dim, int act_dim) {
  if (!learns(variant)) return {};
  std::vector<Agent> agents;
  Rng scratch(0);
  auto fits = [](const neural::Mlp& a, const neural::Mlp& b) {
    if (a.layers().size() != b.layers().size()) return false;
    for (std::size_t i = 0; i < a.layers().size(); ++i)
      if (a.layers()[i].weight.rows() != b.layers()[i].weight.rows() ||
          a.layers()[i].weight.cols() != b.layers()[i].weight.cols())
        return false;
    return true;
  };
  for (int u = 0; u < uavs; ++u) {
    const std::string actor_path = dir + "/actor_" + std::to_string(u) + ".skyn";
    const std::string critic_path = dir + "/critic_" + std::to_string(u) + ".skyn";
    if (!std::filesystem::exists(actor_path)) throw Error(ErrorKind::missing_artifact, actor_path);
    if (!std::filesystem::exists(critic_path)) throw Error(ErrorKind::missing_artifact, critic_path);
    Agent a;
    a.actor = make_actor(variant, obs_dim, act_dim, cfg, scratch);
    const neural::Mlp actor_net = neural::load_checkpoint(actor_path);
    if (!fits(actor_net, a.actor->net())) throw Error(ErrorKind::shape_mismatch, actor_path + " has other shapes");
    a.actor->net() = actor_net;
    a.target_actor = a.actor->clone();
    a.critic = neural::load_checkpoint(critic_path);
    if (a.critic.input_size() != uavs * (obs_dim + act_dim))
      throw Error(ErrorKind::shape_mismatch, critic_path + " has another input width");
    a.target_critic = a.critic;
    agents.push_back(std::move(a));
  }
  return agents;
}

}  // namespace skyrescue::trainer
