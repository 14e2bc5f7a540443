#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "skyrescue/env.hpp"
#include "skyrescue/maddpg.hpp"

namespace skyrescue::trainer {

enum class Variant { hg, plain, random, greedy_local, lyapunov };

std::string to_string(Variant v);
// Throws usage-error on an unknown name.
Variant parse_variant(const std::string& name);
bool learns(Variant v);

struct TrainerConfig {
  int episodes = 300;
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  int batch = 256;
  double gamma = 0.9;
  double psi = 0.01;
  double eps0 = 0.9;
  double eps_decay = 1e-4;
  double eps_floor = 0.05;
  double bc_weight = 0.05;
  double range_penalty = 1.0;
  double beta_is_start = 0.4;
  std::size_t replay_capacity = 100000;
  int denoise_steps = 5;
  int actor_hidden = 64;
  int critic_hidden = 128;
  double gaussian_sigma = 1.0;
  // Gradient updates happen every `update_every` environment steps once the
  // memory holds a full batch.
  int update_every = 1;
  env::EnvConfig env;
  std::uint64_t seed = 1;

  // Full-scale values: batch 512, one update per step.
  static TrainerConfig full();
  // Same, with the 300-sample batch that tuned best.
  static TrainerConfig batch300();
  // Small-batch settings that finish 300 episodes in minutes on one core.
  static TrainerConfig desk();
};

struct Agent {
  std::unique_ptr<maddpg::Actor> actor;
  std::unique_ptr<maddpg::Actor> target_actor;
  neural::Mlp critic;
  neural::Mlp target_critic;
  neural::AdamState actor_opt;
  neural::AdamState critic_opt;
};

struct TrainResult {
  Variant variant = Variant::hg;
  std::vector<env::EpisodeMetrics> curve;
  std::vector<Agent> agents;  // empty for non-learning variants
  env::EpisodeResult last_episode;
  std::vector<assignment::RoundAssignment> last_plan;
  env::AuditReport audit;
  int updates = 0;
  int obs_dim = 0;
  int act_dim = 0;
};

// Deterministic for a fixed config and seed.
TrainResult train(std::shared_ptr<const scenario::Scenario> scn, const TrainerConfig& cfg, Variant variant);

// Decentralized execution of trained actors. noise_scale 0 removes the step
// noise; the diffusion start x_T is still drawn from the episode generator.
class ActorPolicy : public env::Policy {
 public:
  ActorPolicy(const std::vector<Agent>& agents, double noise_scale, std::string name);
  env::VectorXd act(const env::World& world, int uav, const env::Observation& obs, Rng& rng) const override;
  std::string name() const override { return name_; }

 private:
  std::vector<const maddpg::Actor*> actors_;
  double noise_scale_;
  std::string name_;
};

struct EvalResult {
  double mean_latency_s = 0.0;
  double mean_energy_j = 0.0;
  double mean_reward = 0.0;
  double mean_q = 0.0;
  std::vector<env::EpisodeMetrics> episodes;
  std::vector<env::SlotRecord> records;
  std::vector<std::vector<env::GerUsage>> resource_maps;
  std::vector<assignment::RoundAssignment> last_plan;
  env::AuditReport audit;
};

// Policy for a trained result (actors) or the fixed baseline it names.
std::unique_ptr<env::Policy> make_policy(const TrainResult& result);

// Runs `episodes` evaluation episodes on a world seeded with `eval_seed`
// (kept disjoint from training seeds by the caller). Assignment mode follows
// the variant: round-robin for plain, Hungarian otherwise.
EvalResult evaluate(std::shared_ptr<const scenario::Scenario> scn, const TrainerConfig& cfg, Variant variant,
                    const env::Policy& policy, std::uint64_t eval_seed, int episodes, bool keep_records = true);

env::EnvConfig env_config_for(const TrainerConfig& cfg, Variant variant);

// Training world seed derived from the trainer seed.
std::uint64_t world_seed(std::uint64_t seed);
// Evaluation seeds live in a separate key space from training seeds.
std::uint64_t eval_world_seed(std::uint64_t seed);

void save_checkpoints(const TrainResult& result, const std::string& dir);
// Rebuilds agents saved by save_checkpoints; throws missing-artifact or
// shape-mismatch when the files do not fit the given dimensions.
std::vector<Agent> load_checkpoints(const std::string& dir, Variant variant, const TrainerConfig& cfg, int uavs,
                                    int obs_dim, int act_dim);

}  // namespace skyrescue::trainer
