#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "skyrescue/diffusion.hpp"
#include "skyrescue/env.hpp"
#include "skyrescue/neural.hpp"

namespace skyrescue::maddpg {

using neural::MatrixXd;
using neural::VectorXd;

// All agents' view of one slot; entry u belongs to agent u.
struct JointTransition {
  std::vector<VectorXd> obs;
  std::vector<VectorXd> act;
  std::vector<VectorXd> mask;
  std::vector<double> reward;
  std::vector<VectorXd> next_obs;
  std::vector<VectorXd> next_mask;
  bool done = false;
};

JointTransition join(const std::vector<env::Transition>& per_agent);

// Ring buffer with proportional prioritized sampling over a sum tree.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity, double priority_eps = 1e-3);

  // New entries get the largest priority seen so far.
  void push(JointTransition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  const JointTransition& at(std::size_t slot) const { return data_.at(slot); }
  double priority(std::size_t slot) const;
  double total_priority() const { return tree_[1]; }

  struct Batch {
    std::vector<std::size_t> slots;
    VectorXd weights;  // (N P_i)^-beta, divided by the batch maximum
  };

  // Throws empty-memory when nothing is stored or batch exceeds size.
  Batch sample(std::size_t batch, double beta_is, Rng& rng) const;
  // priority = |td| + eps
  void update_priorities(const std::vector<std::size_t>& slots, const VectorXd& td_abs);

 private:
  void set_priority(std::size_t slot, double p);

  std::size_t capacity_;
  std::size_t leaves_ = 1;
  double eps_;
  double max_priority_ = 1.0;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::vector<JointTransition> data_;
  std::vector<double> tree_;
};

struct ActorTape {
  diffusion::ChainTape chain;
  neural::GradTape direct;
};

// Decentralized actor producing raw action vectors (logits + ratio channel).
class Actor {
 public:
  virtual ~Actor() = default;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  // Columns are samples. noise_scale multiplies the exploration noise.
  virtual MatrixXd act(const MatrixXd& obs, Rng& rng, double noise_scale, ActorTape* tape) const = 0;
  virtual neural::Grads backward(const ActorTape& tape, const MatrixXd& d_act) const = 0;
  virtual neural::Mlp& net() = 0;
  virtual const neural::Mlp& net() const = 0;
  virtual std::unique_ptr<Actor> clone() const = 0;
  // Denoising regularizer toward `actions`; only the diffusion actor has one.
  virtual bool has_denoising_loss() const { return false; }
  virtual diffusion::LossAndGrad denoising_loss(const MatrixXd& obs, const MatrixXd& actions, Rng& rng) const;
};

// Reverse diffusion chain conditioned on the observation. Exploration scales
// the injected step noise; x_T is always drawn.
class DiffusionActor : public Actor {
 public:
  DiffusionActor(int obs_dim, int act_dim, int steps, int hidden, Rng& rng);
  DiffusionActor(diffusion::EpsilonNet net, diffusion::NoiseSchedule schedule);

  int obs_dim() const override { return eps_.cond_dim(); }
  int act_dim() const override { return eps_.x_dim(); }
  MatrixXd act(const MatrixXd& obs, Rng& rng, double noise_scale, ActorTape* tape) const override;
  neural::Grads backward(const ActorTape& tape, const MatrixXd& d_act) const override;
  neural::Mlp& net() override { return eps_.net; }
  const neural::Mlp& net() const override { return eps_.net; }
  std::unique_ptr<Actor> clone() const override { return std::make_unique<DiffusionActor>(*this); }
  bool has_denoising_loss() const override { return true; }
  diffusion::LossAndGrad denoising_loss(const MatrixXd& obs, const MatrixXd& actions, Rng& rng) const override;

  const diffusion::NoiseSchedule& schedule() const { return schedule_; }
  const diffusion::EpsilonNet& epsilon_net() const { return eps_; }

 private:
  diffusion::EpsilonNet eps_;
  diffusion::NoiseSchedule schedule_;
};

// Plain baseline: mean network plus isotropic Gaussian exploration.
class GaussianActor : public Actor {
 public:
  GaussianActor(int obs_dim, int act_dim, int hidden, double sigma, Rng& rng);

  int obs_dim() const override { return mean_.input_size(); }
  int act_dim() const override { return mean_.output_size(); }
  MatrixXd act(const MatrixXd& obs, Rng& rng, double noise_scale, ActorTape* tape) const override;
  neural::Grads backward(const ActorTape& tape, const MatrixXd& d_act) const override;
  neural::Mlp& net() override { return mean_; }
  const neural::Mlp& net() const override { return mean_; }
  std::unique_ptr<Actor> clone() const override { return std::make_unique<GaussianActor>(*this); }

 private:
  neural::Mlp mean_;
  double sigma_;
};

// Critic action features: softmax over the unmasked target logits (masked
// entries are 0) followed by the raw ratio channel.
MatrixXd action_features(const MatrixXd& raw, const MatrixXd& mask);
MatrixXd action_features_backward(const MatrixXd& raw, const MatrixXd& mask, const MatrixXd& d_features);

// Rows: [obs_0; ...; obs_{U-1}; feat_0; ...; feat_{U-1}].
MatrixXd critic_input(const std::vector<MatrixXd>& obs, const std::vector<MatrixXd>& features);

// y = r + gamma (1 - done) q'
VectorXd td_targets(const VectorXd& rewards, const VectorXd& next_q, const VectorXd& done, double gamma);

struct CriticStep {
  double loss = 0.0;
  VectorXd td;  // y - Q(O, A) before the update
  neural::Grads grads;
};

// Importance-weighted MSE mean(w (Q - y)^2) and one Adam step.
CriticStep critic_update(neural::Mlp& critic, neural::AdamState& state, const MatrixXd& inputs,
                         const VectorXd& targets, const VectorXd& weights, double lr);

// Returns Q per sample and dQ/d(raw action) for a batch of raw actions.
using QAndGrad = std::function<std::pair<VectorXd, MatrixXd>(const MatrixXd& raw_actions)>;

struct ActorUpdateOptions {
  double lr = 1e-4;
  double noise_scale = 0.0;
  double bc_weight = 0.0;
  const MatrixXd* bc_targets = nullptr;
  // Quadratic penalty on the ratio channel outside [0, 1].
  double range_penalty = 0.0;
};

struct ActorStep {
  double loss = 0.0;
  double mean_q = 0.0;
  neural::Grads grads;
};

// Regenerates actions with frozen noise, ascends Q through the actor and
// takes one Adam step.
ActorStep actor_update(Actor& actor, neural::AdamState& state, const MatrixXd& obs, const QAndGrad& q_and_grad,
                       const ActorUpdateOptions& options, Rng& rng);

using neural::soft_update;

}  // namespace skyrescue::maddpg
