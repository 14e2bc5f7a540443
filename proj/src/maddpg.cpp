#include "skyrescue/maddpg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skyrescue/error.hpp"

namespace skyrescue::maddpg {

JointTransition join(const std::vector<env::Transition>& per_agent) {
  const std::size_t n = per_agent.size();
  JointTransition j;
  j.obs.resize(n);
  j.act.resize(n);
  j.mask.resize(n);
  j.reward.assign(n, 0.0);
  j.next_obs.resize(n);
  j.next_mask.resize(n);
  std::vector<char> seen(n, 0);
  for (const auto& t : per_agent) {
    const auto u = static_cast<std::size_t>(t.agent);
    if (t.agent < 0 || u >= n || seen[u])
      throw Error(ErrorKind::invariant_violation, "agent ids must be a permutation of 0..U-1");
    seen[u] = 1;
    j.obs[u] = t.obs;
    j.act[u] = t.action;
    j.mask[u] = t.mask;
    j.reward[u] = t.reward;
    j.next_obs[u] = t.next_obs;
    j.next_mask[u] = t.next_mask;
    j.done = j.done || t.done;
  }
  return j;
}

ReplayMemory::ReplayMemory(std::size_t capacity, double priority_eps) : capacity_(capacity), eps_(priority_eps) {
  if (capacity == 0) throw Error(ErrorKind::invalid_range, "replay capacity must be positive");
  while (leaves_ < capacity) leaves_ <<= 1;
  tree_.assign(2 * leaves_, 0.0);
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayMemory::set_priority(std::size_t slot, double p) {
  std::size_t i = slot + leaves_;
  tree_[i] = p;
  for (i >>= 1; i >= 1; i >>= 1) tree_[i] = tree_[2 * i] + tree_[2 * i + 1];
}

double ReplayMemory::priority(std::size_t slot) const { return tree_.at(slot + leaves_); }

void ReplayMemory::push(JointTransition t) {
  if (data_.size() < capacity_)
    data_.push_back(std::move(t));
  else
    data_[next_] = std::move(t);
  set_priority(next_, max_priority_);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

ReplayMemory::Batch ReplayMemory::sample(std::size_t batch, double beta_is, Rng& rng) const {
  if (size_ == 0 || batch == 0 || batch > size_)
    throw Error(ErrorKind::empty_memory, "cannot draw " + std::to_string(batch) + " from " + std::to_string(size_));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Batch b;
  b.slots.resize(batch);
  b.weights.resize(static_cast<Eigen::Index>(batch));
  const double total = tree_[1];
  for (std::size_t k = 0; k < batch; ++k) {
    double x = unit(rng) * total;
    std::size_t i = 1;
    while (i < leaves_) {
      if (x < tree_[2 * i] || tree_[2 * i + 1] <= 0.0) {
        i = 2 * i;
      } else {
        x -= tree_[2 * i];
        i = 2 * i + 1;
      }
    }
    std::size_t slot = i - leaves_;
    if (slot >= size_) slot = size_ - 1;  // guards rounding at the right edge
    b.slots[k] = slot;
    const double p = tree_[i] / total;
    b.weights(static_cast<Eigen::Index>(k)) = std::pow(static_cast<double>(size_) * p, -beta_is);
  }
  b.weights /= b.weights.maxCoeff();
  return b;
}

void ReplayMemory::update_priorities(const std::vector<std::size_t>& slots, const VectorXd& td_abs) {
  if (static_cast<Eigen::Index>(slots.size()) != td_abs.size())
    throw Error(ErrorKind::shape_mismatch, "priority update lengths differ");
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const double p = std::abs(td_abs(static_cast<Eigen::Index>(k))) + eps_;
    max_priority_ = std::max(max_priority_, p);
    set_priority(slots[k], p);
  }
}

diffusion::LossAndGrad Actor::denoising_loss(const MatrixXd&, const MatrixXd&, Rng&) const {
  diffusion::LossAndGrad out;
  out.grads = net().zero_grads();
  return out;
}

DiffusionActor::DiffusionActor(int obs_dim, int act_dim, int steps, int hidden, Rng& rng)
    : eps_(act_dim, obs_dim, steps, hidden, rng), schedule_(diffusion::default_schedule(steps)) {}

DiffusionActor::DiffusionActor(diffusion::EpsilonNet net, diffusion::NoiseSchedule schedule)
    : eps_(std::move(net)), schedule_(std::move(schedule)) {}

MatrixXd DiffusionActor::act(const MatrixXd& obs, Rng& rng, double noise_scale, ActorTape* tape) const {
  const diffusion::ChainNoise noise =
      diffusion::draw_chain_noise(act_dim(), static_cast<int>(obs.cols()), schedule_.steps, rng);
  return diffusion::reverse_chain(eps_, schedule_, obs, noise, noise_scale, tape != nullptr ? &tape->chain : nullptr);
}

neural::Grads DiffusionActor::backward(const ActorTape& tape, const MatrixXd& d_act) const {
  return diffusion::chain_backward(eps_, schedule_, tape.chain, d_act);
}

diffusion::LossAndGrad DiffusionActor::denoising_loss(const MatrixXd& obs, const MatrixXd& actions, Rng& rng) const {
  return diffusion::denoising_loss_and_grad(eps_, schedule_, actions, obs, rng);
}

GaussianActor::GaussianActor(int obs_dim, int act_dim, int hidden, double sigma, Rng& rng)
    : mean_({obs_dim, hidden, act_dim}, rng), sigma_(sigma) {}

MatrixXd GaussianActor::act(const MatrixXd& obs, Rng& rng, double noise_scale, ActorTape* tape) const {
  MatrixXd a = mean_.forward_batch(obs, tape != nullptr ? &tape->direct : nullptr);
  if (noise_scale != 0.0) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) += noise_scale * sigma_ * n(rng);
  }
  return a;
}

neural::Grads GaussianActor::backward(const ActorTape& tape, const MatrixXd& d_act) const {
  return mean_.backward(tape.direct, d_act).grads;
}

MatrixXd action_features(const MatrixXd& raw, const MatrixXd& mask) {
  const Eigen::Index logits = raw.rows() - 1;
  if (mask.rows() != logits || mask.cols() != raw.cols())
    throw Error(ErrorKind::shape_mismatch, "action mask does not match the raw actions");
  MatrixXd f = MatrixXd::Zero(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < logits; ++i)
      if (mask(i, j) > 0.5) top = std::max(top, raw(i, j));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits; ++i) {
      if (mask(i, j) > 0.5) {
        f(i, j) = std::exp(raw(i, j) - top);
        sum += f(i, j);
      }
    }
    if (sum > 0.0) f.col(j).head(logits) /= sum;
    f(logits, j) = raw(logits, j);
  }
  return f;
}

MatrixXd action_features_backward(const MatrixXd& raw, const MatrixXd& mask, const MatrixXd& d_features) {
  const MatrixXd f = action_features(raw, mask);
  const Eigen::Index logits = raw.rows() - 1;
  MatrixXd d = MatrixXd::Zero(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double inner = f.col(j).head(logits).dot(d_features.col(j).head(logits));
    for (Eigen::Index i = 0; i < logits; ++i) d(i, j) = f(i, j) * (d_features(i, j) - inner);
    d(logits, j) = d_features(logits, j);
  }
  return d;
}

MatrixXd critic_input(const std::vector<MatrixXd>& obs, const std::vector<MatrixXd>& features) {
  if (obs.size() != features.size() || obs.empty()) throw Error(ErrorKind::shape_mismatch, "critic input agents differ");
  Eigen::Index rows = 0;
  const Eigen::Index cols = obs[0].cols();
  for (const auto& o : obs) rows += o.rows();
  for (const auto& f : features) rows += f.rows();
  MatrixXd x(rows, cols);
  Eigen::Index at = 0;
  for (const auto* group : {&obs, &features}) {
    for (const auto& m : *group) {
      if (m.cols() != cols) throw Error(ErrorKind::shape_mismatch, "critic input batch sizes differ");
      x.middleRows(at, m.rows()) = m;
      at += m.rows();
    }
  }
  return x;
}

VectorXd td_targets(const VectorXd& rewards, const VectorXd& next_q, const VectorXd& done, double gamma) {
  if (rewards.size() != next_q.size() || rewards.size() != done.size())
    throw Error(ErrorKind::shape_mismatch, "TD target inputs differ in length");
  return rewards.array() + gamma * (1.0 - done.array()) * next_q.array();
}

CriticStep critic_update(neural::Mlp& critic, neural::AdamState& state, const MatrixXd& inputs,
                         const VectorXd& targets, const VectorXd& weights, double lr) {
  if (inputs.rows() != critic.input_size() || critic.output_size() != 1)
    throw Error(ErrorKind::shape_mismatch, "critic input width mismatch");
  if (targets.size() != inputs.cols() || weights.size() != inputs.cols())
    throw Error(ErrorKind::shape_mismatch, "critic batch lengths differ");
  neural::GradTape tape;
  const VectorXd q = critic.forward_batch(inputs, &tape).row(0).transpose();
  const double n = static_cast<double>(inputs.cols());
  CriticStep out;
  out.td = targets - q;
  out.loss = (weights.array() * out.td.array().square()).sum() / n;
  const MatrixXd dq = ((-2.0 / n) * weights.array() * out.td.array()).matrix().transpose();
  out.grads = critic.backward(tape, dq).grads;
  neural::adam_step(critic, out.grads, state, lr);
  return out;
}

ActorStep actor_update(Actor& actor, neural::AdamState& state, const MatrixXd& obs, const QAndGrad& q_and_grad,
                       const ActorUpdateOptions& options, Rng& rng) {
  ActorTape tape;
  const MatrixXd raw = actor.act(obs, rng, options.noise_scale, &tape);
  const auto [q, dq] = q_and_grad(raw);
  const double n = static_cast<double>(raw.cols());
  if (dq.rows() != raw.rows() || dq.cols() != raw.cols())
    throw Error(ErrorKind::shape_mismatch, "critic action gradient shape mismatch");

  ActorStep out;
  out.mean_q = q.mean();
  out.loss = -out.mean_q;
  MatrixXd d_act = -dq / n;
  if (options.range_penalty > 0.0) {
    const Eigen::Index r = raw.rows() - 1;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      const double v = raw(r, j);
      const double over = std::max(0.0, v - 1.0) - std::max(0.0, -v);
      out.loss += options.range_penalty * over * over / n;
      d_act(r, j) += 2.0 * options.range_penalty * over / n;
    }
  }
  out.grads = actor.backward(tape, d_act);
  if (options.bc_weight > 0.0 && options.bc_targets != nullptr && actor.has_denoising_loss()) {
    const diffusion::LossAndGrad bc = actor.denoising_loss(obs, *options.bc_targets, rng);
    out.loss += options.bc_weight * bc.loss;
    out.grads.add(bc.grads, options.bc_weight);
  }
  neural::adam_step(actor.net(), out.grads, state, options.lr);
  return out;
}

}  // namespace skyrescue::maddpg
