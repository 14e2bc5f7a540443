#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "skyrescue/error.hpp"
#include "skyrescue/neural.hpp"
#include "skyrescue/rng.hpp"

namespace skyrescue::diffusion {

using neural::MatrixXd;
using neural::VectorXd;

// Entry t-1 holds the values for denoising step t.
struct NoiseSchedule {
  int steps = 0;
  VectorXd beta;
  VectorXd alpha;
  VectorXd alpha_bar;
};

// Linear betas from beta_start to beta_end; throws invalid-range.
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

// 1e-4 .. 0.02 rescaled by 50 / steps so short chains still reach a
// noise-dominated x_T (steps = 5 gives 1e-3 .. 0.2).
NoiseSchedule default_schedule(int steps = 5);

// Noise predictor: input is [x_t ; condition ; one-hot(t)].
class EpsilonNet {
 public:
  EpsilonNet() = default;
  EpsilonNet(int x_dim, int cond_dim, int steps, int hidden, Rng& rng);

  int x_dim() const { return x_dim_; }
  int cond_dim() const { return cond_dim_; }
  int steps() const { return steps_; }

  MatrixXd input(const MatrixXd& x, const MatrixXd& cond, const std::vector<int>& t) const;
  MatrixXd operator()(const MatrixXd& x, const MatrixXd& cond, const std::vector<int>& t,
                      neural::GradTape* tape = nullptr) const;

  neural::Mlp net;

 private:
  int x_dim_ = 0;
  int cond_dim_ = 0;
  int steps_ = 0;
};

// Frozen randomness of one batched reverse chain; z[t-1] is the step-t noise
// (z[0] is never used because the last step is noise-free).
struct ChainNoise {
  MatrixXd x_T;
  std::vector<MatrixXd> z;
};

ChainNoise draw_chain_noise(int dim, int batch, int steps, Rng& rng);

struct StepCoefficients {
  double keep = 0.0;   // 1 / sqrt(alpha_t)
  double eps = 0.0;    // beta_t / sqrt(alpha_t (1 - alpha_bar_t))
  double noise = 0.0;  // sqrt(beta_t), zero at t = 1
};

StepCoefficients step_coefficients(const NoiseSchedule& s, int t);

// Generic reverse chain over any predictor callable as pred(x, cond, t_vec).
// `noise_scale` multiplies the injected step noise (0 gives the mean chain).
template <class Predictor>
MatrixXd reverse_chain(const Predictor& pred, const NoiseSchedule& s, const MatrixXd& cond, const ChainNoise& noise,
                       double noise_scale) {
  MatrixXd x = noise.x_T;
  for (int t = s.steps; t >= 1; --t) {
    std::vector<int> tv(static_cast<std::size_t>(x.cols()), t);
    const StepCoefficients c = step_coefficients(s, t);
    MatrixXd next = c.keep * x - c.eps * pred(x, cond, tv);
    if (t > 1 && noise_scale != 0.0) next += (noise_scale * c.noise) * noise.z[static_cast<std::size_t>(t - 1)];
    x = std::move(next);
  }
  return x;
}

template <class Predictor>
VectorXd reverse_sample(const Predictor& pred, const NoiseSchedule& s, const VectorXd& cond, Rng& rng,
                        int x_dim, double noise_scale = 1.0) {
  const ChainNoise noise = draw_chain_noise(x_dim, 1, s.steps, rng);
  return reverse_chain(pred, s, MatrixXd(cond), noise, noise_scale).col(0);
}

VectorXd reverse_sample(const EpsilonNet& net, const NoiseSchedule& s, const VectorXd& cond, Rng& rng,
                        double noise_scale = 1.0);

// Per-step tapes of a batched chain through an EpsilonNet.
struct ChainTape {
  std::vector<neural::GradTape> tapes;  // index t-1
};

MatrixXd reverse_chain(const EpsilonNet& net, const NoiseSchedule& s, const MatrixXd& cond, const ChainNoise& noise,
                       double noise_scale, ChainTape* tape);

// Backpropagates dL/dx_0 through every denoising step to the network
// parameters.
neural::Grads chain_backward(const EpsilonNet& net, const NoiseSchedule& s, const ChainTape& tape,
                             const MatrixXd& d_x0);

// Per-sample timestep (uniform in 1..T) and Gaussian target noise, drawn in
// that order.
struct LossDraw {
  std::vector<int> t;
  MatrixXd eps;
};

LossDraw draw_loss_noise(int dim, int batch, int steps, Rng& rng);

MatrixXd noised_input(const NoiseSchedule& s, const MatrixXd& x0, const LossDraw& d);

// mean over the batch of || eps - pred(sqrt(ab) x0 + sqrt(1 - ab) eps, g, t) ||^2
template <class Predictor>
double denoising_loss(const Predictor& pred, const NoiseSchedule& s, const MatrixXd& x0, const MatrixXd& cond,
                      Rng& rng) {
  if (x0.cols() == 0) throw Error(ErrorKind::invalid_range, "denoising loss needs a non-empty batch");
  const LossDraw d = draw_loss_noise(static_cast<int>(x0.rows()), static_cast<int>(x0.cols()), s.steps, rng);
  const MatrixXd r = d.eps - pred(noised_input(s, x0, d), cond, d.t);
  return r.squaredNorm() / static_cast<double>(x0.cols());
}

struct LossAndGrad {
  double loss = 0.0;
  neural::Grads grads;
};

// Same draws as denoising_loss for an identical generator state.
LossAndGrad denoising_loss_and_grad(const EpsilonNet& net, const NoiseSchedule& s, const MatrixXd& x0,
                                    const MatrixXd& cond, Rng& rng);

// Variance of x_0 per coordinate when the predictor is identically zero.
double zero_predictor_variance(const NoiseSchedule& s, double noise_scale = 1.0);

}  // namespace skyrescue::diffusion
