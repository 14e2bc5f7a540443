#include "skyrescue/diffusion.hpp"

#include <string>

namespace skyrescue::diffusion {

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw Error(ErrorKind::invalid_range, "diffusion needs at least one step");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw Error(ErrorKind::invalid_range, "betas must satisfy 0 < start <= end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.beta.resize(steps);
  s.alpha.resize(steps);
  s.alpha_bar.resize(steps);
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    s.beta(i) = beta_start + frac * (beta_end - beta_start);
    s.alpha(i) = 1.0 - s.beta(i);
    prod *= s.alpha(i);
    s.alpha_bar(i) = prod;
  }
  return s;
}

NoiseSchedule default_schedule(int steps) {
  if (steps < 1) throw Error(ErrorKind::invalid_range, "diffusion needs at least one step");
  const double scale = 50.0 / steps;
  return make_schedule(steps, std::min(1e-4 * scale, 0.5), std::min(0.02 * scale, 0.5));
}

EpsilonNet::EpsilonNet(int x_dim, int cond_dim, int steps, int hidden, Rng& rng)
    : net({x_dim + cond_dim + steps, hidden, x_dim}, rng), x_dim_(x_dim), cond_dim_(cond_dim), steps_(steps) {}

MatrixXd EpsilonNet::input(const MatrixXd& x, const MatrixXd& cond, const std::vector<int>& t) const {
  const Eigen::Index batch = x.cols();
  if (x.rows() != x_dim_ || cond.rows() != cond_dim_ || cond.cols() != batch ||
      static_cast<Eigen::Index>(t.size()) != batch)
    throw Error(ErrorKind::shape_mismatch, "epsilon-network input shapes disagree");
  MatrixXd in = MatrixXd::Zero(x_dim_ + cond_dim_ + steps_, batch);
  in.topRows(x_dim_) = x;
  in.middleRows(x_dim_, cond_dim_) = cond;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int tb = t[static_cast<std::size_t>(b)];
    if (tb < 1 || tb > steps_) throw Error(ErrorKind::invalid_range, "timestep outside 1..T");
    in(x_dim_ + cond_dim_ + tb - 1, b) = 1.0;
  }
  return in;
}

MatrixXd EpsilonNet::operator()(const MatrixXd& x, const MatrixXd& cond, const std::vector<int>& t,
                                neural::GradTape* tape) const {
  return net.forward_batch(input(x, cond, t), tape);
}

ChainNoise draw_chain_noise(int dim, int batch, int steps, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ChainNoise c;
  c.x_T.resize(dim, batch);
  for (Eigen::Index j = 0; j < batch; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) c.x_T(i, j) = n(rng);
  c.z.assign(static_cast<std::size_t>(steps), MatrixXd::Zero(dim, batch));
  for (int t = steps; t >= 2; --t) {
    MatrixXd& z = c.z[static_cast<std::size_t>(t - 1)];
    for (Eigen::Index j = 0; j < batch; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) z(i, j) = n(rng);
  }
  return c;
}

StepCoefficients step_coefficients(const NoiseSchedule& s, int t) {
  const double a = s.alpha(t - 1);
  const double b = s.beta(t - 1);
  const double ab = s.alpha_bar(t - 1);
  StepCoefficients c;
  c.keep = 1.0 / std::sqrt(a);
  c.eps = b / std::sqrt(a * (1.0 - ab));
  c.noise = t > 1 ? std::sqrt(b) : 0.0;
  return c;
}

VectorXd reverse_sample(const EpsilonNet& net, const NoiseSchedule& s, const VectorXd& cond, Rng& rng,
                        double noise_scale) {
  const ChainNoise noise = draw_chain_noise(net.x_dim(), 1, s.steps, rng);
  return reverse_chain(net, s, MatrixXd(cond), noise, noise_scale, nullptr).col(0);
}

MatrixXd reverse_chain(const EpsilonNet& net, const NoiseSchedule& s, const MatrixXd& cond, const ChainNoise& noise,
                       double noise_scale, ChainTape* tape) {
  if (tape != nullptr) tape->tapes.assign(static_cast<std::size_t>(s.steps), {});
  MatrixXd x = noise.x_T;
  for (int t = s.steps; t >= 1; --t) {
    const std::vector<int> tv(static_cast<std::size_t>(x.cols()), t);
    const StepCoefficients c = step_coefficients(s, t);
    neural::GradTape* step_tape = tape != nullptr ? &tape->tapes[static_cast<std::size_t>(t - 1)] : nullptr;
    MatrixXd next = c.keep * x - c.eps * net(x, cond, tv, step_tape);
    if (t > 1 && noise_scale != 0.0) next += (noise_scale * c.noise) * noise.z[static_cast<std::size_t>(t - 1)];
    x = std::move(next);
  }
  return x;
}

neural::Grads chain_backward(const EpsilonNet& net, const NoiseSchedule& s, const ChainTape& tape,
                             const MatrixXd& d_x0) {
  if (static_cast<int>(tape.tapes.size()) != s.steps) throw Error(ErrorKind::stale_tape, "chain tape length differs");
  neural::Grads total = net.net.zero_grads();
  MatrixXd g = d_x0;  // dL/dx_{t-1}
  for (int t = 1; t <= s.steps; ++t) {
    const StepCoefficients c = step_coefficients(s, t);
    // x_{t-1} = keep x_t - eps * net(x_t)
    const neural::Backward b = net.net.backward(tape.tapes[static_cast<std::size_t>(t - 1)], -c.eps * g);
    total.add(b.grads);
    g = c.keep * g + b.d_input.topRows(net.x_dim());
  }
  return total;
}

LossDraw draw_loss_noise(int dim, int batch, int steps, Rng& rng) {
  LossDraw d;
  std::uniform_int_distribution<int> pick(1, steps);
  d.t.resize(static_cast<std::size_t>(batch));
  for (auto& t : d.t) t = pick(rng);
  std::normal_distribution<double> n(0.0, 1.0);
  d.eps.resize(dim, batch);
  for (Eigen::Index j = 0; j < batch; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) d.eps(i, j) = n(rng);
  return d;
}

MatrixXd noised_input(const NoiseSchedule& s, const MatrixXd& x0, const LossDraw& d) {
  MatrixXd xt(x0.rows(), x0.cols());
  for (Eigen::Index j = 0; j < x0.cols(); ++j) {
    const double ab = s.alpha_bar(d.t[static_cast<std::size_t>(j)] - 1);
    xt.col(j) = std::sqrt(ab) * x0.col(j) + std::sqrt(1.0 - ab) * d.eps.col(j);
  }
  return xt;
}

LossAndGrad denoising_loss_and_grad(const EpsilonNet& net, const NoiseSchedule& s, const MatrixXd& x0,
                                    const MatrixXd& cond, Rng& rng) {
  if (x0.cols() == 0) throw Error(ErrorKind::invalid_range, "denoising loss needs a non-empty batch");
  const LossDraw d = draw_loss_noise(static_cast<int>(x0.rows()), static_cast<int>(x0.cols()), s.steps, rng);
  neural::GradTape tape;
  const MatrixXd r = d.eps - net(noised_input(s, x0, d), cond, d.t, &tape);
  const double n = static_cast<double>(x0.cols());
  LossAndGrad out;
  out.loss = r.squaredNorm() / n;
  out.grads = net.net.backward(tape, (-2.0 / n) * r).grads;
  return out;
}

double zero_predictor_variance(const NoiseSchedule& s, double noise_scale) {
  double var = 1.0;
  for (int t = s.steps; t >= 1; --t) {
    const StepCoefficients c = step_coefficients(s, t);
    var = c.keep * c.keep * var + noise_scale * noise_scale * c.noise * c.noise;
  }
  return var;
}

}  // namespace skyrescue::diffusion
