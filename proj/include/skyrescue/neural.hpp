#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyrescue/rng.hpp"

namespace skyrescue::neural {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { linear, relu };

struct Layer {
  MatrixXd weight;  // out x in
  VectorXd bias;
  Activation act = Activation::linear;
};

// Per-layer gradients mirroring the parameter shapes.
struct Grads {
  std::vector<MatrixXd> weight;
  std::vector<VectorXd> bias;

  void add(const Grads& other, double scale = 1.0);
  void scale(double s);
  VectorXd flatten() const;
};

class Mlp;

// Forward intermediates of one batched pass, bound to the parameter version
// that produced them.
struct GradTape {
  const Mlp* net = nullptr;
  std::uint64_t version = 0;
  std::vector<MatrixXd> inputs;  // input to each layer, columns = samples
  std::vector<MatrixXd> pre;     // pre-activation of each layer
};

struct Backward {
  Grads grads;
  MatrixXd d_input;
};

// Dense network; hidden layers use ReLU and the output layer is linear.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {in, hidden..., out}; weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(const std::vector<int>& sizes, Rng& rng);
  Mlp(std::vector<Layer> layers);

  int input_size() const;
  int output_size() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::uint64_t version() const { return version_; }

  // Throws shape-mismatch on a wrong input length.
  VectorXd forward(const VectorXd& x) const;
  MatrixXd forward_batch(const MatrixXd& x, GradTape* tape = nullptr) const;

  // Throws stale-tape when parameters changed after the tape was recorded.
  Backward backward(const GradTape& tape, const MatrixXd& d_output) const;

  Grads zero_grads() const;
  std::size_t parameter_count() const;
  VectorXd parameters() const;
  void set_parameters(const VectorXd& flat);
  Layer& mutable_layer(std::size_t i);

 private:
  friend void soft_update(Mlp&, const Mlp&, double);
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  Grads m;
  Grads v;
};

void adam_step(Mlp& net, const Grads& grads, AdamState& state, double lr);

// theta' <- psi theta + (1 - psi) theta'; throws shape-mismatch.
void soft_update(Mlp& target, const Mlp& online, double psi);

// Central finite-difference probes of single coordinates. A probe whose
// estimate disagrees with a finer step (a ReLU kink inside the interval) is
// redrawn.
struct GradCheck {
  double max_rel_error = 0.0;
  int probes = 0;
  int redraws = 0;
};

GradCheck gradient_check(const std::function<double(const VectorXd&)>& loss, const VectorXd& params,
                         const VectorXd& analytic, int probes, Rng& rng, double step = 1e-5);

// Binary checkpoint: "SKYN", u32 version, u32 layer count, then per layer
// u32 in, u32 out, u32 activation and little-endian float32 weights
// (row-major) followed by biases.
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);
std::string checkpoint_manifest(const Mlp& net, const std::string& name);

}  // namespace skyrescue::neural
