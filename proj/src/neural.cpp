#include "skyrescue/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "skyrescue/error.hpp"

namespace skyrescue::neural {

void Grads::add(const Grads& other, double s) {
  if (weight.empty()) {
    weight = other.weight;
    bias = other.bias;
    for (auto& w : weight) w *= s;
    for (auto& b : bias) b *= s;
    return;
  }
  if (other.weight.size() != weight.size()) throw Error(ErrorKind::shape_mismatch, "gradient layer count differs");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += s * other.weight[i];
    bias[i] += s * other.bias[i];
  }
}

void Grads::scale(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias) b *= s;
}

VectorXd Grads::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
  VectorXd out(n);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    const MatrixXd& w = weight[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) out(at++) = w(r, c);
    out.segment(at, bias[i].size()) = bias[i];
    at += bias[i].size();
  }
  return out;
}

Mlp::Mlp(const std::vector<int>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw Error(ErrorKind::shape_mismatch, "an MLP needs at least input and output sizes");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i];
    const int out = sizes[i + 1];
    if (in < 1 || out < 1) throw Error(ErrorKind::shape_mismatch, "layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = bound * unit(rng);
    for (int r = 0; r < out; ++r) layer.bias(r) = bound * unit(rng);
    layer.act = i + 2 == sizes.size() ? Activation::linear : Activation::relu;
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorKind::shape_mismatch, "an MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].bias.size() != layers_[i].weight.rows())
      throw Error(ErrorKind::shape_mismatch, "bias length differs from layer output");
    if (i > 0 && layers_[i].weight.cols() != layers_[i - 1].weight.rows())
      throw Error(ErrorKind::shape_mismatch, "layer shapes do not chain");
  }
}

int Mlp::input_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols()); }
int Mlp::output_size() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows()); }

VectorXd Mlp::forward(const VectorXd& x) const { return forward_batch(x, nullptr).col(0); }

MatrixXd Mlp::forward_batch(const MatrixXd& x, GradTape* tape) const {
  if (x.rows() != input_size())
    throw Error(ErrorKind::shape_mismatch, "input length " + std::to_string(x.rows()) + " != " +
                                               std::to_string(input_size()));
  if (tape != nullptr) {
    tape->net = this;
    tape->version = version_;
    tape->inputs.clear();
    tape->pre.clear();
  }
  MatrixXd h = x;
  for (const auto& layer : layers_) {
    MatrixXd z = layer.weight * h;
    z.colwise() += layer.bias;
    if (tape != nullptr) {
      tape->inputs.push_back(h);
      tape->pre.push_back(z);
    }
    h = layer.act == Activation::relu ? MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return h;
}

Backward Mlp::backward(const GradTape& tape, const MatrixXd& d_output) const {
  if (tape.net != this || tape.version != version_)
    throw Error(ErrorKind::stale_tape, "tape does not match the current parameters");
  if (d_output.rows() != output_size() || tape.pre.empty() || d_output.cols() != tape.pre.back().cols())
    throw Error(ErrorKind::shape_mismatch, "output gradient shape mismatch");
  Backward out;
  out.grads.weight.resize(layers_.size());
  out.grads.bias.resize(layers_.size());
  MatrixXd g = d_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Layer& layer = layers_[k];
    if (layer.act == Activation::relu) g = g.cwiseProduct((tape.pre[k].array() > 0.0).cast<double>().matrix());
    out.grads.weight[k] = g * tape.inputs[k].transpose();
    out.grads.bias[k] = g.rowwise().sum();
    g = layer.weight.transpose() * g;
  }
  out.d_input = std::move(g);
  return out;
}

Grads Mlp::zero_grads() const {
  Grads g;
  for (const auto& layer : layers_) {
    g.weight.push_back(MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()));
    g.bias.push_back(VectorXd::Zero(layer.bias.size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

VectorXd Mlp::parameters() const {
  Grads g;
  for (const auto& layer : layers_) {
    g.weight.push_back(layer.weight);
    g.bias.push_back(layer.bias);
  }
  return g.flatten();
}

void Mlp::set_parameters(const VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count())
    throw Error(ErrorKind::shape_mismatch, "flat parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat(at++);
    layer.bias = flat.segment(at, layer.bias.size());
    at += layer.bias.size();
  }
  ++version_;
}

Layer& Mlp::mutable_layer(std::size_t i) {
  ++version_;
  return layers_.at(i);
}

void adam_step(Mlp& net, const Grads& grads, AdamState& s, double lr) {
  const auto& layers = net.layers();
  if (grads.weight.size() != layers.size()) throw Error(ErrorKind::shape_mismatch, "gradient layer count differs");
  if (s.m.weight.empty()) {
    s.m = net.zero_grads();
    s.v = net.zero_grads();
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (grads.weight[i].rows() != layers[i].weight.rows() || grads.weight[i].cols() != layers[i].weight.cols())
      throw Error(ErrorKind::shape_mismatch, "gradient shape differs from parameters");
    s.m.weight[i] = s.beta1 * s.m.weight[i] + (1.0 - s.beta1) * grads.weight[i];
    s.v.weight[i] = s.beta2 * s.v.weight[i] + (1.0 - s.beta2) * grads.weight[i].cwiseAbs2();
    s.m.bias[i] = s.beta1 * s.m.bias[i] + (1.0 - s.beta1) * grads.bias[i];
    s.v.bias[i] = s.beta2 * s.v.bias[i] + (1.0 - s.beta2) * grads.bias[i].cwiseAbs2();
    if (lr == 0.0) continue;
    Layer& layer = net.mutable_layer(i);
    layer.weight.array() -=
        lr * (s.m.weight[i].array() / c1) / ((s.v.weight[i].array() / c2).sqrt() + s.eps);
    layer.bias.array() -= lr * (s.m.bias[i].array() / c1) / ((s.v.bias[i].array() / c2).sqrt() + s.eps);
  }
}

void soft_update(Mlp& target, const Mlp& online, double psi) {
  if (target.layers_.size() != online.layers_.size())
    throw Error(ErrorKind::shape_mismatch, "target and online networks differ in depth");
  for (std::size_t i = 0; i < target.layers_.size(); ++i) {
    Layer& t = target.layers_[i];
    const Layer& o = online.layers_[i];
    if (t.weight.rows() != o.weight.rows() || t.weight.cols() != o.weight.cols())
      throw Error(ErrorKind::shape_mismatch, "target and online layer shapes differ");
    t.weight = psi * o.weight + (1.0 - psi) * t.weight;
    t.bias = psi * o.bias + (1.0 - psi) * t.bias;
  }
  ++target.version_;
}

GradCheck gradient_check(const std::function<double(const VectorXd&)>& loss, const VectorXd& params,
                         const VectorXd& analytic, int probes, Rng& rng, double step) {
  if (analytic.size() != params.size()) throw Error(ErrorKind::shape_mismatch, "analytic gradient length differs");
  GradCheck out;
  std::uniform_int_distribution<Eigen::Index> pick(0, params.size() - 1);
  auto central = [&](Eigen::Index i, double h) {
    VectorXd p = params;
    p(i) += h;
    const double up = loss(p);
    p(i) = params(i) - h;
    const double down = loss(p);
    return (up - down) / (2.0 * h);
  };
  for (int k = 0; k < probes; ++k) {
    double numeric = 0.0;
    Eigen::Index i = 0;
    for (int attempt = 0;; ++attempt) {
      i = pick(rng);
      numeric = central(i, step);
      const double finer = central(i, 0.5 * step);
      if (std::abs(numeric - finer) <= 1e-6 * std::max(1.0, std::abs(numeric)) || attempt >= 50) break;
      ++out.redraws;
    }
    const double a = analytic(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
    ++out.probes;
  }
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, double x) {
  const float f = static_cast<float>(x);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorKind::parse_error, "truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_checkpoint(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io_error, "cannot write " + path);
  os.write("SKYN", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    put_u32(os, static_cast<std::uint32_t>(layer.weight.cols()));
    put_u32(os, static_cast<std::uint32_t>(layer.weight.rows()));
    put_u32(os, layer.act == Activation::relu ? 1u : 0u);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f32(os, layer.weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f32(os, layer.bias(r));
  }
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io_error, "cannot open " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "SKYN", 4) != 0)
    throw Error(ErrorKind::parse_error, path + ": bad checkpoint magic");
  if (get_u32(is) != 1) throw Error(ErrorKind::parse_error, path + ": unsupported checkpoint version");
  const std::uint32_t count = get_u32(is);
  std::vector<Layer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t in = get_u32(is);
    const std::uint32_t out = get_u32(is);
    const std::uint32_t act = get_u32(is);
    if (in == 0 || out == 0 || act > 1 || in > (1u << 20) || out > (1u << 20))
      throw Error(ErrorKind::parse_error, path + ": bad layer header");
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    layer.act = act == 1 ? Activation::relu : Activation::linear;
    for (std::uint32_t r = 0; r < out; ++r)
      for (std::uint32_t c = 0; c < in; ++c) layer.weight(r, c) = get_f32(is);
    for (std::uint32_t r = 0; r < out; ++r) layer.bias(r) = get_f32(is);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::string checkpoint_manifest(const Mlp& net, const std::string& name) {
  std::ostringstream ss;
  ss << "name " << name << "\nformat SKYN 1 float32-le\nlayers " << net.layers().size() << "\n";
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const auto& l = net.layers()[i];
    ss << "layer " << i << " in " << l.weight.cols() << " out " << l.weight.rows() << " act "
       << (l.act == Activation::relu ? "relu" : "linear") << "\n";
  }
  ss << "parameters " << net.parameter_count() << "\n";
  return ss.str();
}

}  // namespace skyrescue::neural
