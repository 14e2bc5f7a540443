#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "skyrescue/neural.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::neural;
using skyrescue::testing::throws_kind;

namespace {

MatrixXd random_matrix(int r, int c, Rng& rng) {
  std::normal_distribution<double> n(0, 1);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

// 0.5 * sum(W * y) for a fixed weighting W; dL/dy = 0.5 W.
double weighted_sum(const Mlp& net, const MatrixXd& x, const MatrixXd& w) {
  return 0.5 * net.forward_batch(x).cwiseProduct(w).sum();
}

void check_architecture(const std::vector<int>& sizes, std::uint64_t seed) {
  Rng rng(seed);
  Mlp net(sizes, rng);
  for (int draw = 0; draw < 100; ++draw) {
    const MatrixXd x = random_matrix(sizes.front(), 3, rng);
    const MatrixXd w = random_matrix(sizes.back(), 3, rng);
    GradTape tape;
    net.forward_batch(x, &tape);
    const Grads g = net.backward(tape, 0.5 * w).grads;
    Mlp probe = net;
    auto loss = [&](const VectorXd& p) {
      probe.set_parameters(p);
      return weighted_sum(probe, x, w);
    };
    const GradCheck gc = gradient_check(loss, net.parameters(), g.flatten(), 4, rng);
    ASSERT_LT(gc.max_rel_error, 1e-4) << "draw " << draw;
    Mlp next(sizes, rng);
    net = next;
  }
}

}  // namespace

TEST(Neural, ForwardExamples) {
  Rng rng(1);
  Mlp zero({3, 4, 2}, rng);
  zero.set_parameters(VectorXd::Zero(static_cast<Eigen::Index>(zero.parameter_count())));
  EXPECT_TRUE(zero.forward(VectorXd::Ones(3)).isZero());

  Layer l{MatrixXd::Constant(1, 1, 2.0), VectorXd::Constant(1, 1.0), Activation::relu};
  Mlp one({l});
  EXPECT_DOUBLE_EQ(one.forward(VectorXd::Constant(1, 3.0))(0), 7.0);
  EXPECT_DOUBLE_EQ(one.forward(VectorXd::Constant(1, -3.0))(0), 0.0);

  Mlp net({5, 8, 3}, rng);
  const VectorXd x = VectorXd::LinSpaced(5, -1, 1);
  EXPECT_EQ(net.forward(x), net.forward(x));
  EXPECT_TRUE(throws_kind([&] { net.forward(VectorXd::Zero(4)); }, ErrorKind::shape_mismatch));
}

TEST(Neural, InitRange) {
  Rng rng(2);
  Mlp net({16, 32, 4}, rng);
  for (const Layer& l : net.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), bound);
  }
  EXPECT_EQ(net.layers().front().act, Activation::relu);
  EXPECT_EQ(net.layers().back().act, Activation::linear);
  Rng a(3), b(3);
  EXPECT_EQ(Mlp({4, 4, 1}, a).parameters(), Mlp({4, 4, 1}, b).parameters());
}

TEST(Neural, LinearSquaredLossGradient) {
  Layer l{MatrixXd(1, 2), VectorXd::Constant(1, 0.5), Activation::linear};
  l.weight << 1.5, -2.0;
  Mlp net({l});
  VectorXd x(2);
  x << 0.3, 0.7;
  const double y = 2.0;
  GradTape tape;
  const double out = net.forward_batch(x, &tape)(0, 0);
  const double err = out - y;
  const Backward b = net.backward(tape, MatrixXd::Constant(1, 1, 2 * err));
  EXPECT_NEAR(b.grads.weight[0](0, 0), 2 * err * 0.3, 1e-15);
  EXPECT_NEAR(b.grads.weight[0](0, 1), 2 * err * 0.7, 1e-15);
  EXPECT_NEAR(b.grads.bias[0](0), 2 * err, 1e-15);
  EXPECT_NEAR(b.d_input(0, 0), 2 * err * 1.5, 1e-15);
}

TEST(Neural, ZeroUpstreamGivesZeroGradients) {
  Rng rng(4);
  Mlp net({3, 6, 2}, rng);
  GradTape tape;
  net.forward_batch(random_matrix(3, 4, rng), &tape);
  EXPECT_TRUE(net.backward(tape, MatrixXd::Zero(2, 4)).grads.flatten().isZero());
}

TEST(Neural, StaleTape) {
  Rng rng(5);
  Mlp net({3, 6, 2}, rng);
  GradTape tape;
  net.forward_batch(random_matrix(3, 4, rng), &tape);
  net.set_parameters(net.parameters() * 0.5);
  EXPECT_TRUE(throws_kind([&] { net.backward(tape, MatrixXd::Ones(2, 4)); }, ErrorKind::stale_tape));
}

TEST(Neural, GradientCheckActorShape) { check_architecture({19, 64, 64, 8}, 11); }
TEST(Neural, GradientCheckCriticShape) { check_architecture({81, 128, 128, 1}, 12); }
TEST(Neural, GradientCheckEpsilonShape) { check_architecture({32, 64, 64, 8}, 13); }

TEST(Neural, AdamBasics) {
  Rng rng(6);
  Mlp net({3, 4, 2}, rng);
  const VectorXd before = net.parameters();
  AdamState st;
  adam_step(net, net.zero_grads(), st, 1e-3);
  EXPECT_EQ(net.parameters(), before);

  Grads g = net.zero_grads();
  for (auto& w : g.weight) w.setConstant(0.37);
  for (auto& b : g.bias) b.setConstant(-5.0);
  AdamState zero_lr;
  Mlp same = net;
  adam_step(same, g, zero_lr, 0.0);
  EXPECT_EQ(same.parameters(), before);

  AdamState first;
  adam_step(net, g, first, 1e-3);
  const VectorXd step = net.parameters() - before;
  const VectorXd gf = g.flatten();
  for (Eigen::Index i = 0; i < step.size(); ++i) EXPECT_NEAR(step(i), -1e-3 * (gf(i) > 0 ? 1 : -1), 1e-8);
}

TEST(Neural, SoftUpdate) {
  Rng rng(7);
  Mlp a({2, 3, 1}, rng), b({2, 3, 1}, rng);
  const VectorXd pa = a.parameters(), pb = b.parameters();
  soft_update(b, a, 0.25);
  EXPECT_LT((b.parameters() - (0.25 * pa + 0.75 * pb)).cwiseAbs().maxCoeff(), 1e-15);
  soft_update(b, a, 1.0);
  EXPECT_EQ(b.parameters(), pa);
  Mlp c({2, 4, 1}, rng);
  EXPECT_TRUE(throws_kind([&] { soft_update(c, a, 0.5); }, ErrorKind::shape_mismatch));
}

TEST(Neural, FitsSine) {
  Rng rng(8);
  Mlp net({1, 32, 1}, rng);
  MatrixXd x(1, 100), y(1, 100);
  for (int i = 0; i < 100; ++i) {
    x(0, i) = -3.0 + 6.0 * i / 99.0;
    y(0, i) = std::sin(x(0, i));
  }
  AdamState st;
  double mse = 0.0;
  for (int it = 0; it < 5000; ++it) {
    GradTape tape;
    const MatrixXd r = net.forward_batch(x, &tape) - y;
    mse = r.squaredNorm() / 100.0;
    adam_step(net, net.backward(tape, 2.0 * r / 100.0).grads, st, 1e-3);
  }
  EXPECT_LT(mse, 1e-2);
}

TEST(Neural, CheckpointRoundTrip) {
  Rng rng(9);
  Mlp net({5, 7, 3}, rng);
  const auto dir = std::filesystem::temp_directory_path() / "skyrescue_neural_ckpt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "net.skyn").string();
  save_checkpoint(net, path);
  const Mlp back = load_checkpoint(path);
  ASSERT_EQ(back.parameter_count(), net.parameter_count());
  const VectorXd d = back.parameters() - net.parameters();
  EXPECT_LT(d.cwiseAbs().maxCoeff(), 1e-6);
  for (std::size_t i = 0; i < net.layers().size(); ++i) EXPECT_EQ(back.layers()[i].act, net.layers()[i].act);
  EXPECT_FALSE(checkpoint_manifest(net, "actor").empty());
  EXPECT_TRUE(throws_kind([&] { load_checkpoint((dir / "missing.skyn").string()); }, ErrorKind::io_error));
  {
    std::ofstream bad(dir / "bad.skyn", std::ios::binary);
    bad << "NOPE";
  }
  EXPECT_TRUE(throws_kind([&] { load_checkpoint((dir / "bad.skyn").string()); }, ErrorKind::parse_error));
}
