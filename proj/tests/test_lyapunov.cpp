#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "skyrescue/lyapunov.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::lyapunov;
using skyrescue::testing::throws_kind;

namespace {

std::vector<Candidate<int>> random_candidates(Rng& rng, int n) {
  std::uniform_real_distribution<double> t(0, 10), e(0, 30);
  std::vector<Candidate<int>> c;
  for (int i = 0; i < n; ++i) c.push_back({i, t(rng), e(rng)});
  return c;
}

}  // namespace

TEST(Lyapunov, QueueUpdate) {
  auto q = make_queue(3.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(queue_update(q, 5.0).q_value, 4.0);
  EXPECT_DOUBLE_EQ(queue_update(q, 5.0).y_history.back(), 2.0);
  EXPECT_DOUBLE_EQ(queue_update(make_queue(3.0, 1.0, 0.0), 1.0).q_value, 0.0);
  for (int i = 0; i < 10; ++i) queue_update_in_place(q, 3.0);
  EXPECT_DOUBLE_EQ(q.q_value, 2.0);
  EXPECT_EQ(q.q_history.size(), 10u);
  EXPECT_TRUE(throws_kind([&] { queue_update(q, -1.0); }, ErrorKind::invariant_violation));
}

TEST(Lyapunov, PerSlotCost) {
  EXPECT_EQ(per_slot_cost(make_queue(3.0, 0.0, 0.0), 7.0, 9.0), 0.0);
  EXPECT_DOUBLE_EQ(per_slot_cost(make_queue(3.0, 1.0, 2.0), 0.5, 5.0), 4.5);
  double prev = -1e300;
  for (double V : {0.0, 0.5, 1.0, 2.0, 10.0}) {
    const double c = per_slot_cost(make_queue(3.0, V, 2.0), 0.5, 5.0);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(Lyapunov, ArgminBasics) {
  const auto q = make_queue(3.0, 1.0, 0.0);
  const std::vector<Candidate<int>> one{{42, 1.0, 1.0}};
  EXPECT_EQ(per_slot_argmin(one, q), 42);
  const std::vector<Candidate<int>> two{{0, 2.0, 0.1}, {1, 1.0, 99.0}};
  EXPECT_EQ(per_slot_argmin(two, q), 1);
  const std::vector<Candidate<int>> tie{{0, 1.0, 5.0}, {1, 1.0, 4.0}, {2, 1.0, 4.0}};
  EXPECT_EQ(per_slot_argmin(tie, q), 1);
  const std::vector<Candidate<int>> none;
  EXPECT_TRUE(throws_kind([&] { per_slot_argmin(none, q); }, ErrorKind::empty_candidates));
}

TEST(Lyapunov, ArgminMatchesExhaustiveOnThirtyThree) {
  Rng rng(12);
  std::uniform_real_distribution<double> qv(0, 20), v(0, 5);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_candidates(rng, 33);
    const auto q = make_queue(15.0, v(rng), qv(rng));
    std::size_t best = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double a = q.penalty_weight * c[i].t_total_s + q.q_value * (c[i].e_total_j - q.budget_j);
      const double b = q.penalty_weight * c[best].t_total_s + q.q_value * (c[best].e_total_j - q.budget_j);
      if (a < b || (a == b && c[i].e_total_j < c[best].e_total_j)) best = i;
    }
    EXPECT_EQ(per_slot_argmin_index(c, q), best);
  }
}

TEST(Lyapunov, ConstantShiftInvariance) {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_candidates(rng, 20);
    const auto q = make_queue(15.0, 1.0, 0.0);
    const auto before = per_slot_argmin_index(c, q);
    // With Q = 0 the cost is V t, so a shift in t is a constant shift in cost.
    for (auto& x : c) x.t_total_s += 3.0;
    EXPECT_EQ(per_slot_argmin_index(c, q), before);
  }
}

TEST(Lyapunov, RaisingVNeverRaisesLatency) {
  Rng rng(14);
  std::uniform_real_distribution<double> qv(0, 20);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_candidates(rng, 25);
    const double Q = qv(rng);
    double prev_t = 1e300;
    for (double V : {0.0, 0.1, 0.5, 1.0, 5.0, 50.0}) {
      const auto i = per_slot_argmin_index(c, make_queue(15.0, V, Q));
      EXPECT_LE(c[i].t_total_s, prev_t + 1e-12);
      prev_t = c[i].t_total_s;
    }
  }
}

TEST(Lyapunov, DriftBound) {
  Rng rng(15);
  std::uniform_real_distribution<double> e(0, 40);
  auto q = make_queue(15.0, 1.0, 0.0);
  for (int i = 0; i < 10000; ++i) {
    const double before = q.q_value;
    queue_update_in_place(q, e(rng));
    const double y = q.y_history.back();
    const double lhs = 0.5 * q.q_value * q.q_value - 0.5 * before * before;
    const double rhs = 0.5 * y * y + before * y;
    EXPECT_LE(lhs, rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
    EXPECT_GE(q.q_value, 0.0);
  }
}

TEST(Lyapunov, StabilityReport) {
  auto q = make_queue(3.0, 1.0, 0.0);
  EXPECT_TRUE(throws_kind([&] { stability_report(q); }, ErrorKind::invalid_range));
  for (int i = 0; i < 100; ++i) queue_update_in_place(q, 3.0);
  EXPECT_EQ(stability_report(q).mean_excess, 0.0);
  EXPECT_EQ(stability_report(q).theta, 0.0);
  auto over = make_queue(3.0, 1.0, 0.0);
  for (int i = 0; i < 1000; ++i) queue_update_in_place(over, 4.0);
  EXPECT_NEAR(stability_report(over).q_over_t, 1.0, 1e-12);
  const std::vector<double> flat(50, 5.0), zero(50, 0.0);
  const std::vector<double> flat2(500, 5.0), zero2(500, 0.0);
  EXPECT_GT(stability_report(flat, zero).q_over_t, stability_report(flat2, zero2).q_over_t);
}
