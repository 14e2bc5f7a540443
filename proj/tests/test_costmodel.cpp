#include <gtest/gtest.h>

#include "skyrescue/costmodel.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::costmodel;
using skyrescue::testing::throws_kind;

TEST(CostModel, LocalLatency) {
  EXPECT_EQ(local_latency({8e9, 300, 5}, 0.0, 5e12), 0.0);
  EXPECT_NEAR(local_latency({8e9, 300, 5}, 0.5, 5e12), 0.24, 1e-12);
  EXPECT_DOUBLE_EQ(local_latency({1, 1, 1}, 1.0, 1.0), 1.0);
}

TEST(CostModel, OffloadLatency) {
  const Task t{1e9, 300, 5};
  const auto none = offload_latency(t, 1.0, 0.0, 0.0);
  EXPECT_EQ(none.t_tran_s, 0.0);
  EXPECT_EQ(none.t_ger_s, 0.0);
  const auto full = offload_latency(t, 0.0, 1e9, 1e13);
  EXPECT_NEAR(full.t_tran_s, 1.0, 1e-12);
  EXPECT_NEAR(full.t_comp_s, 0.03, 1e-12);
  EXPECT_NEAR(full.t_ger_s, 1.03, 1e-12);
  const auto quarter = offload_latency(t, 0.75, 1e9, 1e13);
  EXPECT_NEAR(quarter.t_tran_s, 0.25, 1e-12);
  EXPECT_NEAR(quarter.t_comp_s, 0.0075, 1e-12);
  EXPECT_TRUE(throws_kind([&] { offload_latency(t, 0.5, 0.0, 1e13); }, ErrorKind::zero_rate_offload));
  EXPECT_TRUE(throws_kind([&] { offload_latency(t, 0.5, 1e9, 0.0); }, ErrorKind::zero_alloc_offload));
}

TEST(CostModel, EnergyTermIsolation) {
  PhysConstants k;
  const Task t{1e9, 300, 5};
  const EnergyTerms e = slot_energy(t, 0.0, 2.0, 5e12, 0.0, {}, k);
  EXPECT_NEAR(e.e_tran_j, k.tx_power_w * 2.0, 1e-15);
  EXPECT_EQ(e.e_comp_j, 0.0);
  EXPECT_EQ(e.e_prop_j, 0.0);
  EXPECT_EQ(e.e_dete_j, 0.0);
  EXPECT_EQ(e.e_total_j, e.e_tran_j);
}

TEST(CostModel, ComputeEnergy) {
  PhysConstants k;
  k.capacitance_coeff = 1e-28;
  // kappa f^2 D C = 1e-28 * 2.5e25 * 8e9 * 300
  const EnergyTerms e = slot_energy({8e9, 300, 5}, 1.0, 0.0, 5e12, 0.0, {}, k);
  EXPECT_NEAR(e.e_comp_j / 6e9, 1.0, 1e-12);
  const EnergyTerms half = slot_energy({8e9, 300, 5}, 0.5, 0.0, 5e12, 0.0, {}, k);
  EXPECT_NEAR(half.e_comp_j / 3e9, 1.0, 1e-12);
  const EnergyTerms literal = slot_energy({8e9, 300, 5}, 0.5, 0.0, 5e12, 0.0, {}, k, true);
  EXPECT_NEAR(literal.e_comp_j / 6e9, 1.0, 1e-12);
}

TEST(CostModel, DetectionAndPropulsionEnergy) {
  PhysConstants k;
  k.detect_unit_energy = 1e-3;
  const EnergyTerms e = slot_energy({1, 1, 1}, 1.0, 0.0, 1.0, 0.0, {{100.0, 200.0}}, k);
  EXPECT_NEAR(e.e_dete_j, 0.3, 1e-12);
  const EnergyTerms p = slot_energy({1, 1, 1}, 1.0, 0.0, 1.0, 20.0, {}, k);
  EXPECT_NEAR(p.e_prop_j, k.propulsion_coeff * 400.0, 1e-12);
}

TEST(CostModel, TotalsAndAdditivity) {
  PhysConstants k;
  Rng rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Task t{1e9 * (1 + 9 * u(rng)), 200 + 300 * u(rng), 5};
    const double lf = u(rng);
    const auto off = offload_latency(t, lf, 1e9 * (0.1 + u(rng)), 1e12 * (0.1 + 9 * u(rng)));
    const auto e = slot_energy(t, lf, off.t_tran_s, 5e12, 30 * u(rng), {{1000 * u(rng), 1000 * u(rng)}}, k);
    const SlotCost c = combine(local_latency(t, lf, 5e12), off, e);
    EXPECT_EQ(c.t_ger_s, c.t_tran_s + c.t_comp_s);
    EXPECT_EQ(c.t_total_s, c.t_local_s + c.t_ger_s);
    EXPECT_EQ(c.e_total_j, c.e_tran_j + c.e_comp_j + c.e_prop_j + c.e_dete_j);
    for (double v : {c.t_local_s, c.t_tran_s, c.t_comp_s, c.e_tran_j, c.e_comp_j, c.e_prop_j, c.e_dete_j})
      EXPECT_GE(v, 0.0);
  }
  SlotCost a, b, c;
  a.t_local_s = 1;
  b.t_ger_s = 2;
  c.t_local_s = 1;
  c.t_ger_s = 2;
  EXPECT_DOUBLE_EQ(total_latency({a, b, c}), 6.0);
}

TEST(CostModel, LatencyMonotoneAndContinuousInFraction) {
  const Task t{4e9, 300, 5};
  double prev_local = -1, prev_ger = 1e300, prev_total = -1;
  for (int i = 0; i <= 1000; ++i) {
    const double lf = i / 1000.0;
    const double tl = local_latency(t, lf, 5e12);
    const auto off = offload_latency(t, lf, 2e9, 3e12);
    EXPECT_GE(tl, prev_local);
    EXPECT_LE(off.t_ger_s, prev_ger);
    const double total = tl + off.t_ger_s;
    if (prev_total >= 0) EXPECT_LT(std::abs(total - prev_total), 0.01);
    prev_local = tl;
    prev_ger = off.t_ger_s;
    prev_total = total;
  }
}

TEST(CostModel, DeadlineFlags) {
  const Task t{1, 1, 1.0};
  SlotCost c;
  c.t_local_s = 1.5;
  EXPECT_EQ(deadline_flags(c, t), std::vector<std::string>{"local_deadline"});
  c.t_local_s = 0.5;
  c.t_ger_s = 2.0;
  EXPECT_EQ(deadline_flags(c, t), std::vector<std::string>{"offload_deadline"});
  c.t_ger_s = 0.5;
  EXPECT_TRUE(deadline_flags(c, t).empty());
}
