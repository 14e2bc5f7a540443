#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "skyrescue/kinematics.hpp"
#include "support.hpp"

using namespace skyrescue;
using namespace skyrescue::kinematics;
using skyrescue::testing::throws_kind;

namespace {

Scenario line_world(int uavs, double dmin = 0.0) {
  scenario::GenConfig c;
  c.uavs = uavs;
  c.rounds = 1;
  c.gers = 4 * uavs;
  Scenario s = scenario::generate_scenario(c, 1);
  for (auto& u : s.uavs) u.dist_min_m = dmin;
  return s;
}

int count(const std::vector<Violation>& v, const std::string& id) {
  int n = 0;
  for (const auto& x : v) n += x.constraint == id ? 1 : 0;
  return n;
}

// Independent restatement of the three mobility constraints.
std::vector<Violation> brute_mobility(const std::vector<Trajectory>& trajs, const Scenario& scn) {
  std::vector<Violation> out;
  for (const auto& t : trajs) {
    const auto& spec = scn.uavs[static_cast<std::size_t>(t.uav_id)];
    const double lo = scn.time.slot_s * spec.dist_min_m / (scn.time.slots_per_episode() * scn.time.slot_s);
    const double hi = scn.time.slot_s * spec.speed_max_mps;
    double total = 0.0;
    for (std::size_t i = 1; i < t.positions.size(); ++i) {
      const double d = std::hypot(t.positions[i].x - t.positions[i - 1].x, t.positions[i].y - t.positions[i - 1].y);
      if (d < lo * (1 - 1e-9) || d > hi * (1 + 1e-9)) out.push_back({"step_length", {t.uav_id}, "", static_cast<int>(i)});
      total += d;
    }
    if (total > spec.length_max_m) out.push_back({"path_length", {t.uav_id}, "", -1});
  }
  for (std::size_t a = 0; a < trajs.size(); ++a)
    for (std::size_t b = a + 1; b < trajs.size(); ++b)
      for (std::size_t i = 0; i < trajs[a].positions.size(); ++i) {
        const Vec2 p = trajs[a].positions[i], q = trajs[b].positions[i];
        if (std::hypot(p.x - q.x, p.y - q.y) < scn.safety_distance_m)
          out.push_back({"separation", {trajs[a].uav_id, trajs[b].uav_id}, "", static_cast<int>(i)});
      }
  return out;
}

// (constraint, entities, slot) triples in sorted order; detail text is free-form.
std::vector<std::tuple<std::string, std::vector<int>, int>> keys(const std::vector<Violation>& v) {
  std::vector<std::tuple<std::string, std::vector<int>, int>> k;
  for (const auto& x : v) k.emplace_back(x.constraint, x.entities, x.slot);
  std::sort(k.begin(), k.end());
  return k;
}

}  // namespace

TEST(Kinematics, SlotDistance) {
  EXPECT_DOUBLE_EQ(slot_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(slot_distance({7, -2}, {7, -2}), 0.0);
  EXPECT_DOUBLE_EQ(slot_distance({1, 2}, {-4, 9}), slot_distance({-4, 9}, {1, 2}));
  // One second at v_max = 30 m/s is exactly the per-slot step ceiling.
  EXPECT_DOUBLE_EQ(slot_distance({0, 0}, {30.0 * 1.0, 0}), 30.0);
}

TEST(Kinematics, AdvanceSteps) {
  const UavKinState s{{100, 200}, 50.0, 0.0, 0.0};
  const auto n = advance(s, 0.0, 10.0, 1.0, 30.0);
  EXPECT_NEAR(n.position.x, 100.0, 1e-12);
  EXPECT_NEAR(n.position.y, 210.0, 1e-12);
  const auto still = advance(s, 1.0, 0.0, 1.0, 30.0);
  EXPECT_EQ(still.position, s.position);
  const auto east = advance(s, kPi / 2, 30.0, 2.0, 30.0);
  EXPECT_NEAR(east.position.x, 160.0, 1e-9);
  EXPECT_NEAR(east.position.y, 200.0, 1e-9);
  EXPECT_DOUBLE_EQ(east.altitude_m, 50.0);
}

TEST(Kinematics, AdvanceRejectsBadSpeed) {
  const UavKinState s{};
  EXPECT_TRUE(throws_kind([&] { advance(s, 0.0, 31.0, 1.0, 30.0); }, ErrorKind::speed_out_of_range));
  EXPECT_TRUE(throws_kind([&] { advance(s, 0.0, -1.0, 1.0, 30.0); }, ErrorKind::speed_out_of_range));
}

TEST(Kinematics, AdvanceNeverExceedsVmaxDelta) {
  Rng rng(3);
  std::uniform_real_distribution<double> h(-10, 10), v(0, 30), d(0.1, 120);
  for (int i = 0; i < 2000; ++i) {
    const UavKinState s{{h(rng) * 100, h(rng) * 100}, 50.0, 0.0, 0.0};
    const double dt = d(rng);
    const auto n = advance(s, h(rng), v(rng), dt, 30.0);
    EXPECT_LE(slot_distance(s.position, n.position), 30.0 * dt * (1 + 1e-12));
    EXPECT_EQ(n.altitude_m, s.altitude_m);
  }
}

TEST(Kinematics, StationarySingleUavIsClean) {
  const Scenario s = line_world(1);
  Trajectory t{0, std::vector<Vec2>(6, s.uavs[0].start)};
  EXPECT_TRUE(check_mobility({t}, s).empty());
}

TEST(Kinematics, ParallelTracksTooCloseFlagEverySlot) {
  const Scenario s = line_world(2);
  Trajectory a{0, {}}, b{1, {}};
  for (int i = 0; i <= 5; ++i) {
    a.positions.push_back({1000.0 + 100.0 * i, 1000.0});
    b.positions.push_back({1000.0 + 100.0 * i, 1000.0 + s.safety_distance_m / 2});
  }
  const auto v = check_mobility({a, b}, s);
  EXPECT_EQ(count(v, "separation"), 6);
}

TEST(Kinematics, OverspeedStepFlagsStepLength) {
  Scenario s = line_world(1);
  s.time.slot_s = 1.0;
  Trajectory t{0, {{0, 0}, {31, 0}}};
  const auto v = check_mobility({t}, s);
  ASSERT_EQ(count(v, "step_length"), 1);
  EXPECT_EQ(v[0].slot, 1);
}

TEST(Kinematics, OverlongFlagsPathLength) {
  Scenario s = line_world(1);
  s.uavs[0].length_max_m = 1000.0;
  Trajectory t{0, {{0, 0}, {600, 0}, {1200, 0}}};
  EXPECT_EQ(count(check_mobility({t}, s), "path_length"), 1);
}

TEST(Kinematics, CheckMobilityMatchesBruteForce) {
  Rng rng(17);
  std::uniform_real_distribution<double> pos(0, 3000), step(-2200, 2200);
  for (int trial = 0; trial < 300; ++trial) {
    Scenario s = line_world(3, trial % 2 ? 600.0 : 0.0);
    if (trial % 3 == 0) s.uavs[1].length_max_m = 4000.0;
    std::vector<Trajectory> trajs;
    for (int u = 0; u < 3; ++u) {
      Trajectory t{u, {{pos(rng), pos(rng)}}};
      for (int i = 0; i < 5; ++i) t.positions.push_back(t.positions.back() + Vec2{step(rng), step(rng)});
      trajs.push_back(t);
    }
    EXPECT_EQ(keys(check_mobility(trajs, s)), keys(brute_mobility(trajs, s)));
  }
}

TEST(Kinematics, UnobstructedGreedyStep) {
  RouteParams p;
  p.slot_s = 1.0;
  const UavKinState s{{500, 500}, 50, 0, 0};
  const RouteStep r = route_toward(s, {500, 560}, {}, p);
  EXPECT_NEAR(r.heading_rad, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.speed_mps, 30.0);
  EXPECT_FALSE(r.deflected);
}

TEST(Kinematics, CentredRiskDeflectsClearOfInflatedCylinder) {
  RouteParams p;
  p.slot_s = 60.0;
  const UavKinState s{{0, 0}, 50, 0, 0};
  const std::vector<RiskSource> risks{{{0, 1000}, 300}};
  const RouteStep r = route_toward(s, {0, 3000}, risks, p);
  EXPECT_TRUE(r.deflected);
  EXPECT_FALSE(ray_hits_circle(s.position, r.heading_rad, risks[0].center, risks[0].radius_m + p.margin_m));
}

TEST(Kinematics, MidpointDetectionDistances) {
  // Path (0,0) -> (400,0), risk at (200, 300): midpoints at x = 50, 150, 250, 350.
  const std::vector<RiskSource> risks{{{200, 300}, 100}};
  const auto d = detection_distances({0, 0}, {400, 0}, risks, 4, 2000.0);
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d[0].size(), 4u);
  const double expect[] = {std::hypot(150, 300), std::hypot(50, 300), std::hypot(50, 300), std::hypot(150, 300)};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(d[0][static_cast<std::size_t>(k)], expect[k], 1e-9);
  EXPECT_TRUE(detection_distances({0, 0}, {400, 0}, risks, 4, 100.0).empty());
}

TEST(Kinematics, RoutingConvergesWithoutObstacles) {
  RouteParams p;
  p.slot_s = 10.0;
  Rng rng(5);
  std::uniform_real_distribution<double> pos(0, 5000);
  for (int trial = 0; trial < 50; ++trial) {
    UavKinState s{{pos(rng), pos(rng)}, 50, 0, 0};
    const Vec2 target{pos(rng), pos(rng)};
    double prev = slot_distance(s.position, target);
    int steps = 0;
    while (prev > p.speed_max_mps * p.slot_s && steps < 1000) {
      const RouteStep r = route_toward(s, target, {}, p);
      s = advance(s, r.heading_rad, r.speed_mps, p.slot_s, p.speed_max_mps);
      const double d = slot_distance(s.position, target);
      ASSERT_LT(d, prev);
      prev = d;
      ++steps;
    }
    EXPECT_LE(prev, p.speed_max_mps * p.slot_s);
  }
}

TEST(Kinematics, TrappedWhenEnclosed) {
  RouteParams p;
  std::vector<RiskSource> ring;
  for (int k = 0; k < 16; ++k) {
    const double a = 2 * kPi * k / 16;
    ring.push_back({{5000 + 250 * std::sin(a), 5000 + 250 * std::cos(a)}, 150});
  }
  const UavKinState s{{5000, 5000}, 50, 0, 0};
  EXPECT_TRUE(throws_kind([&] { route_toward(s, {9000, 9000}, ring, p); }, ErrorKind::trapped));
}
