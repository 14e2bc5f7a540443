#pragma once

#include <vector>

#include "skyrescue/geometry.hpp"
#include "skyrescue/scenario.hpp"

namespace skyrescue::kinematics {

using scenario::RiskSource;
using scenario::Scenario;
using scenario::Violation;

// Heading is measured clockwise from north, so a unit step is (sin, cos).
struct UavKinState {
  Vec2 position;
  double altitude_m = 50.0;
  double heading_rad = 0.0;
  double speed_mps = 0.0;
};

// positions[0] is the start; positions[i] is where the UAV sits after slot i.
struct Trajectory {
  int uav_id = 0;
  std::vector<Vec2> positions;

  std::vector<double> step_distances() const;
  double length() const;
};

double slot_distance(Vec2 a, Vec2 b);
double wrap_heading(double rad);
double heading_of(Vec2 direction);
Vec2 unit_from_heading(double heading_rad);

// Throws speed-out-of-range when speed is negative or above v_max.
UavKinState advance(const UavKinState& state, double heading_rad, double speed_mps, double slot_s,
                    double v_max_mps);

std::vector<Violation> check_mobility(const std::vector<Trajectory>& trajs, const Scenario& scn);

struct RouteParams {
  double speed_max_mps = 30.0;
  double slot_s = 60.0;
  double margin_m = 50.0;
  double sensing_range_m = 2000.0;
  int detect_segments = 4;
};

struct RouteStep {
  double heading_rad = 0.0;
  double speed_mps = 0.0;
  // One entry per risk source within sensing range, each holding the
  // distances from the m segment midpoints of this slot's path to its center.
  std::vector<std::vector<double>> detect_distances;
  bool deflected = false;
};

// True if the segment a-b passes within `radius` of `center`.
bool segment_hits_circle(Vec2 a, Vec2 b, Vec2 center, double radius);
bool ray_hits_circle(Vec2 origin, double heading_rad, Vec2 center, double radius);

std::vector<std::vector<double>> detection_distances(Vec2 from, Vec2 to, const std::vector<RiskSource>& risks,
                                                     int segments, double sensing_range_m);

// Greedy step toward `target`, deflecting tangentially around inflated risk
// cylinders. Throws `trapped` when every heading is blocked.
RouteStep route_toward(const UavKinState& state, Vec2 target, const std::vector<RiskSource>& risks,
                       const RouteParams& params);

}  // namespace skyrescue::kinematics
