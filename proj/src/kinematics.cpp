#include "skyrescue/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skyrescue/error.hpp"

namespace skyrescue::kinematics {

double slot_distance(Vec2 a, Vec2 b) { return distance(a, b); }

double wrap_heading(double rad) {
  double h = std::fmod(rad, 2.0 * kPi);
  if (h < 0.0) h += 2.0 * kPi;
  if (h >= 2.0 * kPi) h = 0.0;
  return h;
}

double heading_of(Vec2 d) { return wrap_heading(std::atan2(d.x, d.y)); }

Vec2 unit_from_heading(double heading_rad) { return {std::sin(heading_rad), std::cos(heading_rad)}; }

UavKinState advance(const UavKinState& state, double heading_rad, double speed_mps, double slot_s, double v_max_mps) {
  if (!(speed_mps >= 0.0) || speed_mps > v_max_mps * (1.0 + 1e-12))
    throw Error(ErrorKind::speed_out_of_range,
                "speed " + std::to_string(speed_mps) + " outside [0, " + std::to_string(v_max_mps) + "]");
  UavKinState next = state;
  next.heading_rad = wrap_heading(heading_rad);
  next.speed_mps = speed_mps;
  next.position = state.position + (speed_mps * slot_s) * unit_from_heading(next.heading_rad);
  return next;
}

std::vector<double> Trajectory::step_distances() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < positions.size(); ++i) out.push_back(slot_distance(positions[i - 1], positions[i]));
  return out;
}

double Trajectory::length() const {
  double s = 0.0;
  for (double d : step_distances()) s += d;
  return s;
}

std::vector<Violation> check_mobility(const std::vector<Trajectory>& trajs, const Scenario& scn) {
  std::vector<Violation> out;
  const double delta = scn.time.slot_s;
  const double horizon_s = scn.time.slots_per_episode() * delta;
  for (const auto& tr : trajs) {
    const auto& spec = scn.uavs.at(static_cast<std::size_t>(tr.uav_id));
    const double lo = delta * spec.dist_min_m / horizon_s;
    const double hi = delta * spec.speed_max_mps;
    const auto steps = tr.step_distances();
    double total = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const int slot = static_cast<int>(i) + 1;
      // Relative slack absorbs the rounding of position updates.
      if (steps[i] < lo * (1.0 - 1e-9) || steps[i] > hi * (1.0 + 1e-9))
        out.push_back({"step_length", {tr.uav_id}, "step " + std::to_string(steps[i]) + " m", slot});
      total += steps[i];
    }
    if (total > spec.length_max_m)
      out.push_back({"path_length", {tr.uav_id}, "total length " + std::to_string(total) + " m", -1});
  }
  for (std::size_t a = 0; a < trajs.size(); ++a) {
    for (std::size_t b = a + 1; b < trajs.size(); ++b) {
      const std::size_t n = std::min(trajs[a].positions.size(), trajs[b].positions.size());
      for (std::size_t i = 0; i < n; ++i)
        if (distance(trajs[a].positions[i], trajs[b].positions[i]) < scn.safety_distance_m)
          out.push_back({"separation", {trajs[a].uav_id, trajs[b].uav_id}, "separation below safety distance",
                         static_cast<int>(i)});
    }
  }
  return out;
}

bool segment_hits_circle(Vec2 a, Vec2 b, Vec2 center, double radius) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(center - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(a + t * ab, center) < radius;
}

bool ray_hits_circle(Vec2 origin, double heading_rad, Vec2 center, double radius) {
  const Vec2 u = unit_from_heading(heading_rad);
  const double t = std::max(0.0, dot(center - origin, u));
  return distance(origin + t * u, center) < radius;
}

std::vector<std::vector<double>> detection_distances(Vec2 from, Vec2 to, const std::vector<RiskSource>& risks,
                                                     int segments, double sensing_range_m) {
  std::vector<std::vector<double>> out;
  for (const auto& r : risks) {
    if (distance(from, r.center) > sensing_range_m) continue;
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(segments));
    for (int k = 0; k < segments; ++k) {
      const double t = (k + 0.5) / segments;
      d.push_back(distance(from + t * (to - from), r.center));
    }
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

bool step_is_clear(Vec2 from, Vec2 to, const std::vector<RiskSource>& risks, double margin) {
  for (const auto& r : risks) {
    const double R = r.radius_m + margin;
    // A UAV already inside a cylinder may only move outward.
    if (distance(from, r.center) < R) {
      if (distance(to, r.center) < distance(from, r.center)) return false;
      continue;
    }
    if (segment_hits_circle(from, to, r.center, R)) return false;
  }
  return true;
}

double angle_gap(double a, double b) {
  const double d = std::fabs(wrap_heading(a) - wrap_heading(b));
  return std::min(d, 2.0 * kPi - d);
}

}  // namespace

RouteStep route_toward(const UavKinState& state, Vec2 target, const std::vector<RiskSource>& risks,
                       const RouteParams& params) {
  const Vec2 p = state.position;
  const double reach = params.speed_max_mps * params.slot_s;

  // A target inside an inflated cylinder is pulled out to its rim.
  for (const auto& r : risks) {
    const double R = r.radius_m + params.margin_m;
    const double rho = distance(target, r.center);
    if (rho < R) {
      const Vec2 out = rho > 0.0 ? (1.0 / rho) * (target - r.center) : Vec2{0.0, 1.0};
      target = r.center + (R + 1.0) * out;
    }
  }

  RouteStep step;
  const double dist = distance(p, target);
  if (dist <= 1e-9) {
    step.heading_rad = wrap_heading(state.heading_rad);
    step.speed_mps = 0.0;
    step.detect_distances =
        detection_distances(p, p, risks, params.detect_segments, params.sensing_range_m);
    return step;
  }
  const double desired = heading_of(target - p);
  const double len = std::min(reach, dist);
  auto end_of = [&](double heading, double l) { return p + l * unit_from_heading(heading); };

  double heading = desired;
  double travel = len;
  bool found = false;

  // Nearest cylinder blocking the straight path to the target.
  const RiskSource* blocker = nullptr;
  double blocker_dist = std::numeric_limits<double>::infinity();
  const RiskSource* inside = nullptr;
  for (const auto& r : risks) {
    const double R = r.radius_m + params.margin_m;
    const double rho = distance(p, r.center);
    if (rho < R) {
      inside = &r;
      continue;
    }
    if (segment_hits_circle(p, target, r.center, R) && rho < blocker_dist) {
      blocker = &r;
      blocker_dist = rho;
    }
  }

  if (inside != nullptr) {
    const Vec2 away = p - inside->center;
    heading = norm(away) > 0.0 ? heading_of(away) : desired;
    travel = reach;
    found = step_is_clear(p, end_of(heading, travel), risks, params.margin_m);
    step.deflected = true;
  } else if (blocker == nullptr) {
    found = step_is_clear(p, end_of(heading, travel), risks, params.margin_m);
  } else {
    const double R = blocker->radius_m + params.margin_m;
    const double to_center = heading_of(blocker->center - p);
    const double half = std::asin(std::min(1.0, R / blocker_dist)) + 1e-6;
    double options[2] = {wrap_heading(to_center + half), wrap_heading(to_center - half)};
    if (angle_gap(options[1], desired) < angle_gap(options[0], desired)) std::swap(options[0], options[1]);
    for (double h : options) {
      if (step_is_clear(p, end_of(h, travel), risks, params.margin_m)) {
        heading = h;
        found = true;
        break;
      }
    }
    step.deflected = true;
  }

  // Fallback sweep in 1-degree increments, nearest to the desired heading
  // first, then at shrinking step lengths.
  for (double scale : {1.0, 0.5, 0.25, 0.1}) {
    if (found) break;
    for (int k = 1; k <= 180 && !found; ++k) {
      for (int sign : {1, -1}) {
        const double h = wrap_heading(desired + sign * k * kPi / 180.0);
        if (step_is_clear(p, end_of(h, len * scale), risks, params.margin_m)) {
          heading = h;
          travel = len * scale;
          found = true;
          step.deflected = true;
          break;
        }
      }
    }
  }
  if (!found) throw Error(ErrorKind::trapped, "no collision-free heading available");

  step.heading_rad = heading;
  step.speed_mps = std::min(params.speed_max_mps, travel / params.slot_s);
  const Vec2 end = end_of(heading, step.speed_mps * params.slot_s);
  step.detect_distances = detection_distances(p, end, risks, params.detect_segments, params.sensing_range_m);
  return step;
}

}  // namespace skyrescue::kinematics
