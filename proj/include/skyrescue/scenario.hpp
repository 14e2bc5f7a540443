#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skyrescue/geometry.hpp"

namespace skyrescue::scenario {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
inline constexpr double kBitsPerGigabyte = 8e9;
inline constexpr double kFlopsPerTflop = 1e12;
inline constexpr double kJoulesPerWh = 3600.0;

// Radio, compute and energy constants. Values not fixed by the rescue
// experiment table are defaults chosen for desk-scale runs.
struct PhysConstants {
  double carrier_freq_hz = 2e9;
  double light_speed_mps = 299792458.0;
  double ref_distance_m = 1.0;
  double pathloss_exp_los = 2.0;
  double pathloss_exp_nlos = 2.6;
  double shadow_std_los_db = 2.0;
  double shadow_std_nlos_db = 6.0;
  double nakagami_shape_los = 3.0;
  double nakagami_shape_nlos = 1.0;
  double mean_rx_power = 1.0;
  double bandwidth_hz = 5e9;
  double tx_power_w = 0.1;
  double noise_power_w = dbm_to_watt(-115.0);
  // kappa * f_u^2 is the energy per cycle; 1e-37 gives ~2.5 pJ at 5 TFLOPs.
  double capacitance_coeff = 1e-37;
  double propulsion_coeff = 0.01;
  double detect_unit_energy = 1e-4;
  int detect_segments = 4;
  // Elevation-angle LoS sigmoid; los_a = 0 forces pure LoS.
  double los_a = 9.61;
  double los_b = 0.16;
  double cycles_per_flop = 1.0;
  double sensing_range_m = 2000.0;
  double risk_margin_m = 50.0;

  friend bool operator==(const PhysConstants&, const PhysConstants&) = default;
};

struct UavSpec {
  int id = 0;
  Vec2 start;
  Vec2 end;
  double altitude_m = 50.0;
  double compute_flops = 5e12;
  double energy_max_j = 200.0 * kJoulesPerWh;
  double speed_max_mps = 30.0;
  double dist_min_m = 0.0;
  double length_max_m = 100000.0;

  friend bool operator==(const UavSpec&, const UavSpec&) = default;
};

struct GerSpec {
  int id = 0;
  Vec2 position;
  double compute_flops = 0.0;

  friend bool operator==(const GerSpec&, const GerSpec&) = default;
};

struct Airship {
  Vec2 position;
  double altitude_m = 600.0;
  double compute_flops = 20e12;

  friend bool operator==(const Airship&, const Airship&) = default;
};

struct Subarea {
  int id = 0;
  double x_min_m = 0.0;
  double y_min_m = 0.0;
  double x_max_m = 0.0;
  double y_max_m = 0.0;
  double data_bits = 0.0;
  double intensity_cycles_per_bit = 0.0;
  double mean_ger_flops = 0.0;

  Vec2 center() const { return {0.5 * (x_min_m + x_max_m), 0.5 * (y_min_m + y_max_m)}; }
  double area() const { return (x_max_m - x_min_m) * (y_max_m - y_min_m); }
  friend bool operator==(const Subarea&, const Subarea&) = default;
};

struct RiskSource {
  Vec2 center;
  double radius_m = 0.0;

  friend bool operator==(const RiskSource&, const RiskSource&) = default;
};

struct TimeConfig {
  int slots_per_round = 5;
  double slot_s = 60.0;
  int rounds = 5;

  int slots_per_episode() const { return slots_per_round * rounds; }
  friend bool operator==(const TimeConfig&, const TimeConfig&) = default;
};

struct Region {
  double width_m = 50000.0;
  double height_m = 50000.0;

  friend bool operator==(const Region&, const Region&) = default;
};

struct Scenario {
  Region region;
  std::vector<UavSpec> uavs;
  std::vector<GerSpec> gers;
  Airship airship;
  std::vector<Subarea> subareas;
  std::vector<RiskSource> risk_sources;
  TimeConfig time;
  PhysConstants consts;
  double energy_budget_j = 15.0;
  double safety_distance_m = 100.0;
  double task_deadline_s = 5.0;
  std::uint64_t seed = 0;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Generator inputs in the units the experiment table uses (GB, TFLOPs, dBm,
// mW, Wh); generate_scenario converts everything to SI.
struct GenConfig {
  int uavs = 3;
  int rounds = 5;
  int slots_per_round = 5;
  int subareas = 0;  // 0 means uavs * rounds
  int gers = 75;
  double region_m = 50000.0;
  double slot_s = 60.0;
  double data_gb_min = 12.5;
  double data_gb_max = 125.0;
  double intensity_min = 200.0;
  double intensity_max = 500.0;
  double ger_tflops_min = 0.0;
  double ger_tflops_max = 10.0;
  double uav_tflops = 5.0;
  double uav_energy_wh = 200.0;
  double speed_max_mps = 30.0;
  double dist_min_m = 0.0;
  double length_max_m = 100000.0;
  double uav_altitude_m = 50.0;
  double airship_altitude_m = 600.0;
  double airship_tflops = 20.0;
  double noise_dbm = -115.0;
  double tx_power_mw = 100.0;
  double bandwidth_gbps = 5.0;
  int risk_count = 8;
  double risk_radius_min_m = 200.0;
  double risk_radius_max_m = 600.0;
  double energy_budget_j = 15.0;
  double safety_distance_m = 100.0;
  double task_deadline_s = 5.0;
  PhysConstants consts;
};

// A broken constraint. `slot` is -1 for static (scenario-level) checks.
struct Violation {
  std::string constraint;
  std::vector<int> entities;
  std::string detail;
  int slot = -1;

  friend bool operator==(const Violation&, const Violation&) = default;
};

Scenario generate_scenario(const GenConfig& config, std::uint64_t seed);

// Canonical `.scn.json` text. Field order is irrelevant on load; unknown or
// missing fields are parse errors, failed invariants are invariant errors.
std::string save_scenario(const Scenario& scn);
Scenario load_scenario(const std::string& document);
Scenario load_scenario_file(const std::string& path);
void save_scenario_file(const Scenario& scn, const std::string& path);

std::vector<Violation> validate(const Scenario& scn);

// Half-open cell membership; cells touching the far region edge include it.
bool subarea_contains(const Scenario& scn, const Subarea& sub, Vec2 p);
std::optional<std::size_t> subarea_index_of(const Scenario& scn, Vec2 p);
std::size_t subarea_index_by_id(const Scenario& scn, int id);

// GER indices (into scn.gers) per subarea index, in scenario order.
std::vector<std::vector<int>> gers_by_subarea(const Scenario& scn);

}  // namespace skyrescue::scenario
