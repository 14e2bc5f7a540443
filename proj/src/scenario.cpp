#include "skyrescue/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "skyrescue/error.hpp"
#include "skyrescue/rng.hpp"

namespace skyrescue::scenario {

using nlohmann::json;

namespace {

// Closest-to-square factorization rows x cols with rows <= cols.
std::pair<int, int> grid_shape(int cells) {
  int rows = 1;
  for (int r = 1; r * r <= cells; ++r)
    if (cells % r == 0) rows = r;
  return {rows, cells / rows};
}

bool inside_inflated_risk(const std::vector<RiskSource>& risks, Vec2 p, double margin) {
  for (const auto& r : risks)
    if (distance(p, r.center) <= r.radius_m + margin) return true;
  return false;
}

}  // namespace

Scenario generate_scenario(const GenConfig& cfg, std::uint64_t seed) {
  if (cfg.uavs < 1) throw Error(ErrorKind::invalid_count, "at least one UAV is required");
  if (cfg.rounds < 1 || cfg.slots_per_round < 1)
    throw Error(ErrorKind::invalid_count, "rounds and slots_per_round must be positive");
  const int cells = cfg.subareas == 0 ? cfg.uavs * cfg.rounds : cfg.subareas;
  if (cells != cfg.uavs * cfg.rounds)
    throw Error(ErrorKind::invalid_count, "subarea count " + std::to_string(cells) +
                                              " must equal uavs x rounds = " +
                                              std::to_string(cfg.uavs * cfg.rounds));
  if (cfg.gers < 0) throw Error(ErrorKind::invalid_count, "negative GER count");
  if (!(cfg.region_m > 0.0)) throw Error(ErrorKind::region_too_small, "region side must be positive");

  Rng rng = substream(seed, {0x5ce7a});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Scenario scn;
  scn.seed = seed;
  scn.region = {cfg.region_m, cfg.region_m};
  scn.time = {cfg.slots_per_round, cfg.slot_s, cfg.rounds};
  scn.consts = cfg.consts;
  scn.consts.noise_power_w = dbm_to_watt(cfg.noise_dbm);
  scn.consts.tx_power_w = cfg.tx_power_mw * 1e-3;
  scn.consts.bandwidth_hz = cfg.bandwidth_gbps * 1e9;
  scn.energy_budget_j = cfg.energy_budget_j;
  scn.safety_distance_m = cfg.safety_distance_m;
  scn.task_deadline_s = cfg.task_deadline_s;
  scn.airship = {{0.5 * cfg.region_m, 0.5 * cfg.region_m},
                 cfg.airship_altitude_m,
                 cfg.airship_tflops * kFlopsPerTflop};

  // UAVs start evenly spaced on a circle around the airship and return there.
  const Vec2 mid{0.5 * cfg.region_m, 0.5 * cfg.region_m};
  const double ring = 0.25 * cfg.region_m;
  if (cfg.uavs > 1) {
    const double spacing = 2.0 * ring * std::sin(kPi / cfg.uavs);
    if (spacing < cfg.safety_distance_m)
      throw Error(ErrorKind::region_too_small,
                  "UAV start spacing " + std::to_string(spacing) + " m is below the safety distance");
  }
  for (int u = 0; u < cfg.uavs; ++u) {
    const double angle = 2.0 * kPi * u / cfg.uavs;
    UavSpec spec;
    spec.id = u;
    spec.start = mid + ring * Vec2{std::sin(angle), std::cos(angle)};
    spec.end = spec.start;
    spec.altitude_m = cfg.uav_altitude_m;
    spec.compute_flops = cfg.uav_tflops * kFlopsPerTflop;
    spec.energy_max_j = cfg.uav_energy_wh * kJoulesPerWh;
    spec.speed_max_mps = cfg.speed_max_mps;
    spec.dist_min_m = cfg.dist_min_m;
    spec.length_max_m = cfg.length_max_m;
    scn.uavs.push_back(spec);
  }

  const auto [rows, cols] = grid_shape(cells);
  const double cw = cfg.region_m / cols;
  const double ch = cfg.region_m / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      Subarea sub;
      sub.id = r * cols + c;
      sub.x_min_m = c * cw;
      sub.x_max_m = c + 1 == cols ? cfg.region_m : (c + 1) * cw;
      sub.y_min_m = r * ch;
      sub.y_max_m = r + 1 == rows ? cfg.region_m : (r + 1) * ch;
      sub.data_bits = uniform(cfg.data_gb_min, cfg.data_gb_max) * kBitsPerGigabyte;
      sub.intensity_cycles_per_bit = uniform(cfg.intensity_min, cfg.intensity_max);
      scn.subareas.push_back(sub);
    }
  }

  // Risk cylinders avoid UAV start positions and the airship footprint.
  const double margin = scn.consts.risk_margin_m;
  for (int k = 0, attempts = 0; k < cfg.risk_count && attempts < 10000; ++attempts) {
    RiskSource risk{{uniform(0.0, cfg.region_m), uniform(0.0, cfg.region_m)},
                    uniform(cfg.risk_radius_min_m, cfg.risk_radius_max_m)};
    bool clash = distance(risk.center, scn.airship.position) <= risk.radius_m + margin;
    for (const auto& u : scn.uavs)
      clash = clash || distance(risk.center, u.start) <= risk.radius_m + 4.0 * margin;
    if (clash) continue;
    scn.risk_sources.push_back(risk);
    ++k;
  }

  // Even GER counts per subarea; the remainder goes to randomly chosen cells.
  std::vector<int> per_cell(cells, cfg.gers / cells);
  std::vector<int> order(cells);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int k = 0; k < cfg.gers % cells; ++k) ++per_cell[order[k]];
  int ger_id = 0;
  for (int b = 0; b < cells; ++b) {
    const Subarea& sub = scn.subareas[b];
    double flops_sum = 0.0;
    for (int k = 0; k < per_cell[b]; ++k) {
      Vec2 p{};
      for (int attempt = 0; attempt < 1000; ++attempt) {
        p = {uniform(sub.x_min_m, sub.x_max_m), uniform(sub.y_min_m, sub.y_max_m)};
        if (!inside_inflated_risk(scn.risk_sources, p, 2.0 * margin)) break;
      }
      GerSpec ger{ger_id++, p, uniform(cfg.ger_tflops_min, cfg.ger_tflops_max) * kFlopsPerTflop};
      flops_sum += ger.compute_flops;
      scn.gers.push_back(ger);
    }
    scn.subareas[b].mean_ger_flops = per_cell[b] > 0 ? flops_sum / per_cell[b] : 0.0;
  }
  return scn;
}

bool subarea_contains(const Scenario& scn, const Subarea& sub, Vec2 p) {
  const bool x_in = p.x >= sub.x_min_m &&
                    (p.x < sub.x_max_m || (sub.x_max_m >= scn.region.width_m && p.x <= sub.x_max_m));
  const bool y_in = p.y >= sub.y_min_m &&
                    (p.y < sub.y_max_m || (sub.y_max_m >= scn.region.height_m && p.y <= sub.y_max_m));
  return x_in && y_in;
}

std::optional<std::size_t> subarea_index_of(const Scenario& scn, Vec2 p) {
  for (std::size_t b = 0; b < scn.subareas.size(); ++b)
    if (subarea_contains(scn, scn.subareas[b], p)) return b;
  return std::nullopt;
}

std::size_t subarea_index_by_id(const Scenario& scn, int id) {
  for (std::size_t b = 0; b < scn.subareas.size(); ++b)
    if (scn.subareas[b].id == id) return b;
  throw Error(ErrorKind::invariant_violation, "unknown subarea id " + std::to_string(id));
}

std::vector<std::vector<int>> gers_by_subarea(const Scenario& scn) {
  std::vector<std::vector<int>> out(scn.subareas.size());
  for (std::size_t j = 0; j < scn.gers.size(); ++j)
    if (auto b = subarea_index_of(scn, scn.gers[j].position)) out[*b].push_back(static_cast<int>(j));
  return out;
}

std::vector<Violation> validate(const Scenario& scn) {
  std::vector<Violation> out;
  auto add = [&](std::string id, std::vector<int> entities, std::string detail) {
    out.push_back({std::move(id), std::move(entities), std::move(detail)});
  };

  const PhysConstants& k = scn.consts;
  const std::pair<const char*, double> positive[] = {
      {"carrier_freq_hz", k.carrier_freq_hz},
      {"light_speed_mps", k.light_speed_mps},
      {"ref_distance_m", k.ref_distance_m},
      {"pathloss_exp_los", k.pathloss_exp_los},
      {"pathloss_exp_nlos", k.pathloss_exp_nlos},
      {"shadow_std_los_db", k.shadow_std_los_db},
      {"shadow_std_nlos_db", k.shadow_std_nlos_db},
      {"nakagami_shape_los", k.nakagami_shape_los},
      {"nakagami_shape_nlos", k.nakagami_shape_nlos},
      {"mean_rx_power_w", k.mean_rx_power},
      {"bandwidth_hz", k.bandwidth_hz},
      {"tx_power_w", k.tx_power_w},
      {"noise_power_w", k.noise_power_w},
      {"capacitance_coeff", k.capacitance_coeff},
      {"propulsion_coeff", k.propulsion_coeff},
      {"detect_unit_energy_j_per_m", k.detect_unit_energy},
      {"detect_segments", static_cast<double>(k.detect_segments)},
      {"cycles_per_flop", k.cycles_per_flop},
  };
  for (const auto& [name, value] : positive)
    if (!(value > 0.0) || !std::isfinite(value)) add("consts", {}, std::string(name) + " must be strictly positive");
  if (k.pathloss_exp_nlos < k.pathloss_exp_los) add("consts", {}, "pathloss_exp_nlos < pathloss_exp_los");
  if (k.nakagami_shape_los < 0.5 || k.nakagami_shape_nlos < 0.5) add("consts", {}, "Nakagami shape below 0.5");
  if (k.los_a < 0.0 || k.los_b < 0.0) add("consts", {}, "LoS sigmoid parameters must be non-negative");

  if (scn.uavs.empty()) add("uav-count", {}, "at least one UAV is required");
  if (scn.time.rounds < 1 || scn.time.slots_per_round < 1 || !(scn.time.slot_s > 0.0))
    add("time", {}, "rounds, slots and slot duration must be positive");
  if (!(scn.energy_budget_j > 0.0)) add("energy_budget", {}, "energy budget must be positive");
  if (!(scn.task_deadline_s > 0.0)) add("local_deadline", {}, "task deadline must be positive");

  if (scn.subareas.size() != scn.uavs.size() * static_cast<std::size_t>(std::max(scn.time.rounds, 0)))
    add("subarea-count", {}, "subarea count must equal uavs x rounds");

  // Tiling: inside the region, pairwise disjoint, areas sum to the region.
  double area_sum = 0.0;
  for (std::size_t a = 0; a < scn.subareas.size(); ++a) {
    const Subarea& s = scn.subareas[a];
    if (!(s.x_max_m > s.x_min_m) || !(s.y_max_m > s.y_min_m) || s.x_min_m < 0.0 || s.y_min_m < 0.0 ||
        s.x_max_m > scn.region.width_m || s.y_max_m > scn.region.height_m)
      add("subarea bounds", {s.id}, "subarea outside region or degenerate");
    if (!(s.data_bits > 0.0) || !(s.intensity_cycles_per_bit > 0.0) || s.mean_ger_flops < 0.0)
      add("subarea task", {s.id}, "subarea task parameters must be positive");
    area_sum += s.area();
    for (std::size_t b = a + 1; b < scn.subareas.size(); ++b) {
      const Subarea& t = scn.subareas[b];
      const double ox = std::min(s.x_max_m, t.x_max_m) - std::max(s.x_min_m, t.x_min_m);
      const double oy = std::min(s.y_max_m, t.y_max_m) - std::max(s.y_min_m, t.y_min_m);
      if (ox > 0.0 && oy > 0.0) add("subarea overlap", {s.id, t.id}, "subareas overlap");
    }
  }
  const double region_area = scn.region.width_m * scn.region.height_m;
  if (!scn.subareas.empty() && std::abs(area_sum - region_area) > 1e-9 * region_area)
    add("subarea coverage", {}, "subareas do not cover the rescue region");

  for (const auto& g : scn.gers) {
    int containing = 0;
    for (const auto& s : scn.subareas) containing += subarea_contains(scn, s, g.position) ? 1 : 0;
    if (containing != 1) add("ger-subarea", {g.id}, "GER must lie in exactly one subarea");
    if (g.compute_flops < 0.0 || !std::isfinite(g.compute_flops))
      add("ger_capacity", {g.id}, "GER compute capacity must be non-negative");
  }

  for (const auto& u : scn.uavs) {
    if (!(u.speed_max_mps > 0.0) || u.dist_min_m < 0.0)
      add("step_length", {u.id}, "invalid mobility bounds");
    if (!(u.length_max_m > 0.0)) add("path_length", {u.id}, "maximum flight length must be positive");
    if (!(u.compute_flops > 0.0) || !(u.energy_max_j > 0.0) || !(u.altitude_m > 0.0))
      add("uav", {u.id}, "UAV compute, energy and altitude must be positive");
  }
  for (std::size_t a = 0; a < scn.uavs.size(); ++a)
    for (std::size_t b = a + 1; b < scn.uavs.size(); ++b)
      if (distance(scn.uavs[a].start, scn.uavs[b].start) < scn.safety_distance_m)
        add("separation", {scn.uavs[a].id, scn.uavs[b].id}, "UAV start positions closer than the safety distance");

  for (std::size_t z = 0; z < scn.risk_sources.size(); ++z)
    if (!(scn.risk_sources[z].radius_m > 0.0)) add("risk", {static_cast<int>(z)}, "risk radius must be positive");
  if (!(scn.airship.compute_flops >= 0.0) || !(scn.airship.altitude_m > 0.0))
    add("airship", {}, "invalid airship parameters");
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const char* x, const char* y, Vec2 v) { return {{x, v.x}, {y, v.y}}; }

// Reads one JSON object, tracking which keys were consumed so that unknown
// fields can be rejected with their full path.
class StrictObject {
 public:
  StrictObject(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail(path_, "expected an object");
  }

  const json& field(const std::string& key) {
    auto it = node_.find(key);
    if (it == node_.end()) fail(path_ + "." + key, "missing field");
    seen_.insert(key);
    return *it;
  }

  double number(const std::string& key) {
    const json& v = field(key);
    if (!v.is_number()) fail(path_ + "." + key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const std::string& key) {
    const json& v = field(key);
    if (!v.is_number_integer()) fail(path_ + "." + key, "expected an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = field(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(path_ + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  StrictObject object(const std::string& key) { return StrictObject(field(key), path_ + "." + key); }

  const json& array(const std::string& key) {
    const json& v = field(key);
    if (!v.is_array()) fail(path_ + "." + key, "expected an array");
    return v;
  }

  const std::string& path() const { return path_; }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) fail(path_ + "." + it.key(), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::parse_error, where + ": " + what);
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

std::string save_scenario(const Scenario& scn) {
  const PhysConstants& k = scn.consts;
  json doc;
  doc["format"] = "skyrescue-scenario-1";
  doc["seed"] = scn.seed;
  doc["region"] = {{"width_m", scn.region.width_m}, {"height_m", scn.region.height_m}};
  doc["time"] = {{"slots_per_round", scn.time.slots_per_round},
                 {"slot_s", scn.time.slot_s},
                 {"rounds", scn.time.rounds}};
  doc["energy_budget_j"] = scn.energy_budget_j;
  doc["safety_distance_m"] = scn.safety_distance_m;
  doc["task_deadline_s"] = scn.task_deadline_s;
  doc["consts"] = {
      {"carrier_freq_hz", k.carrier_freq_hz},
      {"light_speed_mps", k.light_speed_mps},
      {"ref_distance_m", k.ref_distance_m},
      {"pathloss_exp_los", k.pathloss_exp_los},
      {"pathloss_exp_nlos", k.pathloss_exp_nlos},
      {"shadow_std_los_db", k.shadow_std_los_db},
      {"shadow_std_nlos_db", k.shadow_std_nlos_db},
      {"nakagami_shape_los", k.nakagami_shape_los},
      {"nakagami_shape_nlos", k.nakagami_shape_nlos},
      {"mean_rx_power_w", k.mean_rx_power},
      {"bandwidth_hz", k.bandwidth_hz},
      {"tx_power_w", k.tx_power_w},
      {"noise_power_w", k.noise_power_w},
      {"capacitance_coeff", k.capacitance_coeff},
      {"propulsion_coeff", k.propulsion_coeff},
      {"detect_unit_energy_j_per_m", k.detect_unit_energy},
      {"detect_segments", k.detect_segments},
      {"los_a", k.los_a},
      {"los_b", k.los_b},
      {"cycles_per_flop", k.cycles_per_flop},
      {"sensing_range_m", k.sensing_range_m},
      {"risk_margin_m", k.risk_margin_m},
  };
  doc["airship"] = {{"x_m", scn.airship.position.x},
                    {"y_m", scn.airship.position.y},
                    {"altitude_m", scn.airship.altitude_m},
                    {"compute_flops", scn.airship.compute_flops}};
  json uavs = json::array();
  for (const auto& u : scn.uavs)
    uavs.push_back({{"id", u.id},
                    {"start", vec_json("x_m", "y_m", u.start)},
                    {"end", vec_json("x_m", "y_m", u.end)},
                    {"altitude_m", u.altitude_m},
                    {"compute_flops", u.compute_flops},
                    {"energy_max_j", u.energy_max_j},
                    {"speed_max_mps", u.speed_max_mps},
                    {"dist_min_m", u.dist_min_m},
                    {"length_max_m", u.length_max_m}});
  doc["uavs"] = std::move(uavs);
  json gers = json::array();
  for (const auto& g : scn.gers)
    gers.push_back({{"id", g.id}, {"x_m", g.position.x}, {"y_m", g.position.y}, {"compute_flops", g.compute_flops}});
  doc["gers"] = std::move(gers);
  json subs = json::array();
  for (const auto& s : scn.subareas)
    subs.push_back({{"id", s.id},
                    {"x_min_m", s.x_min_m},
                    {"y_min_m", s.y_min_m},
                    {"x_max_m", s.x_max_m},
                    {"y_max_m", s.y_max_m},
                    {"data_bits", s.data_bits},
                    {"intensity_cycles_per_bit", s.intensity_cycles_per_bit},
                    {"mean_ger_flops", s.mean_ger_flops}});
  doc["subareas"] = std::move(subs);
  json risks = json::array();
  for (const auto& r : scn.risk_sources)
    risks.push_back({{"x_m", r.center.x}, {"y_m", r.center.y}, {"radius_m", r.radius_m}});
  doc["risk_sources"] = std::move(risks);
  return doc.dump(2) + "\n";
}

Scenario load_scenario(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse_error, std::string("$: ") + e.what());
  }

  Scenario scn;
  StrictObject root(doc, "$");
  if (root.field("format") != "skyrescue-scenario-1") StrictObject::fail("$.format", "unsupported format");
  scn.seed = root.unsigned_integer("seed");
  {
    StrictObject r = root.object("region");
    scn.region = {r.number("width_m"), r.number("height_m")};
    r.finish();
  }
  {
    StrictObject t = root.object("time");
    scn.time.slots_per_round = static_cast<int>(t.integer("slots_per_round"));
    scn.time.slot_s = t.number("slot_s");
    scn.time.rounds = static_cast<int>(t.integer("rounds"));
    t.finish();
  }
  scn.energy_budget_j = root.number("energy_budget_j");
  scn.safety_distance_m = root.number("safety_distance_m");
  scn.task_deadline_s = root.number("task_deadline_s");
  {
    StrictObject c = root.object("consts");
    PhysConstants& k = scn.consts;
    k.carrier_freq_hz = c.number("carrier_freq_hz");
    k.light_speed_mps = c.number("light_speed_mps");
    k.ref_distance_m = c.number("ref_distance_m");
    k.pathloss_exp_los = c.number("pathloss_exp_los");
    k.pathloss_exp_nlos = c.number("pathloss_exp_nlos");
    k.shadow_std_los_db = c.number("shadow_std_los_db");
    k.shadow_std_nlos_db = c.number("shadow_std_nlos_db");
    k.nakagami_shape_los = c.number("nakagami_shape_los");
    k.nakagami_shape_nlos = c.number("nakagami_shape_nlos");
    k.mean_rx_power = c.number("mean_rx_power_w");
    k.bandwidth_hz = c.number("bandwidth_hz");
    k.tx_power_w = c.number("tx_power_w");
    k.noise_power_w = c.number("noise_power_w");
    k.capacitance_coeff = c.number("capacitance_coeff");
    k.propulsion_coeff = c.number("propulsion_coeff");
    k.detect_unit_energy = c.number("detect_unit_energy_j_per_m");
    k.detect_segments = static_cast<int>(c.integer("detect_segments"));
    k.los_a = c.number("los_a");
    k.los_b = c.number("los_b");
    k.cycles_per_flop = c.number("cycles_per_flop");
    k.sensing_range_m = c.number("sensing_range_m");
    k.risk_margin_m = c.number("risk_margin_m");
    c.finish();
  }
  {
    StrictObject a = root.object("airship");
    scn.airship = {{a.number("x_m"), a.number("y_m")}, a.number("altitude_m"), a.number("compute_flops")};
    a.finish();
  }
  auto read_vec = [](StrictObject parent, const std::string& key) {
    (void)key;
    Vec2 v{parent.number("x_m"), parent.number("y_m")};
    parent.finish();
    return v;
  };
  const json& uavs = root.array("uavs");
  for (std::size_t i = 0; i < uavs.size(); ++i) {
    StrictObject u(uavs[i], "$.uavs[" + std::to_string(i) + "]");
    UavSpec spec;
    spec.id = static_cast<int>(u.integer("id"));
    spec.start = read_vec(u.object("start"), "start");
    spec.end = read_vec(u.object("end"), "end");
    spec.altitude_m = u.number("altitude_m");
    spec.compute_flops = u.number("compute_flops");
    spec.energy_max_j = u.number("energy_max_j");
    spec.speed_max_mps = u.number("speed_max_mps");
    spec.dist_min_m = u.number("dist_min_m");
    spec.length_max_m = u.number("length_max_m");
    u.finish();
    scn.uavs.push_back(spec);
  }
  const json& gers = root.array("gers");
  for (std::size_t i = 0; i < gers.size(); ++i) {
    StrictObject g(gers[i], "$.gers[" + std::to_string(i) + "]");
    GerSpec spec{static_cast<int>(g.integer("id")), {g.number("x_m"), g.number("y_m")}, g.number("compute_flops")};
    g.finish();
    scn.gers.push_back(spec);
  }
  const json& subs = root.array("subareas");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    StrictObject s(subs[i], "$.subareas[" + std::to_string(i) + "]");
    Subarea sub;
    sub.id = static_cast<int>(s.integer("id"));
    sub.x_min_m = s.number("x_min_m");
    sub.y_min_m = s.number("y_min_m");
    sub.x_max_m = s.number("x_max_m");
    sub.y_max_m = s.number("y_max_m");
    sub.data_bits = s.number("data_bits");
    sub.intensity_cycles_per_bit = s.number("intensity_cycles_per_bit");
    sub.mean_ger_flops = s.number("mean_ger_flops");
    s.finish();
    scn.subareas.push_back(sub);
  }
  const json& risks = root.array("risk_sources");
  for (std::size_t i = 0; i < risks.size(); ++i) {
    StrictObject r(risks[i], "$.risk_sources[" + std::to_string(i) + "]");
    RiskSource risk{{r.number("x_m"), r.number("y_m")}, r.number("radius_m")};
    r.finish();
    scn.risk_sources.push_back(risk);
  }
  root.finish();

  const auto violations = validate(scn);
  if (!violations.empty())
    throw Error(ErrorKind::invariant_violation, violations.front().constraint + ": " + violations.front().detail);
  return scn;
}

Scenario load_scenario_file(const std::string& path) {
  if (std::filesystem::is_directory(path)) throw Error(ErrorKind::io_error, path + " is a directory");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_scenario(ss.str());
}

void save_scenario_file(const Scenario& scn, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path);
  out << save_scenario(scn);
}

}  // namespace skyrescue::scenario
