#include "skyrescue/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "skyrescue/error.hpp"

namespace skyrescue::harness {

namespace fs = std::filesystem;
using costmodel::Target;
using costmodel::TargetKind;

namespace {

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io_error, "cannot write " + path);
  f << std::setprecision(17);
  return f;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::missing_artifact, path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string target_name(const Target& t) {
  switch (t.kind) {
    case TargetKind::local: return "local";
    case TargetKind::airship: return "airship";
    case TargetKind::ger: return "ger:" + std::to_string(t.ger);
  }
  return "?";
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::parse_error, "missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

Table read_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  Table t;
  std::string line;
  if (std::getline(in, line)) t.header = split(line, ',');
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split(line, ','));
  return t;
}

double num(const std::string& s) { return std::stod(s); }

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_file(const std::string& path) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(read_text(path));
  return s.str();
}

double oracle_assignment(const Eigen::MatrixXd& cost) {
  const auto rows = cost.rows();
  const auto cols = cost.cols();
  if (rows > 8 || cols > 8) throw Error(ErrorKind::too_large, "oracle handles at most 8x8");
  if (rows > cols) throw Error(ErrorKind::cardinality_mismatch, "more rows than columns");
  if (rows == 0) return 0.0;
  std::vector<int> perm(static_cast<std::size_t>(cols));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  // Every permutation of the columns; the first `rows` entries are the map.
  do {
    double s = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) s += cost(r, perm[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<Target> legal_targets(const env::World& world, int uav) {
  const env::ActionMask mask = world.action_mask(uav);
  const auto& gers = world.gers_of_subarea(world.subarea_of(uav));
  std::vector<Target> out{{TargetKind::local, -1}};
  for (std::size_t k = 0; k < gers.size(); ++k)
    if (mask.allowed[k + 1]) out.push_back({TargetKind::ger, gers[k]});
  if (mask.allowed.back()) out.push_back({TargetKind::airship, -1});
  return out;
}

PerSlotChoice oracle_perslot(const env::World& world, int uav, const std::vector<double>& grid,
                             const std::vector<Target>& targets) {
  const auto& q = world.uav(uav).queue;
  std::vector<PerSlotChoice> all;
  for (const Target& t : targets) {
    for (double lf : grid) {
      const env::CandidateEval ev = world.evaluate_candidate(uav, t, t.kind == TargetKind::local ? 1.0 : lf);
      PerSlotChoice c;
      c.index = all.size();
      c.decision = ev.decision;
      c.t_total_s = ev.cost.t_total_s;
      c.e_total_j = ev.cost.e_total_j;
      c.cost = q.penalty_weight * c.t_total_s + q.q_value * (c.e_total_j - q.budget_j);
      all.push_back(c);
    }
  }
  if (all.empty()) throw Error(ErrorKind::empty_candidates, "oracle needs at least one candidate");
  std::stable_sort(all.begin(), all.end(), [](const PerSlotChoice& a, const PerSlotChoice& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.e_total_j != b.e_total_j) return a.e_total_j < b.e_total_j;
    return a.index < b.index;
  });
  return all.front();
}

// --- config documents ---------------------------------------------------

json to_json(const scenario::GenConfig& c) {
  return {{"uavs", c.uavs},
          {"rounds", c.rounds},
          {"slots_per_round", c.slots_per_round},
          {"subareas", c.subareas},
          {"gers", c.gers},
          {"region_m", c.region_m},
          {"slot_s", c.slot_s},
          {"data_gb_min", c.data_gb_min},
          {"data_gb_max", c.data_gb_max},
          {"intensity_min", c.intensity_min},
          {"intensity_max", c.intensity_max},
          {"ger_tflops_min", c.ger_tflops_min},
          {"ger_tflops_max", c.ger_tflops_max},
          {"uav_tflops", c.uav_tflops},
          {"uav_energy_wh", c.uav_energy_wh},
          {"speed_max_mps", c.speed_max_mps},
          {"dist_min_m", c.dist_min_m},
          {"length_max_m", c.length_max_m},
          {"uav_altitude_m", c.uav_altitude_m},
          {"airship_altitude_m", c.airship_altitude_m},
          {"airship_tflops", c.airship_tflops},
          {"noise_dbm", c.noise_dbm},
          {"tx_power_mw", c.tx_power_mw},
          {"bandwidth_gbps", c.bandwidth_gbps},
          {"risk_count", c.risk_count},
          {"risk_radius_min_m", c.risk_radius_min_m},
          {"risk_radius_max_m", c.risk_radius_max_m},
          {"energy_budget_j", c.energy_budget_j},
          {"safety_distance_m", c.safety_distance_m},
          {"task_deadline_s", c.task_deadline_s}};
}

scenario::GenConfig gen_config_from_json(const json& j) {
  scenario::GenConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("uavs", c.uavs);
  get("rounds", c.rounds);
  get("slots_per_round", c.slots_per_round);
  get("subareas", c.subareas);
  get("gers", c.gers);
  get("region_m", c.region_m);
  get("slot_s", c.slot_s);
  get("data_gb_min", c.data_gb_min);
  get("data_gb_max", c.data_gb_max);
  get("intensity_min", c.intensity_min);
  get("intensity_max", c.intensity_max);
  get("ger_tflops_min", c.ger_tflops_min);
  get("ger_tflops_max", c.ger_tflops_max);
  get("uav_tflops", c.uav_tflops);
  get("uav_energy_wh", c.uav_energy_wh);
  get("speed_max_mps", c.speed_max_mps);
  get("dist_min_m", c.dist_min_m);
  get("length_max_m", c.length_max_m);
  get("uav_altitude_m", c.uav_altitude_m);
  get("airship_altitude_m", c.airship_altitude_m);
  get("airship_tflops", c.airship_tflops);
  get("noise_dbm", c.noise_dbm);
  get("tx_power_mw", c.tx_power_mw);
  get("bandwidth_gbps", c.bandwidth_gbps);
  get("risk_count", c.risk_count);
  get("risk_radius_min_m", c.risk_radius_min_m);
  get("risk_radius_max_m", c.risk_radius_max_m);
  get("energy_budget_j", c.energy_budget_j);
  get("safety_distance_m", c.safety_distance_m);
  get("task_deadline_s", c.task_deadline_s);
  return c;
}

json to_json(const trainer::TrainerConfig& c) {
  return {{"episodes", c.episodes},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"batch", c.batch},
          {"gamma", c.gamma},
          {"psi", c.psi},
          {"eps0", c.eps0},
          {"eps_decay", c.eps_decay},
          {"eps_floor", c.eps_floor},
          {"bc_weight", c.bc_weight},
          {"range_penalty", c.range_penalty},
          {"beta_is_start", c.beta_is_start},
          {"replay_capacity", c.replay_capacity},
          {"denoise_steps", c.denoise_steps},
          {"actor_hidden", c.actor_hidden},
          {"critic_hidden", c.critic_hidden},
          {"gaussian_sigma", c.gaussian_sigma},
          {"update_every", c.update_every},
          {"seed", c.seed},
          {"V", c.env.V},
          {"reward_scale", c.env.reward_scale},
          {"penalty", c.env.penalty},
          {"allocation", c.env.allocation == env::AllocationMode::equal ? "equal" : "proportional"},
          {"literal_compute_energy", c.env.literal_compute_energy},
          {"max_gers", c.env.max_gers},
          {"normalized_assignment", c.env.normalized_assignment},
          {"task_jitter", c.env.task_jitter}};
}

trainer::TrainerConfig trainer_config_from_json(const json& j) {
  trainer::TrainerConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("episodes", c.episodes);
  get("actor_lr", c.actor_lr);
  get("critic_lr", c.critic_lr);
  get("batch", c.batch);
  get("gamma", c.gamma);
  get("psi", c.psi);
  get("eps0", c.eps0);
  get("eps_decay", c.eps_decay);
  get("eps_floor", c.eps_floor);
  get("bc_weight", c.bc_weight);
  get("range_penalty", c.range_penalty);
  get("beta_is_start", c.beta_is_start);
  get("replay_capacity", c.replay_capacity);
  get("denoise_steps", c.denoise_steps);
  get("actor_hidden", c.actor_hidden);
  get("critic_hidden", c.critic_hidden);
  get("gaussian_sigma", c.gaussian_sigma);
  get("update_every", c.update_every);
  get("seed", c.seed);
  get("V", c.env.V);
  get("reward_scale", c.env.reward_scale);
  get("penalty", c.env.penalty);
  if (j.contains("allocation"))
    c.env.allocation = j.at("allocation").get<std::string>() == "proportional" ? env::AllocationMode::proportional
                                                                               : env::AllocationMode::equal;
  get("literal_compute_energy", c.env.literal_compute_energy);
  get("max_gers", c.env.max_gers);
  get("normalized_assignment", c.env.normalized_assignment);
  get("task_jitter", c.env.task_jitter);
  return c;
}

// --- artifact writers ---------------------------------------------------

void write_reward_curve(const std::string& path, const std::vector<env::EpisodeMetrics>& curve) {
  auto f = open_out(path);
  f << "episode,mean_reward,mean_latency_s,mean_energy_j,mean_q\n";
  for (const auto& m : curve)
    f << m.episode << ',' << m.mean_reward << ',' << m.mean_latency_s << ',' << m.mean_energy_j << ',' << m.mean_q
      << '\n';
}

void write_queue_trace(const std::string& path, const std::vector<env::SlotRecord>& records, int slots_per_episode) {
  auto f = open_out(path);
  f << "slot,uav,q_joules,y_k\n";
  if (records.empty()) return;
  const int first = records.front().episode;
  for (const auto& r : records)
    f << (r.episode - first) * slots_per_episode + r.slot << ',' << r.uav << ',' << r.q_after << ',' << r.y << '\n';
}

void write_trajectory(const std::string& path, const std::vector<env::SlotRecord>& records,
                      const scenario::Scenario& scn) {
  auto f = open_out(path);
  f << "slot,uav_id,x_m,y_m,h_m,speed_mps,heading_rad\n";
  for (const auto& r : records) {
    const auto& u = scn.uavs.at(static_cast<std::size_t>(r.uav));
    f << r.slot << ',' << u.id << ',' << r.position_after.x << ',' << r.position_after.y << ',' << u.altitude_m << ','
      << r.speed_mps << ',' << r.heading_rad << '\n';
  }
}

void write_assignment(const std::string& path, const std::vector<assignment::RoundAssignment>& plan) {
  auto f = open_out(path);
  f << "round,uav,subarea,cost\n";
  for (const auto& ra : plan)
    for (std::size_t u = 0; u < ra.subarea_of_uav.size(); ++u)
      f << ra.round << ',' << u << ',' << ra.subarea_of_uav[u] << ','
        << (u < ra.cost_of_uav.size() ? ra.cost_of_uav[u] : 0.0) << '\n';
}

void write_cost_breakdown(const std::string& path, const std::vector<env::SlotRecord>& records) {
  auto f = open_out(path);
  f << "slot,uav,t_local,t_tran,t_comp,t_total,e_tran,e_comp,e_prop,e_dete,e_total,episode,target,local_fraction,"
       "infeasible\n";
  for (const auto& r : records) {
    const auto& c = r.cost;
    f << r.slot << ',' << r.uav << ',' << c.t_local_s << ',' << c.t_tran_s << ',' << c.t_comp_s << ',' << c.t_total_s
      << ',' << c.e_tran_j << ',' << c.e_comp_j << ',' << c.e_prop_j << ',' << c.e_dete_j << ',' << c.e_total_j << ','
      << r.episode << ',' << target_name(r.decision.target) << ',' << r.decision.local_fraction << ','
      << (r.infeasible ? 1 : 0) << '\n';
  }
}

void write_resource_map(const std::string& path, const std::vector<std::vector<env::GerUsage>>& maps,
                        const scenario::Scenario& scn) {
  auto f = open_out(path);
  f << "slot,ger_id,x_m,y_m,max_flops,remaining_flops\n";
  for (std::size_t s = 0; s < maps.size(); ++s) {
    for (const auto& g : maps[s]) {
      const auto& spec = scn.gers.at(static_cast<std::size_t>(g.ger));
      f << s << ',' << spec.id << ',' << spec.position.x << ',' << spec.position.y << ',' << g.max_flops << ','
        << g.remaining_flops << '\n';
    }
  }
}

void write_episode_log(const std::string& path, const std::vector<env::SlotRecord>& records) {
  auto f = open_out(path);
  for (const auto& r : records) {
    json j = {{"episode", r.episode},
              {"slot", r.slot},
              {"uav", r.uav},
              {"action", {{"target", target_name(r.decision.target)}, {"local_fraction", r.decision.local_fraction}}},
              {"reward", r.reward},
              {"t_total", r.cost.t_total_s},
              {"e_total", r.cost.e_total_j},
              {"q", r.q_after},
              {"flags", r.flags},
              {"penalty", r.penalty}};
    f << j.dump() << '\n';
  }
}

void write_episode_artifacts(const std::string& dir, const scenario::Scenario& scn,
                             const std::vector<env::SlotRecord>& records,
                             const std::vector<std::vector<env::GerUsage>>& maps,
                             const std::vector<assignment::RoundAssignment>& plan) {
  write_queue_trace(dir + "/queue_trace.csv", records, scn.time.slots_per_episode());
  write_trajectory(dir + "/trajectory.csv", records, scn);
  write_assignment(dir + "/assignment.csv", plan);
  write_cost_breakdown(dir + "/cost_breakdown.csv", records);
  write_resource_map(dir + "/resource_map.csv", maps, scn);
  write_episode_log(dir + "/episode_log.ndjson", records);
}

void write_manifest(const std::string& dir, const std::vector<std::string>& argv, const json& config,
                    const std::vector<std::string>& artifacts) {
  json hashes = json::object();
  for (const auto& a : artifacts) hashes[a] = hash_file(dir + "/" + a);
  json m = {{"format", "skyrescue-manifest-1"}, {"argv", argv}, {"config", config}, {"artifacts", hashes}};
  auto f = open_out(dir + "/manifest.json");
  f << m.dump(2) << '\n';
}

json read_manifest(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse_error, path + ": " + e.what());
  }
}

// --- sweeps -------------------------------------------------------------

std::string to_string(SweepVar v) {
  switch (v) {
    case SweepVar::V: return "V";
    case SweepVar::ger_compute: return "ger_compute";
    case SweepVar::ger_count: return "ger_count";
    case SweepVar::data_size: return "data_size";
    case SweepVar::denoise_steps: return "denoise_steps";
    case SweepVar::batch: return "batch";
    case SweepVar::lr: return "lr";
  }
  return "?";
}

SweepVar parse_sweep_var(const std::string& name) {
  for (SweepVar v : {SweepVar::V, SweepVar::ger_compute, SweepVar::ger_count, SweepVar::data_size,
                     SweepVar::denoise_steps, SweepVar::batch, SweepVar::lr})
    if (to_string(v) == name) return v;
  throw Error(ErrorKind::usage_error, "unknown sweep variable '" + name + "'");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  for (std::string cell : split(text, ',')) {
    while (!cell.empty() && std::isalpha(static_cast<unsigned char>(cell.back()))) cell.pop_back();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (cell.empty() || used != cell.size()) throw Error(ErrorKind::usage_error, "bad grid value in '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::usage_error, "empty grid");
  return out;
}

int thread_budget(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("SKYRESCUE_THREADS")) n = std::atoi(env);
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

namespace {

SweepRow run_point(const SweepSpec& spec, double value, const std::string& dir) {
  scenario::GenConfig gen = spec.gen;
  trainer::TrainerConfig cfg = spec.trainer;
  switch (spec.var) {
    case SweepVar::V: cfg.env.V = value; break;
    case SweepVar::ger_compute: gen.ger_tflops_min = gen.ger_tflops_max = value; break;
    case SweepVar::ger_count: gen.gers = static_cast<int>(value); break;
    case SweepVar::data_size: gen.data_gb_min = gen.data_gb_max = value; break;
    case SweepVar::denoise_steps: cfg.denoise_steps = static_cast<int>(value); break;
    case SweepVar::batch: cfg.batch = static_cast<int>(value); break;
    case SweepVar::lr: cfg.actor_lr = cfg.critic_lr = value; break;
  }
  auto scn = std::make_shared<const scenario::Scenario>(scenario::generate_scenario(gen, spec.scenario_seed));
  fs::create_directories(dir);
  scenario::save_scenario_file(*scn, dir + "/scenario.scn.json");
  const trainer::TrainResult tr = trainer::train(scn, cfg, spec.variant);
  write_reward_curve(dir + "/reward_curve.csv", tr.curve);
  const auto policy = trainer::make_policy(tr);
  SweepRow row;
  row.value = value;
  for (std::uint64_t s : spec.eval_seeds) {
    const auto ev =
        trainer::evaluate(scn, cfg, spec.variant, *policy, trainer::eval_world_seed(s), spec.eval_episodes, false);
    row.mean_latency_s += ev.mean_latency_s;
    row.mean_energy_j += ev.mean_energy_j;
    row.mean_reward += ev.mean_reward;
    row.mean_q += ev.mean_q;
  }
  const double n = static_cast<double>(spec.eval_seeds.size());
  row.mean_latency_s /= n;
  row.mean_energy_j /= n;
  row.mean_reward /= n;
  row.mean_q /= n;
  return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.grid.empty()) throw Error(ErrorKind::invalid_range, "sweep grid is empty");
  if (spec.eval_seeds.empty()) throw Error(ErrorKind::invalid_range, "sweep needs eval seeds");
  for (std::uint64_t s : spec.eval_seeds)
    if (s == spec.trainer.seed) throw Error(ErrorKind::invalid_range, "eval seed equals the training seed");

  std::vector<SweepRow> rows(spec.grid.size());
  std::vector<std::exception_ptr> errors(spec.grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < spec.grid.size(); i = next++) {
      try {
        rows[i] = run_point(spec, spec.grid[i], spec.out_dir + "/point_" + std::to_string(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(thread_budget(spec.threads), static_cast<int>(spec.grid.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const std::string var = to_string(spec.var);
  auto f = open_out(spec.out_dir + "/sweep.csv");
  f << "var,value,mean_latency_s,mean_energy_j,mean_reward,mean_q\n";
  for (const auto& r : rows)
    f << var << ',' << r.value << ',' << r.mean_latency_s << ',' << r.mean_energy_j << ',' << r.mean_reward << ','
      << r.mean_q << '\n';
  auto g = open_out(spec.out_dir + "/latency_vs_" + var + ".csv");
  g << var << ",mean_latency_s\n";
  for (const auto& r : rows) g << r.value << ',' << r.mean_latency_s << '\n';
  return rows;
}

// --- plot data ----------------------------------------------------------

std::vector<std::string> emit_plotdata(const std::string& run_dir, const std::string& out_dir) {
  if (!fs::exists(run_dir + "/manifest.json")) throw Error(ErrorKind::missing_artifact, run_dir + "/manifest.json");
  std::vector<std::string> written;
  auto has = [&](const std::string& name) { return fs::exists(run_dir + "/" + name); };
  bool any = false;

  if (has("reward_curve.csv")) {
    any = true;
    const Table t = read_csv(run_dir + "/reward_curve.csv");
    const auto ep = t.col("episode");
    const auto rw = t.col("mean_reward");
    const auto lat = t.col("mean_latency_s");
    const auto en = t.col("mean_energy_j");
    const auto q = t.col("mean_q");
    auto f = open_out(out_dir + "/plot_reward_curve.csv");
    f << "episode,mean_reward,reward_ma30,mean_latency_s,mean_energy_j,mean_q\n";
    double window = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      window += num(t.rows[i][rw]);
      if (i >= 30) window -= num(t.rows[i - 30][rw]);
      const double ma = window / static_cast<double>(std::min<std::size_t>(i + 1, 30));
      f << t.rows[i][ep] << ',' << t.rows[i][rw] << ',' << ma << ',' << t.rows[i][lat] << ',' << t.rows[i][en] << ','
        << t.rows[i][q] << '\n';
    }
    written.push_back("plot_reward_curve.csv");
  }

  if (has("queue_trace.csv") && has("cost_breakdown.csv")) {
    any = true;
    const Table q = read_csv(run_dir + "/queue_trace.csv");
    const Table c = read_csv(run_dir + "/cost_breakdown.csv");
    auto f = open_out(out_dir + "/plot_queue_energy.csv");
    f << "slot,uav,q_joules,y_k,e_total_j\n";
    const auto e = c.col("e_total");
    for (std::size_t i = 0; i < q.rows.size(); ++i)
      f << q.rows[i][0] << ',' << q.rows[i][1] << ',' << q.rows[i][2] << ',' << q.rows[i][3] << ','
        << (i < c.rows.size() ? c.rows[i][e] : "") << '\n';
    written.push_back("plot_queue_energy.csv");
  }

  if (has("trajectory.csv") && has("assignment.csv") && has("scenario.scn.json")) {
    any = true;
    const scenario::Scenario scn = scenario::load_scenario_file(run_dir + "/scenario.scn.json");
    const Table tr = read_csv(run_dir + "/trajectory.csv");
    const Table as = read_csv(run_dir + "/assignment.csv");
    std::map<std::pair<int, int>, int> sub;  // (round, uav index) -> subarea
    for (const auto& r : as.rows) sub[{std::stoi(r[0]), std::stoi(r[1])}] = std::stoi(r[2]);
    std::map<int, int> index_of_id;
    for (std::size_t u = 0; u < scn.uavs.size(); ++u) index_of_id[scn.uavs[u].id] = static_cast<int>(u);
    auto f = open_out(out_dir + "/plot_round_trajectory.csv");
    f << "round,slot,uav_id,subarea_id,x_m,y_m,h_m\n";
    for (const auto& r : tr.rows) {
      const int slot = std::stoi(r[0]);
      const int round = slot / scn.time.slots_per_round;
      const int b = sub.count({round, index_of_id[std::stoi(r[1])]}) ? sub[{round, index_of_id[std::stoi(r[1])]}] : -1;
      const int sid = b >= 0 ? scn.subareas.at(static_cast<std::size_t>(b)).id : -1;
      f << round << ',' << slot << ',' << r[1] << ',' << sid << ',' << r[2] << ',' << r[3] << ',' << r[4] << '\n';
    }
    written.push_back("plot_round_trajectory.csv");
  }

  if (has("resource_map.csv")) {
    any = true;
    const Table t = read_csv(run_dir + "/resource_map.csv");
    struct Acc {
      std::string x, y;
      double max = 0.0, min_remaining = std::numeric_limits<double>::infinity(), used = 0.0;
      int n = 0;
    };
    std::map<int, Acc> by_ger;
    for (const auto& r : t.rows) {
      Acc& a = by_ger[std::stoi(r[1])];
      a.x = r[2];
      a.y = r[3];
      a.max = num(r[4]);
      a.min_remaining = std::min(a.min_remaining, num(r[5]));
      a.used += a.max > 0.0 ? 1.0 - num(r[5]) / a.max : 0.0;
      ++a.n;
    }
    auto f = open_out(out_dir + "/plot_resource_map.csv");
    f << "ger_id,x_m,y_m,max_flops,min_remaining_flops,mean_utilization\n";
    for (const auto& [id, a] : by_ger)
      f << id << ',' << a.x << ',' << a.y << ',' << a.max << ',' << a.min_remaining << ','
        << (a.n > 0 ? a.used / a.n : 0.0) << '\n';
    written.push_back("plot_resource_map.csv");
  }

  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("latency_vs_", 0) == 0 && entry.path().extension() == ".csv") {
      any = true;
      fs::create_directories(out_dir);
      fs::copy_file(entry.path(), fs::path(out_dir) / name, fs::copy_options::overwrite_existing);
      written.push_back(name);
    }
  }
  if (!any) throw Error(ErrorKind::missing_artifact, "no plottable artifacts in " + run_dir);
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace skyrescue::harness
