#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "skyrescue/env.hpp"
#include "skyrescue/scenario.hpp"
#include "skyrescue/trainer.hpp"

namespace skyrescue::harness {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes);
// 16 hex digits of the FNV-1a hash of the file; throws missing-artifact.
std::string hash_file(const std::string& path);

// Exhaustive minimum over injective row -> column maps. Throws too-large
// beyond 8 rows or columns and cardinality-mismatch when rows > cols.
double oracle_assignment(const Eigen::MatrixXd& cost);

struct PerSlotChoice {
  std::size_t index = 0;  // position in targets x grid, target-major
  costmodel::SlotDecision decision;
  double cost = 0.0;
  double t_total_s = 0.0;
  double e_total_j = 0.0;
};

// Scores every (target, fraction) pair with V t + Q (e - budget) and returns
// the minimum, ties broken by lower energy then lower index. Local targets
// always use fraction 1.
PerSlotChoice oracle_perslot(const env::World& world, int uav, const std::vector<double>& grid,
                             const std::vector<costmodel::Target>& targets);

// Targets the UAV may legally choose this slot, in mask order.
std::vector<costmodel::Target> legal_targets(const env::World& world, int uav);

// --- config documents -------------------------------------------------

json to_json(const scenario::GenConfig& c);
scenario::GenConfig gen_config_from_json(const json& j);
json to_json(const trainer::TrainerConfig& c);
trainer::TrainerConfig trainer_config_from_json(const json& j);

// --- artifact writers -------------------------------------------------

void write_reward_curve(const std::string& path, const std::vector<env::EpisodeMetrics>& curve);
// slot is the running slot index across the given records.
void write_queue_trace(const std::string& path, const std::vector<env::SlotRecord>& records,
                       int slots_per_episode);
void write_trajectory(const std::string& path, const std::vector<env::SlotRecord>& records,
                      const scenario::Scenario& scn);
void write_assignment(const std::string& path, const std::vector<assignment::RoundAssignment>& plan);
void write_cost_breakdown(const std::string& path, const std::vector<env::SlotRecord>& records);
void write_resource_map(const std::string& path, const std::vector<std::vector<env::GerUsage>>& maps,
                        const scenario::Scenario& scn);
void write_episode_log(const std::string& path, const std::vector<env::SlotRecord>& records);

// Writes every per-run CSV/log for one episode's records into `dir`.
void write_episode_artifacts(const std::string& dir, const scenario::Scenario& scn,
                             const std::vector<env::SlotRecord>& records,
                             const std::vector<std::vector<env::GerUsage>>& maps,
                             const std::vector<assignment::RoundAssignment>& plan);

// manifest.json: command line, config, seeds and hashes of the listed
// artifacts (paths relative to dir).
void write_manifest(const std::string& dir, const std::vector<std::string>& argv, const json& config,
                    const std::vector<std::string>& artifacts);
json read_manifest(const std::string& path);

// --- sweeps -----------------------------------------------------------

enum class SweepVar { V, ger_compute, ger_count, data_size, denoise_steps, batch, lr };
std::string to_string(SweepVar v);
SweepVar parse_sweep_var(const std::string& name);
// Comma-separated numbers with an optional unit suffix on each (GB, TF, ...).
std::vector<double> parse_grid(const std::string& text);

struct SweepSpec {
  SweepVar var = SweepVar::V;
  std::vector<double> grid;
  trainer::Variant variant = trainer::Variant::lyapunov;
  scenario::GenConfig gen;
  std::uint64_t scenario_seed = 7;
  trainer::TrainerConfig trainer;
  std::vector<std::uint64_t> eval_seeds{1000001};
  int eval_episodes = 5;
  std::string out_dir;
  int threads = 0;  // 0 reads SKYRESCUE_THREADS, then the hardware count
};

struct SweepRow {
  double value = 0.0;
  double mean_latency_s = 0.0;
  double mean_energy_j = 0.0;
  double mean_reward = 0.0;
  double mean_q = 0.0;
};

// Grid points run concurrently, each in out_dir/point_<i>. Rows come back in
// grid order whatever the schedule. Also writes sweep.csv and
// latency_vs_<var>.csv. Throws invalid-range on an empty grid or eval seeds
// that collide with the training seed.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

int thread_budget(int requested);

// Reads run artifacts under run_dir and writes plot-ready CSVs to out_dir.
// Throws missing-artifact when run_dir has no manifest.json.
std::vector<std::string> emit_plotdata(const std::string& run_dir, const std::string& out_dir);

}  // namespace skyrescue::harness
