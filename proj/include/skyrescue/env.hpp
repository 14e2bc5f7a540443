#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skyrescue/assignment.hpp"
#include "skyrescue/costmodel.hpp"
#include "skyrescue/kinematics.hpp"
#include "skyrescue/lyapunov.hpp"
#include "skyrescue/rng.hpp"
#include "skyrescue/scenario.hpp"

namespace skyrescue::env {

using Eigen::VectorXd;
using scenario::Scenario;

enum class AllocationMode { equal, proportional };

struct EnvConfig {
  double V = 1.0;
  double reward_scale = 10.0;
  double penalty = 5.0;
  AllocationMode allocation = AllocationMode::equal;
  bool literal_compute_energy = false;
  int max_gers = 0;  // 0 derives the largest per-subarea GER count
  assignment::Mode assignment_mode = assignment::Mode::hungarian;
  bool normalized_assignment = true;
  double task_jitter = 0.2;
  // Keep virtual queues (value and history) across reset(); used for long
  // stability runs that span many missions.
  bool keep_queues = false;
};

// Layout: [x/W, y/H, H/airship_alt, f_u/f_norm] then per GER slot
// [x/W, y/H, f_j/f_norm], zero for padding. `mask` marks live GER slots.
struct Observation {
  VectorXd features;
  VectorXd mask;
};

// Legal entries of the target part of a raw action: [local, ger slots..., airship].
struct ActionMask {
  std::vector<char> allowed;
};

struct AgentAction {
  int target_index = 0;  // 0 local, 1..max_gers GER slot, max_gers + 1 airship
  double ratio = 0.0;    // offloaded share after clamping
  double local_fraction = 1.0;
  costmodel::Target target;
};

struct UavState {
  kinematics::UavKinState kin;
  double energy_remaining_j = 0.0;
  lyapunov::VirtualQueue queue;
  double flown_m = 0.0;
};

struct SlotRecord {
  int episode = 0;
  int slot = 0;  // 0-based within the episode
  int round = 0;
  int uav = 0;
  int subarea = -1;
  AgentAction action;
  costmodel::SlotDecision decision;
  costmodel::SlotCost cost;
  costmodel::Task task;
  double rate_bps = 0.0;
  double reward = 0.0;
  double q_before = 0.0;
  double q_after = 0.0;
  double y = 0.0;
  std::vector<std::string> flags;
  bool infeasible = false;
  double penalty = 0.0;
  Vec2 position_before;
  Vec2 position_after;
  double heading_rad = 0.0;
  double speed_mps = 0.0;
  bool airship_allowed = false;
};

struct Transition {
  VectorXd obs;
  VectorXd action;
  VectorXd mask;  // action mask as 0/1, length act_dim - 1
  double reward = 0.0;
  VectorXd next_obs;
  VectorXd next_mask;
  int agent = 0;
  bool done = false;
};

struct GerUsage {
  int ger = 0;
  double max_flops = 0.0;
  double remaining_flops = 0.0;
};

struct StepResult {
  std::vector<Transition> transitions;
  std::vector<SlotRecord> records;
  std::vector<GerUsage> resource_map;
  bool episode_done = false;
};

// Cost of one hypothetical choice for one UAV this slot, without mutating
// the world. Channel draws use the same substreams as step().
struct CandidateEval {
  costmodel::SlotDecision decision;
  costmodel::SlotCost cost;
  std::vector<std::string> flags;
  double rate_bps = 0.0;
};

class World {
 public:
  World(std::shared_ptr<const Scenario> scn, EnvConfig cfg, std::uint64_t seed);

  void reset(int episode);

  const Scenario& scenario() const { return *scn_; }
  const EnvConfig& config() const { return cfg_; }
  EnvConfig& mutable_config() { return cfg_; }
  int max_gers() const { return max_gers_; }
  int obs_dim() const { return 4 + 3 * max_gers_; }
  int act_dim() const { return max_gers_ + 3; }
  int uav_count() const { return static_cast<int>(uavs_.size()); }
  int episode() const { return episode_; }
  int slot() const { return slot_; }
  int round() const { return slot_ / scn_->time.slots_per_round; }
  bool done() const { return slot_ >= scn_->time.slots_per_episode(); }
  std::uint64_t seed() const { return seed_; }

  const UavState& uav(int u) const { return uavs_.at(static_cast<std::size_t>(u)); }
  UavState& mutable_uav(int u) { return uavs_.at(static_cast<std::size_t>(u)); }
  const std::vector<assignment::RoundAssignment>& plan() const { return plan_; }
  void set_plan(std::vector<assignment::RoundAssignment> plan) { plan_ = std::move(plan); }

  // Subarea index assigned to `u` in the current round; throws unassigned-agent.
  int subarea_of(int u) const;
  // Scenario GER indices of the subarea, in scenario order.
  const std::vector<int>& gers_of_subarea(int b) const;

  costmodel::Task task(int u) const;
  Observation observe(int u) const;
  ActionMask action_mask(int u) const;
  // Throws length-mismatch unless raw has act_dim() entries.
  AgentAction decode_and_mask(const VectorXd& raw, int u) const;
  // Raw vector that decodes to the given target and local fraction.
  VectorXd encode(int u, const costmodel::Target& target, double local_fraction) const;

  CandidateEval evaluate_candidate(int u, const costmodel::Target& target, double local_fraction) const;

  // Throws action-count-mismatch unless one raw action per UAV is given.
  StepResult step(const std::vector<VectorXd>& raw_actions);

 private:
  struct Outcome {
    kinematics::UavKinState kin;
    costmodel::SlotDecision decision;
    costmodel::SlotCost cost;
    std::vector<std::string> flags;
    double rate_bps = 0.0;
  };

  Outcome simulate(int u, const costmodel::Target& target, double local_fraction, double alloc_flops) const;
  Vec2 target_position(int u, const costmodel::Target& target) const;
  double demand_flops(int u) const;

  std::shared_ptr<const Scenario> scn_;
  EnvConfig cfg_;
  std::uint64_t seed_;
  int max_gers_ = 0;
  double flops_norm_ = 1.0;
  std::vector<std::vector<int>> gers_by_sub_;
  std::vector<UavState> uavs_;
  std::vector<assignment::RoundAssignment> plan_;
  int episode_ = 0;
  int slot_ = 0;
};

// Discrete-target policy used by rollouts; must be callable concurrently.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual VectorXd act(const World& world, int uav, const Observation& obs, Rng& rng) const = 0;
  virtual std::string name() const = 0;
};

class RandomPolicy : public Policy {
 public:
  VectorXd act(const World& world, int uav, const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "random"; }
};

class GreedyLocalPolicy : public Policy {
 public:
  VectorXd act(const World& world, int uav, const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "greedy-local"; }
};

// Candidate set: every legal target crossed with a grid of local fractions
// (local processing always uses fraction 1).
std::vector<lyapunov::Candidate<costmodel::SlotDecision>> enumerate_candidates(const World& world, int uav,
                                                                             const std::vector<double>& grid);
std::vector<double> fraction_grid(int points);

// Drift-plus-penalty controller: per-slot argmin over enumerate_candidates.
class LyapunovPolicy : public Policy {
 public:
  explicit LyapunovPolicy(int grid_points = 11) : grid_(fraction_grid(grid_points)) {}
  VectorXd act(const World& world, int uav, const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "lyapunov"; }

 private:
  std::vector<double> grid_;
};

// Picks the lowest-energy candidate (lower latency on ties).
class MinEnergyPolicy : public Policy {
 public:
  explicit MinEnergyPolicy(int grid_points = 11) : grid_(fraction_grid(grid_points)) {}
  VectorXd act(const World& world, int uav, const Observation& obs, Rng& rng) const override;
  std::string name() const override { return "min-energy"; }

 private:
  std::vector<double> grid_;
};

struct EpisodeMetrics {
  int episode = 0;
  double mean_reward = 0.0;
  double mean_latency_s = 0.0;
  double mean_energy_j = 0.0;
  double mean_q = 0.0;
  std::vector<double> final_q;
  int violations = 0;
  int infeasible_slots = 0;
};

struct EpisodeResult {
  std::vector<Transition> transitions;
  std::vector<SlotRecord> records;
  std::vector<std::vector<GerUsage>> resource_maps;
  EpisodeMetrics metrics;
};

EpisodeMetrics summarize(int episode, const std::vector<SlotRecord>& records, const World& world);

// Resets the world for `episode`, then steps until done. `policies` holds
// one entry per UAV or a single shared policy.
EpisodeResult run_episode(World& world, int episode, const std::vector<const Policy*>& policies, Rng& rng);

// Independent re-check of logged slots: counts decisions breaking a static
// constraint without a flag, and mobility violations missing from the log or
// recorded without a penalty.
struct AuditReport {
  int records = 0;
  int unflagged_static = 0;  // offload, allocation, deadline, capacity
  int unlogged_mobility = 0;  // step length, path length, separation
  int mobility_violations = 0;
  std::vector<std::string> problems;
};

AuditReport audit_records(const Scenario& scn, const std::vector<SlotRecord>& records);
void merge(AuditReport& into, const AuditReport& from);

}  // namespace skyrescue::env
