#pragma once

#include <string>
#include <vector>

#include "skyrescue/scenario.hpp"

namespace skyrescue::costmodel {

using scenario::PhysConstants;

struct Task {
  double data_bits = 0.0;
  double intensity_cycles_per_bit = 0.0;
  double deadline_s = 0.0;

  double cycles() const { return data_bits * intensity_cycles_per_bit; }
};

enum class TargetKind { local, ger, airship };

struct Target {
  TargetKind kind = TargetKind::local;
  int ger = -1;  // index into Scenario::gers when kind == ger

  friend bool operator==(const Target&, const Target&) = default;
};

// The variables one UAV commits to in a slot. local_fraction is the share
// processed on board; the rest goes to `target`.
struct SlotDecision {
  double local_fraction = 1.0;
  Target target;
  double alloc_flops = 0.0;
  double heading_rad = 0.0;
  double speed_mps = 0.0;
};

struct OffloadLatency {
  double t_tran_s = 0.0;
  double t_comp_s = 0.0;
  double t_ger_s = 0.0;
};

struct EnergyTerms {
  double e_tran_j = 0.0;
  double e_comp_j = 0.0;
  double e_prop_j = 0.0;
  double e_dete_j = 0.0;
  double e_total_j = 0.0;
};

struct SlotCost {
  double t_local_s = 0.0;
  double t_tran_s = 0.0;
  double t_comp_s = 0.0;
  double t_ger_s = 0.0;
  double t_total_s = 0.0;
  double e_tran_j = 0.0;
  double e_comp_j = 0.0;
  double e_prop_j = 0.0;
  double e_dete_j = 0.0;
  double e_total_j = 0.0;
};

double local_latency(const Task& task, double local_fraction, double uav_flops, double cycles_per_flop = 1.0);

// Throws zero-rate-offload / zero-alloc-offload when a non-zero share is sent
// over a dead link or to a node granting no compute.
OffloadLatency offload_latency(const Task& task, double local_fraction, double rate_bps, double alloc_flops,
                               double cycles_per_flop = 1.0);

// `literal_compute_energy` charges the whole task's cycles on board
// regardless of the split.
EnergyTerms slot_energy(const Task& task, double local_fraction, double t_tran_s, double uav_flops,
                        double speed_mps, const std::vector<std::vector<double>>& detect_distances,
                        const PhysConstants& k, bool literal_compute_energy = false);

SlotCost combine(double t_local_s, const OffloadLatency& off, const EnergyTerms& e);

double total_latency(const std::vector<SlotCost>& per_uav);

// Deadline checks: "local_deadline" when local processing overruns, "offload_deadline" when the
// offloaded share overruns.
std::vector<std::string> deadline_flags(const SlotCost& cost, const Task& task);

}  // namespace skyrescue::costmodel
