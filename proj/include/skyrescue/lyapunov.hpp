#pragma once

#include <cstddef>
#include <vector>

#include "skyrescue/error.hpp"

namespace skyrescue::lyapunov {

// Per-UAV virtual energy queue. `q_history` holds Q after each update and
// `y_history` the matching excess e - budget.
struct VirtualQueue {
  double q_value = 0.0;
  double budget_j = 0.0;
  double penalty_weight = 1.0;
  double theta = 0.0;
  std::vector<double> q_history;
  std::vector<double> y_history;
};

VirtualQueue make_queue(double budget_j, double penalty_weight, double initial_q = 0.0);

// Q' = max(Q + e - budget, 0). Throws invariant-violation for negative e.
VirtualQueue queue_update(const VirtualQueue& q, double e_total_j);
void queue_update_in_place(VirtualQueue& q, double e_total_j);

// V t + Q (e - budget); the bound constant is omitted since it cancels.
double per_slot_cost(const VirtualQueue& q, double t_total_s, double e_total_j);

template <class Decision>
struct Candidate {
  Decision decision;
  double t_total_s = 0.0;
  double e_total_j = 0.0;
};

// Index of the cheapest candidate; equal costs fall back to lower energy,
// then lower index. Throws empty-candidates.
template <class Decision>
std::size_t per_slot_argmin_index(const std::vector<Candidate<Decision>>& candidates, const VirtualQueue& q) {
  if (candidates.empty()) throw Error(ErrorKind::empty_candidates, "no per-slot candidates");
  std::size_t best = 0;
  double best_cost = per_slot_cost(q, candidates[0].t_total_s, candidates[0].e_total_j);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double c = per_slot_cost(q, candidates[i].t_total_s, candidates[i].e_total_j);
    if (c < best_cost || (c == best_cost && candidates[i].e_total_j < candidates[best].e_total_j)) {
      best = i;
      best_cost = c;
    }
  }
  return best;
}

template <class Decision>
const Decision& per_slot_argmin(const std::vector<Candidate<Decision>>& candidates, const VirtualQueue& q) {
  return candidates[per_slot_argmin_index(candidates, q)].decision;
}

struct StabilityReport {
  double q_over_t = 0.0;
  double mean_excess = 0.0;
  double theta = 0.0;
  std::size_t slots = 0;
};

// Needs at least two recorded slots; throws invalid-range otherwise.
StabilityReport stability_report(const std::vector<double>& q_history, const std::vector<double>& y_history);
StabilityReport stability_report(const VirtualQueue& q);

}  // namespace skyrescue::lyapunov
