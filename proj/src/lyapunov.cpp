#include "skyrescue/lyapunov.hpp"

#include <algorithm>
#include <string>

namespace skyrescue::lyapunov {

VirtualQueue make_queue(double budget_j, double penalty_weight, double initial_q) {
  VirtualQueue q;
  q.q_value = std::max(0.0, initial_q);
  q.budget_j = budget_j;
  q.penalty_weight = penalty_weight;
  return q;
}

void queue_update_in_place(VirtualQueue& q, double e_total_j) {
  if (!(e_total_j >= 0.0))
    throw Error(ErrorKind::invariant_violation, "slot energy must be non-negative, got " + std::to_string(e_total_j));
  const double y = e_total_j - q.budget_j;
  q.q_value = std::max(q.q_value + y, 0.0);
  q.q_history.push_back(q.q_value);
  q.y_history.push_back(y);
}

VirtualQueue queue_update(const VirtualQueue& q, double e_total_j) {
  VirtualQueue next = q;
  queue_update_in_place(next, e_total_j);
  return next;
}

double per_slot_cost(const VirtualQueue& q, double t_total_s, double e_total_j) {
  return q.penalty_weight * t_total_s + q.q_value * (e_total_j - q.budget_j);
}

StabilityReport stability_report(const std::vector<double>& q_history, const std::vector<double>& y_history) {
  if (q_history.size() < 2 || y_history.size() != q_history.size())
    throw Error(ErrorKind::invalid_range, "stability report needs at least two matching slots");
  StabilityReport r;
  r.slots = q_history.size();
  r.q_over_t = q_history.back() / static_cast<double>(r.slots);
  double s = 0.0;
  for (double y : y_history) s += y;
  r.mean_excess = s / static_cast<double>(r.slots);
  return r;
}

StabilityReport stability_report(const VirtualQueue& q) { return stability_report(q.q_history, q.y_history); }

}  // namespace skyrescue::lyapunov
