#include "skyrescue/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "skyrescue/error.hpp"

namespace skyrescue::assignment {

Eigen::MatrixXd normalize_minmax(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return m;
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (!(hi > lo)) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  return (m.array() - lo) / (hi - lo);
}

Eigen::MatrixXd combine_terms(const CostTerms& t, bool normalized) {
  if (!normalized) return t.distance + t.data + t.intensity - t.energy - t.ger_power;
  return normalize_minmax(t.distance) + normalize_minmax(t.data) + normalize_minmax(t.intensity) -
         normalize_minmax(t.energy) - normalize_minmax(t.ger_power);
}

CostTerms cost_terms(const Scenario& scn, const std::vector<UavStatus>& uavs, const std::vector<int>& subareas) {
  const auto rows = static_cast<Eigen::Index>(uavs.size());
  const auto cols = static_cast<Eigen::Index>(subareas.size());
  CostTerms t;
  t.distance.resize(rows, cols);
  t.data.resize(rows, cols);
  t.intensity.resize(rows, cols);
  t.energy.resize(rows, cols);
  t.ger_power.resize(rows, cols);
  for (Eigen::Index u = 0; u < rows; ++u) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& sub = scn.subareas.at(static_cast<std::size_t>(subareas[static_cast<std::size_t>(c)]));
      t.distance(u, c) = distance(uavs[static_cast<std::size_t>(u)].position, sub.center());
      t.data(u, c) = sub.data_bits;
      t.intensity(u, c) = sub.intensity_cycles_per_bit;
      t.energy(u, c) = uavs[static_cast<std::size_t>(u)].energy_remaining_j;
      t.ger_power(u, c) = sub.mean_ger_flops;
    }
  }
  return t;
}

CostMatrix build_cost_matrix(const Scenario& scn, const std::vector<UavStatus>& uavs,
                             const std::vector<int>& remaining_subareas, bool normalized) {
  if (remaining_subareas.empty()) throw Error(ErrorKind::cardinality_mismatch, "no subareas left to assign");
  CostMatrix m;
  m.columns = remaining_subareas;
  m.cost = combine_terms(cost_terms(scn, uavs, remaining_subareas), normalized);
  return m;
}

Solution hungarian_solve(const Eigen::MatrixXd& a) {
  const auto n = static_cast<int>(a.rows());
  const auto m = static_cast<int>(a.cols());
  if (n > m)
    throw Error(ErrorKind::cardinality_mismatch,
                "more rows (" + std::to_string(n) + ") than columns (" + std::to_string(m) + ")");
  if (!a.allFinite()) throw Error(ErrorKind::infeasible, "cost matrix has non-finite entries");

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based labels; index 0 is the virtual root of each augmenting search.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) u[i] = a.row(i - 1).minCoeff();

  std::vector<double> minv(static_cast<std::size_t>(m) + 1);
  std::vector<char> used(static_cast<std::size_t>(m) + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta || (minv[j] == delta && p[j] == 0 && p[j1] != 0)) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Solution s;
  s.column_of_row.assign(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) s.column_of_row[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  for (int i = 0; i < n; ++i) s.total_cost += a(i, s.column_of_row[static_cast<std::size_t>(i)]);
  s.row_labels.resize(n);
  s.col_labels.resize(m);
  for (int i = 0; i < n; ++i) s.row_labels(i) = u[static_cast<std::size_t>(i) + 1];
  for (int j = 0; j < m; ++j) s.col_labels(j) = v[static_cast<std::size_t>(j) + 1];
  return s;
}

double round_energy_estimate(const Scenario& scn, int uav, int subarea) {
  const auto& spec = scn.uavs.at(static_cast<std::size_t>(uav));
  const auto& sub = scn.subareas.at(static_cast<std::size_t>(subarea));
  const auto& k = scn.consts;
  const double slots = scn.time.slots_per_round;
  const double prop = slots * k.propulsion_coeff * spec.speed_max_mps * spec.speed_max_mps;
  const double cycles = sub.data_bits / std::max(1, scn.time.rounds) * sub.intensity_cycles_per_bit;
  const double comp = k.capacitance_coeff * spec.compute_flops * spec.compute_flops * cycles;
  return prop + comp;
}

std::vector<RoundAssignment> assign_rounds(const Scenario& scn, std::vector<UavStatus> uavs,
                                           const AssignOptions& options) {
  const int n_uav = static_cast<int>(uavs.size());
  const int rounds = scn.time.rounds;
  if (n_uav < 1 || static_cast<int>(scn.subareas.size()) != n_uav * rounds)
    throw Error(ErrorKind::cardinality_mismatch,
                std::to_string(scn.subareas.size()) + " subareas for " + std::to_string(n_uav) + " UAVs x " +
                    std::to_string(rounds) + " rounds");

  std::vector<int> remaining(scn.subareas.size());
  for (std::size_t b = 0; b < remaining.size(); ++b) remaining[b] = static_cast<int>(b);

  std::vector<RoundAssignment> out;
  for (int r = 0; r < rounds; ++r) {
    RoundAssignment ra;
    ra.round = r;
    ra.subarea_of_uav.assign(static_cast<std::size_t>(n_uav), -1);
    ra.cost_of_uav.assign(static_cast<std::size_t>(n_uav), 0.0);
    const CostMatrix cm = build_cost_matrix(scn, uavs, remaining, options.normalized);
    if (options.mode == Mode::hungarian) {
      const Solution sol = hungarian_solve(cm.cost);
      for (int u = 0; u < n_uav; ++u) {
        const int col = sol.column_of_row[static_cast<std::size_t>(u)];
        ra.subarea_of_uav[static_cast<std::size_t>(u)] = cm.columns[static_cast<std::size_t>(col)];
        ra.cost_of_uav[static_cast<std::size_t>(u)] = cm.cost(u, col);
      }
    } else {
      for (int u = 0; u < n_uav; ++u) {
        const int b = r * n_uav + u;
        const auto col = std::find(cm.columns.begin(), cm.columns.end(), b) - cm.columns.begin();
        ra.subarea_of_uav[static_cast<std::size_t>(u)] = b;
        ra.cost_of_uav[static_cast<std::size_t>(u)] = cm.cost(u, col);
      }
    }
    for (int u = 0; u < n_uav; ++u) {
      const int b = ra.subarea_of_uav[static_cast<std::size_t>(u)];
      ra.total_cost += ra.cost_of_uav[static_cast<std::size_t>(u)];
      remaining.erase(std::find(remaining.begin(), remaining.end(), b));
      uavs[static_cast<std::size_t>(u)].position = scn.subareas[static_cast<std::size_t>(b)].center();
      uavs[static_cast<std::size_t>(u)].energy_remaining_j -= round_energy_estimate(scn, u, b);
    }
    out.push_back(std::move(ra));
  }
  return out;
}

}  // namespace skyrescue::assignment
