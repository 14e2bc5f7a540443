#pragma once

#include <vector>

#include <Eigen/Dense>

#include "skyrescue/geometry.hpp"
#include "skyrescue/scenario.hpp"

namespace skyrescue::assignment {

using scenario::Scenario;

// What the area selector needs to know about each UAV.
struct UavStatus {
  Vec2 position;
  double energy_remaining_j = 0.0;
};

// One matrix per cost term, rows = UAVs, cols = candidate subareas.
struct CostTerms {
  Eigen::MatrixXd distance;
  Eigen::MatrixXd data;
  Eigen::MatrixXd intensity;
  Eigen::MatrixXd energy;
  Eigen::MatrixXd ger_power;
};

struct CostMatrix {
  Eigen::MatrixXd cost;
  std::vector<int> columns;  // subarea index for each column
  Eigen::VectorXd row_labels;
  Eigen::VectorXd col_labels;
};

// Min-max scaling to [0, 1] over the whole matrix; a constant matrix maps to 0.
Eigen::MatrixXd normalize_minmax(const Eigen::MatrixXd& m);

// distance + data + intensity - energy - ger_power, each term optionally
// normalized first.
Eigen::MatrixXd combine_terms(const CostTerms& terms, bool normalized);

CostTerms cost_terms(const Scenario& scn, const std::vector<UavStatus>& uavs, const std::vector<int>& subareas);

CostMatrix build_cost_matrix(const Scenario& scn, const std::vector<UavStatus>& uavs,
                             const std::vector<int>& remaining_subareas, bool normalized = true);

struct Solution {
  std::vector<int> column_of_row;
  double total_cost = 0.0;
  Eigen::VectorXd row_labels;  // alpha
  Eigen::VectorXd col_labels;  // beta
};

// Shortest-augmenting-path Hungarian method with row labels started at the
// row minima. Requires rows <= cols and finite entries (else infeasible /
// cardinality-mismatch). Among equally short augmenting paths a free column
// is preferred, then the lowest column index.
Solution hungarian_solve(const Eigen::MatrixXd& cost);

enum class Mode { hungarian, round_robin };

struct RoundAssignment {
  int round = 0;
  std::vector<int> subarea_of_uav;  // subarea index per UAV
  std::vector<double> cost_of_uav;
  double total_cost = 0.0;
};

struct AssignOptions {
  Mode mode = Mode::hungarian;
  bool normalized = true;
};

// Expected energy of covering subarea `b` for one round: hover-speed
// propulsion plus all-local compute of the round's share of D_b.
double round_energy_estimate(const Scenario& scn, int uav, int subarea);

// Solves one round at a time on the shrinking set of subareas. Between rounds
// each UAV is moved to its subarea center and charged round_energy_estimate.
// Throws cardinality-mismatch unless |subareas| = |uavs| x rounds.
std::vector<RoundAssignment> assign_rounds(const Scenario& scn, std::vector<UavStatus> uavs,
                                           const AssignOptions& options = {});

}  // namespace skyrescue::assignment
