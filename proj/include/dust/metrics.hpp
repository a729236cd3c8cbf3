#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dust/algorithm.hpp"
#include "dust/oracle.hpp"
#include "dust/problem.hpp"

namespace dust {

/// One CSV row. Regret and V_t are absent when optima were not computed.
struct RunRecord {
  int t = 0;
  std::optional<double> cum_regret;
  std::optional<double> avg_regret;
  double cum_violation = 0.0;
  double avg_violation = 0.0;
  std::optional<double> V_t;
  double consensus_err = 0.0;
  double mu_bar_norm = 0.0;
};

/// Running Reg(t) = sum_{s<=t} (learner_cost_s - optimal_cost_s). Not clamped.
/// Throws std::invalid_argument if the series lengths differ.
std::vector<double> dynamic_regret(const std::vector<double>& learner_cost, const std::vector<double>& optimal_cost);
std::vector<double> dynamic_regret(const Trajectory& traj, const std::vector<RoundOptimum>& optima);

/// Running Reg^c(t) = ||[sum_{s<=t} sum_i g_i(x_{i,s})]_+||: the positive part
/// is taken after summing over time.
std::vector<double> constraint_violation(const std::vector<Vector>& round_sums);
std::vector<double> constraint_violation(const Trajectory& traj);

/// Worst-case constants of the network analysis. All of them explode with
/// N*B, so they are carried in log space as well; a value that does not fit
/// in a double is +inf with `overflow` set.
struct TheoryConstants {
  int N = 0;
  int p = 0;
  int B = 0;
  double a = 0.0;  // weight floor
  double R = 0.0;
  double F = 0.0;
  double G = 0.0;
  double r_lower = 0.0;      // N^{-NB}
  double sigma_upper = 0.0;  // (1 - r_lower)^{1/(NB)}
  double B_y = 0.0;
  double sensitivity = 0.0;  // N^6 / (r^3 (1 - sigma)^3)
  double log_r_lower = 0.0;
  double log_one_minus_sigma = 0.0;
  double log_B_y = 0.0;
  double log_sensitivity = 0.0;
  bool overflow = false;

  /// (8 N^2 B_y sqrt(p) / r) * sum_{k=1..t} sigma^{t-k}; bounds
  /// sum_i ||mu_bar_t - lambda_{i,t+1}||.
  double consensus_envelope(int t) const;
};

TheoryConstants theory_constants(int nodes, int coupling, int window, const ProblemBounds& bounds);
TheoryConstants theory_constants(const ProblemInstance& inst, int window);

struct ConsensusPoint {
  int t = 0;
  double observed_max = 0.0;  // max_i ||mu_bar_t - lambda_{i,t+1}||
  double observed_sum = 0.0;  // sum_i of the same
  double envelope = 0.0;
};

/// Rounds 1..T of the run against the envelope.
std::vector<ConsensusPoint> consensus_diagnostics(const Trajectory& traj, const TheoryConstants& constants);

/// `optima`, when given, must cover rounds 1..T+1.
std::vector<RunRecord> build_records(const Trajectory& traj, const std::vector<RoundOptimum>* optima);

/// Header `t,cum_regret,avg_regret,cum_violation,avg_violation,V_t,consensus_err,mu_bar_norm`;
/// absent values are written as empty fields.
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);

/// Least-squares slope of log(value) against log(t).
double loglog_slope(const std::vector<double>& t, const std::vector<double>& value);

}  // namespace dust
