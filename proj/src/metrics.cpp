#include "dust/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "dust/text.hpp"

namespace dust {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// log(DBL_MAX) is about 709.78.
constexpr double kMaxLog = 709.0;

double exp_or_inf(double log_value, bool& overflow) {
  if (log_value > kMaxLog) {
    overflow = true;
    return kInf;
  }
  return std::exp(log_value);
}

// log(e^a + e^b)
double log_add(double a, double b) {
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

std::vector<double> dynamic_regret(const std::vector<double>& learner_cost, const std::vector<double>& optimal_cost) {
  if (learner_cost.size() != optimal_cost.size())
    throw std::invalid_argument("dynamic_regret: round count mismatch");
  std::vector<double> out(learner_cost.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    total += learner_cost[k] - optimal_cost[k];
    out[k] = total;
  }
  return out;
}

std::vector<double> dynamic_regret(const Trajectory& traj, const std::vector<RoundOptimum>& optima) {
  if (optima.size() < traj.rounds.size()) throw std::invalid_argument("dynamic_regret: missing optima");
  std::vector<double> learner, best;
  for (std::size_t k = 0; k < traj.rounds.size(); ++k) {
    if (optima[k].t != traj.rounds[k].t) throw std::invalid_argument("dynamic_regret: round mismatch");
    learner.push_back(traj.rounds[k].learner_cost);
    best.push_back(optima[k].value);
  }
  return dynamic_regret(learner, best);
}

std::vector<double> constraint_violation(const std::vector<Vector>& round_sums) {
  std::vector<double> out;
  out.reserve(round_sums.size());
  Vector total;
  for (const auto& g : round_sums) {
    if (total.size() == 0) total = Vector::Zero(g.size());
    total += g;
    out.push_back(total.cwiseMax(0.0).norm());
  }
  return out;
}

std::vector<double> constraint_violation(const Trajectory& traj) {
  std::vector<Vector> sums;
  sums.reserve(traj.rounds.size());
  for (const auto& r : traj.rounds) sums.push_back(r.constraint_sum);
  return constraint_violation(sums);
}

TheoryConstants theory_constants(int nodes, int coupling, int window, const ProblemBounds& bounds) {
  if (nodes < 1 || window < 1 || coupling < 0) throw std::invalid_argument("theory_constants: bad N, p or B");
  TheoryConstants c;
  c.N = nodes;
  c.p = coupling;
  c.B = window;
  c.a = 1.0 / nodes;
  c.R = bounds.R;
  c.F = bounds.F;
  c.G = bounds.G;

  const double N = nodes;
  const double nb = N * window;
  c.log_r_lower = -nb * std::log(N);
  c.r_lower = std::exp(c.log_r_lower);  // underflows to 0 silently; the log is kept

  if (nodes == 1) {
    // A single node mixes with itself only: r = 1 and the contraction is immediate.
    c.sigma_upper = 0.0;
    c.log_one_minus_sigma = 0.0;
  } else if (c.r_lower > 1e-300) {
    const double log_sigma = std::log1p(-c.r_lower) / nb;
    c.sigma_upper = std::exp(log_sigma);
    c.log_one_minus_sigma = std::log(-std::expm1(log_sigma));
  } else {
    // 1 - (1 - r)^{1/(NB)} = r / (NB) to first order once r is this small.
    c.sigma_upper = 1.0;
    c.log_one_minus_sigma = c.log_r_lower - std::log(nb);
  }

  // B_y = (8 N^2 F sqrt(p) / r)(1 + 2/(1 - sigma)) + (N + 2) F
  const double tail = (N + 2.0) * c.F;
  if (c.F > 0.0 && coupling > 0) {
    const double log_front = std::log(8.0 * N * N * c.F * std::sqrt(static_cast<double>(coupling))) - c.log_r_lower;
    const double log_factor = log_add(0.0, std::log(2.0) - c.log_one_minus_sigma);
    c.log_B_y = log_add(log_front + log_factor, std::log(tail));
  } else {
    c.log_B_y = tail > 0.0 ? std::log(tail) : -kInf;
  }
  c.B_y = exp_or_inf(c.log_B_y, c.overflow);

  c.log_sensitivity = 6.0 * std::log(N) - 3.0 * c.log_r_lower - 3.0 * c.log_one_minus_sigma;
  c.sensitivity = exp_or_inf(c.log_sensitivity, c.overflow);
  return c;
}

TheoryConstants theory_constants(const ProblemInstance& inst, int window) {
  return theory_constants(inst.size(), inst.coupling_dim(), window, bound_constants(inst));
}

double TheoryConstants::consensus_envelope(int t) const {
  if (t < 1) return 0.0;
  if (p == 0 || !(log_B_y > -kInf)) return 0.0;
  // sum_{k=1..t} sigma^{t-k} = (1 - sigma^t) / (1 - sigma)
  double log_geometric;
  if (sigma_upper == 0.0) {
    log_geometric = 0.0;
  } else if (sigma_upper < 1.0) {
    const double log_sigma = std::log(sigma_upper);
    log_geometric = std::log(-std::expm1(t * log_sigma)) - log_one_minus_sigma;
  } else {
    log_geometric = std::log(static_cast<double>(t));  // sigma rounds to 1
  }
  const double log_env = std::log(8.0 * N * N * std::sqrt(static_cast<double>(p))) + log_B_y - log_r_lower + log_geometric;
  return log_env > kMaxLog ? kInf : std::exp(log_env);
}

std::vector<ConsensusPoint> consensus_diagnostics(const Trajectory& traj, const TheoryConstants& constants) {
  std::vector<ConsensusPoint> out;
  const int horizon = static_cast<int>(traj.rounds.size());
  out.reserve(horizon);
  for (int t = 1; t <= horizon; ++t) {
    // The gap between lambda_{t+1} and mu_bar_t is logged with round t+1.
    const RoundSummary& next = t < horizon ? traj.rounds[t] : traj.final_round;
    out.push_back({t, next.consensus_error, next.consensus_error_sum, constants.consensus_envelope(t)});
  }
  return out;
}

std::vector<RunRecord> build_records(const Trajectory& traj, const std::vector<RoundOptimum>* optima) {
  const int horizon = static_cast<int>(traj.rounds.size());
  const std::vector<double> violation = constraint_violation(traj);
  std::vector<double> regret, variation;
  if (optima) {
    regret = dynamic_regret(traj, *optima);
    variation = accumulated_variation_series(*optima, horizon);
  }

  std::vector<RunRecord> records(horizon);
  for (int k = 0; k < horizon; ++k) {
    RunRecord& r = records[k];
    const RoundSummary& s = traj.rounds[k];
    r.t = s.t;
    if (optima) {
      r.cum_regret = regret[k];
      r.avg_regret = regret[k] / s.t;
      r.V_t = variation[k];
    }
    r.cum_violation = violation[k];
    r.avg_violation = violation[k] / s.t;
    r.consensus_err = s.consensus_error;
    r.mu_bar_norm = s.mu_bar.norm();
  }
  return records;
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "t,cum_regret,avg_regret,cum_violation,avg_violation,V_t,consensus_err,mu_bar_norm\n";
  for (const auto& r : records) {
    out << r.t << ',' << opt(r.cum_regret) << ',' << opt(r.avg_regret) << ',' << format_double(r.cum_violation) << ','
        << format_double(r.avg_violation) << ',' << opt(r.V_t) << ',' << format_double(r.consensus_err) << ','
        << format_double(r.mu_bar_norm) << '\n';
  }
}

double loglog_slope(const std::vector<double>& t, const std::vector<double>& value) {
  if (t.size() != value.size() || t.size() < 2) throw std::invalid_argument("loglog_slope needs two matching series");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] > 0.0) || !(value[k] > 0.0)) throw std::invalid_argument("loglog_slope needs positive values");
    const double x = std::log(t[k]), y = std::log(value[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dust
