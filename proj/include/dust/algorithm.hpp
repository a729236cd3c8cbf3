#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dust/graph.hpp"
#include "dust/problem.hpp"

namespace dust {

/// Local variables of one node: decision x, constraint tracker y, local
/// dual mu, push-sum weight c and the ratio-corrected dual lambda.
struct NodeState {
  Vector x;
  Vector y;
  Vector mu;
  Vector lambda;
  double weight = 1.0;
};

/// alpha_t = alpha_scale * t^alpha_power, eta_t = eta_scale * t^eta_power.
/// The defaults give alpha_t = sqrt(t), eta_t = t.
struct StepSchedule {
  double alpha_scale = 1.0;
  double alpha_power = 0.5;
  double eta_scale = 1.0;
  double eta_power = 1.0;

  double alpha(int t) const;
  double eta(int t) const;
  /// Throws std::invalid_argument unless both steps are positive and eta is
  /// nondecreasing.
  void check() const;
};

struct SwarmState {
  int round = 1;
  std::vector<NodeState> nodes;
  Vector constraint_sum;  // sum_i g_i(x_i)

  std::vector<Vector> decisions() const;
  Vector tracker_sum() const;
  double weight_sum() const;
  Vector mu_bar() const;
};

enum class InitKind { zero_projected, seeded_random_in_set, feasible_point };

InitKind parse_init_kind(std::string_view name);
std::string_view to_string(InitKind kind);

/// x_1 from `kind`, c = 1, mu = 0, y = g(x_1); lambda is stored as 0.
SwarmState initialize(const ProblemInstance& inst, InitKind kind, std::uint64_t seed = 0);

/// Raised when the state leaves the reals or the push-sum weights stop being
/// positive. Carries the round whose update failed.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(int round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}
  int round() const { return round_; }

 private:
  int round_;
};

/// argmin over X of alpha * s^T (x - x_t) + <lambda, g(x)> + eta ||x - x_t||^2.
/// For affine g the objective is an isotropic quadratic, so the minimizer is
/// the projection of x_t - (alpha s + A^T lambda) / (2 eta).
Vector local_argmin(const Vector& x_t, const Vector& subgrad, const Vector& lambda, const AffineConstraint& g,
                    const FeasibleSet& set, double alpha, double eta);

struct IterativeOptions {
  double tol = 1e-10;
  int max_iter = 10000;
};

/// Same subproblem by projected gradient with step 1/(4 eta). Throws
/// std::runtime_error if the iterates have not settled after max_iter steps.
Vector local_argmin_iterative(const Vector& x_t, const Vector& subgrad, const Vector& lambda,
                              const AffineConstraint& g, const FeasibleSet& set, double alpha, double eta,
                              const IterativeOptions& opts = {});

struct RoundOptions {
  /// Drop the g(x_new) - g(x_old) increment, leaving y to pure mixing.
  /// With y = 0 the duals then run plain ratio consensus.
  bool freeze_tracker = false;
};

/// Per-node quantities of a round that are not part of the next state.
struct RoundTrace {
  std::vector<Vector> mu_hat;  // sum_j w_ij mu_j
};

/// One synchronous round t -> t+1. Every mixing sum reads the round-t
/// snapshot. Throws NumericFailure if a weight is not positive or a value is
/// not finite, and std::invalid_argument on size mismatches.
SwarmState dust_round(const ProblemInstance& inst, const SwarmState& state, const MixingMatrix& w,
                      const StepSchedule& sched, const RoundOptions& opts = {}, RoundTrace* trace = nullptr);

/// Summary of the state at round t, i.e. of the decisions played in round t.
struct RoundSummary {
  int t = 0;
  Vector constraint_sum;
  Vector tracker_sum;
  double weight_sum = 0.0;
  double weight_min = 0.0;
  double mu_min = 0.0;
  double max_tracker_norm = 0.0;
  double learner_cost = 0.0;  // sum_i f_{i,t}(x_{i,t})
  Vector mu_bar;
  /// max_i and sum_i of ||lambda_{i,t} - mu_bar_{t-1}||, 0 in round 1.
  double consensus_error = 0.0;
  double consensus_error_sum = 0.0;
};

struct RunOptions {
  InitKind init = InitKind::zero_projected;
  std::uint64_t init_seed = 0;
  RoundOptions round{};
  /// Called with the state of every round 1..T before it is advanced.
  std::function<void(const SwarmState&)> on_state;
  bool keep_states = false;
};

struct Trajectory {
  std::vector<RoundSummary> rounds;  // rounds 1..T
  std::vector<SwarmState> states;    // rounds 1..T when keep_states
  SwarmState final_state;            // round T+1
  RoundSummary final_round;          // summary of final_state
  double empirical_r = 1.0;          // min_{i,t} c_{i,t} over rounds 1..T+1
  double max_tracker_norm = 0.0;
};

RoundSummary summarize(const ProblemInstance& inst, const SwarmState& state, const Vector& previous_mu_bar);

/// Runs T rounds from `initialize`. Errors carry the failing round.
Trajectory run(const ProblemInstance& inst, const GraphSequence& seq, const StepSchedule& sched, int horizon,
               const RunOptions& opts = {});

}  // namespace dust
