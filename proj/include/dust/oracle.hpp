#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "dust/problem.hpp"

namespace dust {

/// Centralized optimum of round t: minimize sum_i f_{i,t}(x_i) subject to
/// sum_i g_i(x_i) <= 0 and x_i in X_i.
struct RoundOptimum {
  int t = 0;
  std::vector<Vector> x;
  double value = 0.0;
  Vector mu;  // dual certificate
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SolveOptions {
  enum class Method {
    accelerated,  // projected dual gradient with Nesterov momentum, step 1/L
    diminishing,  // projected dual subgradient, step rho0 / sqrt(k)
  };
  Method method = Method::accelerated;
  double tol = 1e-6;
  int max_iter = 20000;
  double rho0 = 1.0;
  /// Optional starting multiplier, e.g. the previous round's certificate.
  Vector warm_start;
  /// When set, receives the dual value after every iteration.
  std::vector<double>* dual_trace = nullptr;
};

/// Blockwise minimizer of the Lagrangian at multiplier mu:
/// x_i = proj_{X_i}(-(b_{i,t} + A_i^T mu) / a_{i,t}).
/// Throws std::invalid_argument if some f_{i,t} is not a strongly convex
/// isotropic quadratic.
std::vector<Vector> lagrangian_argmin(const ProblemInstance& inst, int t, const Vector& mu);

/// Dual function value q_t(mu) = min_x L_t(x, mu).
double dual_value(const ProblemInstance& inst, int t, const Vector& mu);

/// ||mu - [mu + sum_i g_i(x_i(mu))]_+||_inf
double kkt_residual(const ProblemInstance& inst, const std::vector<Vector>& x, const Vector& mu);

/// Stops once kkt_residual <= tol; otherwise returns after max_iter with
/// converged = false.
RoundOptimum solve_round(const ProblemInstance& inst, int t, const SolveOptions& opts = {});

struct DualStep {
  std::vector<Vector> x;
  Vector mu;
};

/// x_{t} = argmin_x L_t(x, mu_{t-1}), mu_t = [mu_{t-1} + step * sum_i g_i(x_t)]_+
/// from mu_0 = 0, using each round's cost before committing: a clairvoyant
/// baseline. Entry k holds round k + 1.
std::vector<DualStep> clairvoyant_dual_subgradient(const ProblemInstance& inst, int horizon, double step = 1.0);

/// sum_{t=1..T} sqrt(t) sum_i ||x*_{i,t+1} - x*_{i,t}||. `optima` must hold
/// rounds 1..T+1 in order; throws std::invalid_argument otherwise.
double accumulated_variation(const std::vector<RoundOptimum>& optima, int horizon);

/// Running series V_1, ..., V_T under the same precondition.
std::vector<double> accumulated_variation_series(const std::vector<RoundOptimum>& optima, int horizon);

/// Thread-safe store of round optima keyed by (instance fingerprint, t).
class OptimaCache {
 public:
  explicit OptimaCache(SolveOptions opts = {}) : opts_(std::move(opts)) { opts_.dual_trace = nullptr; }

  std::shared_ptr<const RoundOptimum> get_or_solve(const ProblemInstance& inst, int t, const Vector& warm_start = {});
  std::size_t size() const;

 private:
  SolveOptions opts_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const RoundOptimum>> store_;
};

/// Optima for rounds 1..last. Rounds are solved in fixed blocks, each
/// warm-started along its own rounds, and blocks are spread over `jobs`
/// threads; the result does not depend on `jobs`.
std::vector<RoundOptimum> solve_rounds(const ProblemInstance& inst, int last, OptimaCache& cache, int jobs = 1);

/// CSV `t,f_star,kkt_residual,mu_star_norm`.
void write_optima_csv(std::ostream& out, const std::vector<RoundOptimum>& optima);

}  // namespace dust
