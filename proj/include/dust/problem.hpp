#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dust/rng.hpp"

namespace dust {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Compact convex local set with a closed-form Euclidean projection.
///
/// `capped_box` is the box lo <= x <= hi intersected with the half-space
/// sum(x) >= min_total. It models a charging-rate box together with an
/// energy demand; its projection is exact (breakpoint search on the
/// multiplier of the sum constraint).
class FeasibleSet {
 public:
  enum class Kind { box, ball, capped_box };

  static FeasibleSet box(Vector lo, Vector hi);
  static FeasibleSet ball(Vector center, double radius);
  static FeasibleSet capped_box(Vector lo, Vector hi, double min_total);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(a_.size()); }

  const Vector& lo() const { return a_; }
  const Vector& hi() const { return b_; }
  const Vector& center() const { return a_; }
  double radius() const { return scalar_; }
  double min_total() const { return scalar_; }

  /// Throws std::invalid_argument on dimension mismatch.
  Vector project(const Vector& z) const;
  bool contains(const Vector& x, double tol = 1e-12) const;

  /// Exact for boxes and balls; for capped boxes the diameter of the
  /// enclosing box, which is an upper bound.
  double diameter() const;
  /// max ||x|| over the set.
  double max_norm() const;
  /// (min, max) of w^T x over the set. Exact for every kind.
  std::pair<double, double> linear_range(const Vector& w) const;

  /// Seeded point in the set (uniform in the box or ball, then projected).
  Vector sample(CounterRng& rng) const;

  friend bool operator==(const FeasibleSet& a, const FeasibleSet& b);

 private:
  FeasibleSet(Kind kind, Vector a, Vector b, double scalar)
      : kind_(kind), a_(std::move(a)), b_(std::move(b)), scalar_(scalar) {}

  Kind kind_;
  Vector a_;  // lo or center
  Vector b_;  // hi (empty for balls)
  double scalar_;
};

/// Affine coupling term g_i(x) = A x + b, with p rows.
struct AffineConstraint {
  Matrix A;
  Vector b;

  int rows() const { return static_cast<int>(A.rows()); }
  Vector operator()(const Vector& x) const { return A * x + b; }
  /// Same value, evaluated one row dot product at a time.
  Vector eval_by_rows(const Vector& x) const;
  /// Gradient of <lambda, g(x)> with respect to x.
  Vector weighted_gradient(const Vector& lambda) const { return A.transpose() * lambda; }
};

struct CostValue {
  double value = 0.0;
  Vector subgradient;
};

/// f(x) = (curvature / 2) ||x||^2 + linear^T x.
struct QuadraticCoeffs {
  double curvature = 0.0;
  Vector linear;
};

/// Time-varying local costs f_{i,t}. Implementations are pure functions of
/// (node, round, x) and may be called concurrently.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual CostValue evaluate(int node, int t, const Vector& x) const = 0;
  /// Coefficients when f_{i,t} is an isotropic quadratic, else nullopt.
  virtual std::optional<QuadraticCoeffs> quadratic(int /*node*/, int /*t*/) const { return std::nullopt; }
  /// Upper bound on ||subgradient|| over the set, uniform in t.
  virtual double subgradient_bound(int node, const FeasibleSet& set) const = 0;
  virtual std::string family() const = 0;
  /// Body of the `cost` section of the instance text format.
  virtual void write(std::ostream& out) const = 0;
};

/// Charging cost (a_{i,t}/2)||x||^2 + b_{i,t}^T x, coefficients drawn per
/// (seed, node, round) with a ~ U[a_lo, a_hi] and b ~ U(b_lo, b_hi]^d.
class PevQuadraticCost final : public CostModel {
 public:
  struct Ranges {
    double a_lo = 0.5;
    double a_hi = 1.0;
    double b_lo = 0.0;
    double b_hi = 1.0;
  };

  PevQuadraticCost(std::uint64_t seed, std::vector<int> dims, Ranges ranges);
  PevQuadraticCost(std::uint64_t seed, std::vector<int> dims) : PevQuadraticCost(seed, std::move(dims), Ranges{}) {}

  QuadraticCoeffs coeffs(int node, int t) const;
  CostValue evaluate(int node, int t, const Vector& x) const override;
  std::optional<QuadraticCoeffs> quadratic(int node, int t) const override { return coeffs(node, t); }
  double subgradient_bound(int node, const FeasibleSet& set) const override;
  std::string family() const override { return "quadratic_pev"; }
  void write(std::ostream& out) const override;

  std::uint64_t seed() const { return seed_; }
  const Ranges& ranges() const { return ranges_; }

 private:
  std::uint64_t seed_;
  std::vector<int> dims_;
  Ranges ranges_;
};

/// Explicit quadratic coefficients: table[i] lists node i's rounds, and
/// round t uses entry (t-1) mod table[i].size().
class TableQuadraticCost final : public CostModel {
 public:
  explicit TableQuadraticCost(std::vector<std::vector<QuadraticCoeffs>> table);

  CostValue evaluate(int node, int t, const Vector& x) const override;
  std::optional<QuadraticCoeffs> quadratic(int node, int t) const override;
  double subgradient_bound(int node, const FeasibleSet& set) const override;
  std::string family() const override { return "table"; }
  void write(std::ostream& out) const override;

  const std::vector<std::vector<QuadraticCoeffs>>& table() const { return table_; }

 private:
  std::vector<std::vector<QuadraticCoeffs>> table_;
};

/// f_{i,t}(x) = sum_k w_{i,k} |x_k - c_{i,t,k}| with targets c drawn per
/// (seed, node, round) from U[target_lo, target_hi). At a kink the
/// subgradient component is 0, the zero element of [-w, w].
class PiecewiseLinearCost final : public CostModel {
 public:
  PiecewiseLinearCost(std::uint64_t seed, std::vector<Vector> weights, double target_lo, double target_hi);

  Vector targets(int node, int t) const;
  CostValue evaluate(int node, int t, const Vector& x) const override;
  double subgradient_bound(int node, const FeasibleSet& set) const override;
  std::string family() const override { return "piecewise_linear"; }
  void write(std::ostream& out) const override;

  std::uint64_t seed() const { return seed_; }
  const std::vector<Vector>& weights() const { return weights_; }
  double target_lo() const { return target_lo_; }
  double target_hi() const { return target_hi_; }

 private:
  std::uint64_t seed_;
  std::vector<Vector> weights_;
  double target_lo_;
  double target_hi_;
};

struct NodeProblem {
  FeasibleSet set;
  AffineConstraint constraint;
};

/// Interior witness x_hat with sum_i g_i(x_hat_i) <= -margin * 1.
struct SlaterCertificate {
  std::vector<Vector> witness;
  double margin = 0.0;
};

/// Online problem: minimize sum_i f_{i,t}(x_i) subject to
/// sum_i g_i(x_i) <= 0 and x_i in X_i, for every round t.
class ProblemInstance {
 public:
  /// Throws std::invalid_argument if the dimensions disagree or the stored
  /// feasible point (and Slater witness, when given) fail their checks.
  ProblemInstance(std::vector<NodeProblem> nodes, std::shared_ptr<const CostModel> cost,
                  std::vector<Vector> feasible_point,
                  std::optional<SlaterCertificate> slater = std::nullopt);

  int size() const { return static_cast<int>(nodes_.size()); }
  int coupling_dim() const { return p_; }
  const NodeProblem& node(int i) const { return nodes_[i]; }
  const std::vector<NodeProblem>& nodes() const { return nodes_; }
  const CostModel& cost() const { return *cost_; }
  std::shared_ptr<const CostModel> cost_ptr() const { return cost_; }
  const std::vector<Vector>& feasible_point() const { return feasible_; }
  const std::optional<SlaterCertificate>& slater() const { return slater_; }

  /// sum_i g_i(x_i)
  Vector constraint_sum(const std::vector<Vector>& x) const;
  /// sum_i f_{i,t}(x_i)
  double cost_sum(int t, const std::vector<Vector>& x) const;

  /// Stable 64-bit digest of the serialized instance; keys the optima cache.
  std::uint64_t fingerprint() const;

 private:
  std::vector<NodeProblem> nodes_;
  std::shared_ptr<const CostModel> cost_;
  std::vector<Vector> feasible_;
  std::optional<SlaterCertificate> slater_;
  int p_ = 0;
};

/// Synthetic charging scenario. Node i charges x_i in [0, x_max]^d and must
/// deliver at least E_i = energy_i * d * x_max in total, with
/// energy_i ~ U[energy_lo, energy_hi]. Rows of the coupling are aggregate
/// loads: g_i(x) = A_i x - D / N with A_i entries ~ U[0, 1) and
/// D = kappa_feas * sum_i A_i (x_max / 2) 1.
///
/// When energy_i exceeds kappa_feas / 2 the flat plan E_i / d overloads the
/// network, so the coupled limit binds and charging has to be shifted
/// between slots. The Slater witness is found by `find_slack_point`.
struct PevParams {
  int nodes = 10;
  int dim = 24;
  int coupling = 48;
  std::uint64_t seed = 1;
  double x_max = 1.0;
  double energy_lo = 0.3;
  double energy_hi = 0.5;
  double kappa_feas = 0.8;
  PevQuadraticCost::Ranges cost{};
};

/// Throws std::invalid_argument for nodes < 2, dim < 1 or coupling < 1, and
/// when no charging plan with slack on every coupled row is found.
ProblemInstance make_pev_instance(const PevParams& params);

/// Point of X_1 x ... x X_N with max_j (sum_i g_i(x_i))_j as small as the
/// search finds, and its margin -max_j(...). Deterministic. The margin is
/// exact for the returned point; the point need not be optimal.
std::pair<std::vector<Vector>, double> find_slack_point(const std::vector<NodeProblem>& nodes,
                                                        std::vector<Vector> start, int iterations = 60000);

/// Scenario without a Slater point: x_i in the unit disc, g_i(x) = 1 - x_1,
/// so sum_i g_i <= 0 forces every x_i = (1, 0), and the charging-type cost
/// pulls along the tangent of the disc where no finite multiplier balances it.
ProblemInstance make_tangent_disc_instance(int nodes, std::uint64_t seed);

/// Constants of the standing assumptions: R (set diameter), F (bound on
/// ||g_i||) and G (bound on cost and constraint subgradients).
struct ProblemBounds {
  double R = 0.0;
  double F = 0.0;
  double G = 0.0;
};

ProblemBounds bound_constants(const ProblemInstance& inst);

/// F for one node: the norm of the componentwise maxima of |g_i(x)| over X_i.
double constraint_value_bound(const NodeProblem& node);

}  // namespace dust
