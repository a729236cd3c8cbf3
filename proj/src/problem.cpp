#include "dust/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dust {

namespace {

void require_dim(const Vector& z, int d) {
  if (z.size() != d)
    throw std::invalid_argument("dimension mismatch: expected " + std::to_string(d) + ", got " +
                                std::to_string(z.size()));
}

Vector clamp(const Vector& z, const Vector& lo, const Vector& hi) { return z.cwiseMax(lo).cwiseMin(hi); }

// Smallest nu >= 0 with sum(clamp(z + nu)) = target. The sum is piecewise
// linear and nondecreasing in nu, with kinks where a coordinate leaves lo or
// reaches hi, so the root is found exactly on the bracketing segment.
double sum_shift(const Vector& z, const Vector& lo, const Vector& hi, double target) {
  auto total = [&](double nu) { return clamp(z.array() + nu, lo, hi).sum(); };
  std::vector<double> kinks;
  kinks.reserve(2 * z.size() + 1);
  kinks.push_back(0.0);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (lo(k) - z(k) > 0.0) kinks.push_back(lo(k) - z(k));
    if (hi(k) - z(k) > 0.0) kinks.push_back(hi(k) - z(k));
  }
  std::sort(kinks.begin(), kinks.end());
  double left = kinks.front();
  double s_left = total(left);
  for (std::size_t m = 1; m < kinks.size(); ++m) {
    const double right = kinks[m];
    const double s_right = total(right);
    if (s_right >= target) {
      if (s_right == s_left) return right;
      return left + (target - s_left) / (s_right - s_left) * (right - left);
    }
    left = right;
    s_left = s_right;
  }
  return left;  // unreachable for a nonempty set
}

// min w^T x over lo <= x <= hi, sum(x) >= total.
double capped_box_min(const Vector& w, const Vector& lo, const Vector& hi, double total) {
  Vector x(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) x(k) = w(k) >= 0.0 ? lo(k) : hi(k);
  double deficit = total - x.sum();
  if (deficit > 0.0) {
    std::vector<Eigen::Index> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return w(a) < w(b); });
    for (auto k : order) {
      if (deficit <= 0.0) break;
      const double room = hi(k) - x(k);
      const double step = std::min(room, deficit);
      x(k) += step;
      deficit -= step;
    }
  }
  return w.dot(x);
}

double standard_normal(CounterRng& rng) {
  const double u1 = rng.uniform_left_open(0.0, 1.0);
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

// ---------------------------------------------------------------------------
// FeasibleSet

FeasibleSet FeasibleSet::box(Vector lo, Vector hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw std::invalid_argument("box bounds must match");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("box with lo > hi");
  return FeasibleSet(Kind::box, std::move(lo), std::move(hi), 0.0);
}

FeasibleSet FeasibleSet::ball(Vector center, double radius) {
  if (center.size() == 0) throw std::invalid_argument("ball needs a center");
  if (!(radius >= 0.0)) throw std::invalid_argument("ball radius must be nonnegative");
  return FeasibleSet(Kind::ball, std::move(center), Vector(), radius);
}

FeasibleSet FeasibleSet::capped_box(Vector lo, Vector hi, double min_total) {
  if (lo.size() != hi.size() || lo.size() == 0) throw std::invalid_argument("box bounds must match");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("box with lo > hi");
  if (hi.sum() < min_total) throw std::invalid_argument("capped box is empty: sum(hi) < min_total");
  return FeasibleSet(Kind::capped_box, std::move(lo), std::move(hi), min_total);
}

bool operator==(const FeasibleSet& a, const FeasibleSet& b) {
  if (a.kind_ != b.kind_ || a.a_.size() != b.a_.size() || a.b_.size() != b.b_.size()) return false;
  return a.a_ == b.a_ && a.b_ == b.b_ && a.scalar_ == b.scalar_;
}

Vector FeasibleSet::project(const Vector& z) const {
  require_dim(z, dim());
  switch (kind_) {
    case Kind::box:
      return clamp(z, a_, b_);
    case Kind::ball: {
      const Vector offset = z - a_;
      const double dist = offset.norm();
      if (dist <= scalar_) return z;
      return a_ + offset * (scalar_ / dist);
    }
    case Kind::capped_box: {
      Vector x = clamp(z, a_, b_);
      if (x.sum() >= scalar_) return x;
      const double nu = sum_shift(z, a_, b_, scalar_);
      return clamp(z.array() + nu, a_, b_);
    }
  }
  return z;
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  switch (kind_) {
    case Kind::box:
      return (x.array() >= a_.array() - tol).all() && (x.array() <= b_.array() + tol).all();
    case Kind::ball:
      return (x - a_).norm() <= scalar_ + tol;
    case Kind::capped_box:
      return (x.array() >= a_.array() - tol).all() && (x.array() <= b_.array() + tol).all() &&
             x.sum() >= scalar_ - tol * dim();
  }
  return false;
}

double FeasibleSet::diameter() const {
  if (kind_ == Kind::ball) return 2.0 * scalar_;
  return (b_ - a_).norm();
}

double FeasibleSet::max_norm() const {
  if (kind_ == Kind::ball) return a_.norm() + scalar_;
  return a_.cwiseAbs().cwiseMax(b_.cwiseAbs()).norm();
}

std::pair<double, double> FeasibleSet::linear_range(const Vector& w) const {
  require_dim(w, dim());
  switch (kind_) {
    case Kind::box: {
      double lo = 0.0, hi = 0.0;
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        lo += std::min(w(k) * a_(k), w(k) * b_(k));
        hi += std::max(w(k) * a_(k), w(k) * b_(k));
      }
      return {lo, hi};
    }
    case Kind::ball: {
      const double mid = w.dot(a_);
      const double spread = scalar_ * w.norm();
      return {mid - spread, mid + spread};
    }
    case Kind::capped_box:
      return {capped_box_min(w, a_, b_, scalar_), -capped_box_min(-w, a_, b_, scalar_)};
  }
  return {0.0, 0.0};
}

Vector FeasibleSet::sample(CounterRng& rng) const {
  Vector x(dim());
  if (kind_ == Kind::ball) {
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = standard_normal(rng);
    const double norm = x.norm();
    const double r = scalar_ * std::pow(rng.uniform(), 1.0 / dim());
    return norm > 0.0 ? Vector(a_ + x * (r / norm)) : a_;
  }
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.uniform(a_(k), b_(k));
  return project(x);
}

// ---------------------------------------------------------------------------
// Constraint and costs

Vector AffineConstraint::eval_by_rows(const Vector& x) const {
  Vector out(A.rows());
  for (Eigen::Index j = 0; j < A.rows(); ++j) {
    double acc = b(j);
    for (Eigen::Index k = 0; k < A.cols(); ++k) acc += A(j, k) * x(k);
    out(j) = acc;
  }
  return out;
}

namespace {

CostValue quadratic_value(const QuadraticCoeffs& q, const Vector& x) {
  require_dim(x, static_cast<int>(q.linear.size()));
  return {0.5 * q.curvature * x.squaredNorm() + q.linear.dot(x), q.curvature * x + q.linear};
}

}  // namespace

PevQuadraticCost::PevQuadraticCost(std::uint64_t seed, std::vector<int> dims, Ranges ranges)
    : seed_(seed), dims_(std::move(dims)), ranges_(ranges) {
  if (ranges_.a_lo < 0.0 || ranges_.a_hi < ranges_.a_lo || ranges_.b_hi < ranges_.b_lo)
    throw std::invalid_argument("invalid quadratic cost ranges");
}

QuadraticCoeffs PevQuadraticCost::coeffs(int node, int t) const {
  CounterRng rng(seed_, Stream::cost, {static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(t)});
  QuadraticCoeffs q;
  q.curvature = rng.uniform(ranges_.a_lo, ranges_.a_hi);
  q.linear.resize(dims_.at(node));
  for (Eigen::Index k = 0; k < q.linear.size(); ++k) q.linear(k) = rng.uniform_left_open(ranges_.b_lo, ranges_.b_hi);
  return q;
}

CostValue PevQuadraticCost::evaluate(int node, int t, const Vector& x) const {
  return quadratic_value(coeffs(node, t), x);
}

double PevQuadraticCost::subgradient_bound(int node, const FeasibleSet& set) const {
  const double b_max = std::max(std::abs(ranges_.b_lo), std::abs(ranges_.b_hi));
  return ranges_.a_hi * set.max_norm() + b_max * std::sqrt(static_cast<double>(dims_.at(node)));
}

TableQuadraticCost::TableQuadraticCost(std::vector<std::vector<QuadraticCoeffs>> table)
    : table_(std::move(table)) {
  for (const auto& rows : table_)
    if (rows.empty()) throw std::invalid_argument("cost table needs at least one row per node");
}

std::optional<QuadraticCoeffs> TableQuadraticCost::quadratic(int node, int t) const {
  const auto& rows = table_.at(node);
  return rows[static_cast<std::size_t>(t - 1) % rows.size()];
}

CostValue TableQuadraticCost::evaluate(int node, int t, const Vector& x) const {
  return quadratic_value(*quadratic(node, t), x);
}

double TableQuadraticCost::subgradient_bound(int node, const FeasibleSet& set) const {
  double bound = 0.0;
  for (const auto& q : table_.at(node))
    bound = std::max(bound, std::abs(q.curvature) * set.max_norm() + q.linear.norm());
  return bound;
}

PiecewiseLinearCost::PiecewiseLinearCost(std::uint64_t seed, std::vector<Vector> weights, double target_lo,
                                         double target_hi)
    : seed_(seed), weights_(std::move(weights)), target_lo_(target_lo), target_hi_(target_hi) {
  for (const auto& w : weights_)
    if ((w.array() < 0.0).any()) throw std::invalid_argument("piecewise-linear weights must be nonnegative");
}

Vector PiecewiseLinearCost::targets(int node, int t) const {
  CounterRng rng(seed_, Stream::cost, {static_cast<std::uint64_t>(node), static_cast<std::uint64_t>(t)});
  Vector c(weights_.at(node).size());
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = rng.uniform(target_lo_, target_hi_);
  return c;
}

CostValue PiecewiseLinearCost::evaluate(int node, int t, const Vector& x) const {
  const Vector& w = weights_.at(node);
  require_dim(x, static_cast<int>(w.size()));
  const Vector c = targets(node, t);
  CostValue out{0.0, Vector::Zero(x.size())};
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double diff = x(k) - c(k);
    out.value += w(k) * std::abs(diff);
    if (diff > 0.0) out.subgradient(k) = w(k);
    else if (diff < 0.0) out.subgradient(k) = -w(k);
  }
  return out;
}

double PiecewiseLinearCost::subgradient_bound(int node, const FeasibleSet&) const { return weights_.at(node).norm(); }

// ---------------------------------------------------------------------------
// ProblemInstance

ProblemInstance::ProblemInstance(std::vector<NodeProblem> nodes, std::shared_ptr<const CostModel> cost,
                                 std::vector<Vector> feasible_point, std::optional<SlaterCertificate> slater)
    : nodes_(std::move(nodes)), cost_(std::move(cost)), feasible_(std::move(feasible_point)), slater_(std::move(slater)) {
  if (nodes_.empty()) throw std::invalid_argument("instance needs at least one node");
  if (!cost_) throw std::invalid_argument("instance needs a cost model");
  p_ = nodes_.front().constraint.rows();
  for (const auto& node : nodes_) {
    if (node.constraint.rows() != p_ || node.constraint.b.size() != p_)
      throw std::invalid_argument("all coupling constraints need the same number of rows");
    if (node.constraint.A.cols() != node.set.dim())
      throw std::invalid_argument("constraint columns must match the local dimension");
  }
  if (static_cast<int>(feasible_.size()) != size()) throw std::invalid_argument("feasible point has wrong block count");
  for (int i = 0; i < size(); ++i)
    if (!nodes_[i].set.contains(feasible_[i], 1e-9)) throw std::invalid_argument("feasible point outside X_i");
  if ((constraint_sum(feasible_).array() > 1e-9).any())
    throw std::invalid_argument("stored feasible point violates the coupled constraint");
  if (slater_) {
    if (static_cast<int>(slater_->witness.size()) != size() || !(slater_->margin > 0.0))
      throw std::invalid_argument("malformed Slater certificate");
    for (int i = 0; i < size(); ++i)
      if (!nodes_[i].set.contains(slater_->witness[i], 1e-9)) throw std::invalid_argument("Slater witness outside X_i");
    if ((constraint_sum(slater_->witness).array() > -slater_->margin).any())
      throw std::invalid_argument("Slater witness does not achieve its margin");
  }
}

Vector ProblemInstance::constraint_sum(const std::vector<Vector>& x) const {
  Vector total = Vector::Zero(p_);
  for (int i = 0; i < size(); ++i) total += nodes_[i].constraint(x[i]);
  return total;
}

double ProblemInstance::cost_sum(int t, const std::vector<Vector>& x) const {
  double total = 0.0;
  for (int i = 0; i < size(); ++i) total += cost_->evaluate(i, t, x[i]).value;
  return total;
}

// ---------------------------------------------------------------------------
// Scenario generators

ProblemInstance make_pev_instance(const PevParams& params) {
  const int n = params.nodes, d = params.dim, p = params.coupling;
  if (n < 2) throw std::invalid_argument("PEV instance needs at least two vehicles");
  if (d < 1 || p < 1) throw std::invalid_argument("PEV instance needs d >= 1 and p >= 1");
  if (!(params.x_max > 0.0)) throw std::invalid_argument("x_max must be positive");
  if (params.energy_lo < 0.0 || params.energy_hi < params.energy_lo || params.energy_hi >= 1.0)
    throw std::invalid_argument("energy fractions must satisfy 0 <= lo <= hi < 1");
  if (!(params.kappa_feas > 0.0 && params.kappa_feas <= 1.0))
    throw std::invalid_argument("kappa_feas must lie in (0, 1]");

  std::vector<Matrix> loads(n);
  std::vector<double> energy(n);
  Vector demand = Vector::Zero(p);
  for (int i = 0; i < n; ++i) {
    CounterRng rng(params.seed, Stream::constraint, {static_cast<std::uint64_t>(i)});
    loads[i].resize(p, d);
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < d; ++k) loads[i](j, k) = rng.uniform();
    CounterRng energy_rng(params.seed, Stream::energy, {static_cast<std::uint64_t>(i)});
    energy[i] = energy_rng.uniform(params.energy_lo, params.energy_hi) * d * params.x_max;
    demand += loads[i] * Vector::Constant(d, params.x_max / 2.0);
  }
  demand *= params.kappa_feas;

  std::vector<NodeProblem> nodes;
  for (int i = 0; i < n; ++i)
    nodes.push_back({FeasibleSet::capped_box(Vector::Zero(d), Vector::Constant(d, params.x_max), energy[i]),
                     AffineConstraint{loads[i], -demand / n}});

  // Start from the flat profile that just meets each energy demand and move
  // load between slots until every coupled row has slack.
  std::vector<Vector> start(n);
  for (int i = 0; i < n; ++i) start[i] = Vector::Constant(d, energy[i] / d);
  auto [witness, margin] = find_slack_point(nodes, start);
  if (!(margin > 0.0))
    throw std::invalid_argument("no strictly feasible charging plan found; raise kappa_feas or lower the energy demand");

  std::vector<int> dims(n, d);
  auto cost = std::make_shared<PevQuadraticCost>(params.seed, dims, params.cost);
  return ProblemInstance(std::move(nodes), std::move(cost), witness, SlaterCertificate{witness, margin});
}

std::pair<std::vector<Vector>, double> find_slack_point(const std::vector<NodeProblem>& nodes,
                                                        std::vector<Vector> start, int iterations) {
  const int n = static_cast<int>(nodes.size());
  if (static_cast<int>(start.size()) != n) throw std::invalid_argument("find_slack_point: block count mismatch");
  const int p = nodes.empty() ? 0 : nodes.front().constraint.rows();
  for (int i = 0; i < n; ++i) start[i] = nodes[i].set.project(start[i]);

  auto sum_g = [&](const std::vector<Vector>& x) {
    Vector s = Vector::Zero(p);
    for (int i = 0; i < n; ++i) s += nodes[i].constraint(x[i]);
    return s;
  };

  double curvature = 0.0, scale = 0.0;
  for (const auto& node : nodes) {
    curvature += node.constraint.A.squaredNorm();
    scale += node.constraint.b.cwiseAbs().sum();
  }
  scale = std::max(scale / std::max(p, 1), 1e-12);
  if (p == 0 || curvature == 0.0) return {start, p == 0 ? INFINITY : -sum_g(start).maxCoeff()};

  std::vector<Vector> x = start, best = start, prev = start, probe = start;
  double best_margin = -sum_g(start).maxCoeff();
  // Accelerated projected gradient on the smoothed maximum
  // tau * log(sum_j exp(S_j / tau)), shrinking tau in stages. A stage ends
  // early once the best margin stops moving.
  const int stages = 6;
  const int per_stage = std::max(1, iterations / stages);
  const int patience = 400;
  double tau = 0.1 * scale;
  for (int stage = 0; stage < stages; ++stage, tau *= 0.3) {
    const double step = tau / curvature;
    double momentum = 1.0, smoothed_prev = INFINITY;
    double checkpoint = best_margin;
    prev = x;
    probe = x;
    for (int k = 1; k <= per_stage; ++k) {
      const Vector s = sum_g(probe);
      const double top = s.maxCoeff();
      Vector weight = ((s.array() - top) / tau).exp();
      weight /= weight.sum();
      for (int i = 0; i < n; ++i)
        x[i] = nodes[i].set.project(probe[i] - step * nodes[i].constraint.weighted_gradient(weight));
      const Vector sx = sum_g(x);
      const double sx_top = sx.maxCoeff();
      const double smoothed = sx_top + tau * std::log(((sx.array() - sx_top) / tau).exp().sum());
      if (-sx_top > best_margin) {
        best_margin = -sx_top;
        best = x;
      }
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = smoothed > smoothed_prev ? 0.0 : (momentum - 1.0) / next;
      momentum = smoothed > smoothed_prev ? 1.0 : next;
      smoothed_prev = smoothed;
      for (int i = 0; i < n; ++i) probe[i] = x[i] + beta * (x[i] - prev[i]);
      prev = x;
      if (k % patience == 0) {
        if (best_margin - checkpoint <= 1e-6 * std::max(1.0, std::abs(best_margin))) break;
        checkpoint = best_margin;
      }
    }
    x = best;
  }
  return {best, best_margin};
}

ProblemInstance make_tangent_disc_instance(int nodes, std::uint64_t seed) {
  if (nodes < 1) throw std::invalid_argument("tangent disc instance needs a node");
  std::vector<NodeProblem> problems;
  std::vector<Vector> feasible;
  Matrix A(1, 2);
  A << -1.0, 0.0;
  for (int i = 0; i < nodes; ++i) {
    problems.push_back({FeasibleSet::ball(Vector::Zero(2), 1.0), AffineConstraint{A, Vector::Ones(1)}});
    feasible.push_back(Vector::Unit(2, 0));
  }
  auto cost = std::make_shared<PevQuadraticCost>(seed, std::vector<int>(nodes, 2));
  return ProblemInstance(std::move(problems), std::move(cost), std::move(feasible));
}

// ---------------------------------------------------------------------------
// Bounds

double constraint_value_bound(const NodeProblem& node) {
  const auto& g = node.constraint;
  Vector worst(g.rows());
  for (int j = 0; j < g.rows(); ++j) {
    const auto [lo, hi] = node.set.linear_range(g.A.row(j).transpose());
    worst(j) = std::max(std::abs(lo + g.b(j)), std::abs(hi + g.b(j)));
  }
  return worst.norm();
}

ProblemBounds bound_constants(const ProblemInstance& inst) {
  ProblemBounds bounds;
  for (int i = 0; i < inst.size(); ++i) {
    const auto& node = inst.node(i);
    bounds.R = std::max(bounds.R, node.set.diameter());
    bounds.F = std::max(bounds.F, constraint_value_bound(node));
    const double op_norm = node.constraint.rows() > 0
                               ? Eigen::JacobiSVD<Matrix>(node.constraint.A).singularValues()(0)
                               : 0.0;
    bounds.G = std::max({bounds.G, op_norm, inst.cost().subgradient_bound(i, node.set)});
  }
  return bounds;
}

}  // namespace dust
