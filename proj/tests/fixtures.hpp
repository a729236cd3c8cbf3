#pragma once

#include <cmath>

#include "dust/problem.hpp"

namespace dust::testing_fixtures {

// Random N = 2, d = 1, p = 1 instance whose stored point x = lo is feasible.
inline ProblemInstance tiny_instance(std::uint64_t seed) {
  CounterRng rng(seed, Stream::test);
  std::vector<NodeProblem> nodes;
  std::vector<std::vector<QuadraticCoeffs>> table;
  double at_lo = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double lo = rng.uniform(-1.0, 0.0);
    const double a = rng.uniform(0.2, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    nodes.push_back({FeasibleSet::box(Vector::Constant(1, lo), Vector::Constant(1, lo + 1.5)),
                     AffineConstraint{Matrix::Constant(1, 1, a), Vector::Zero(1)}});
    at_lo += a * lo;
    table.push_back({{rng.uniform(0.5, 1.0), Vector::Constant(1, rng.uniform(-1.5, 1.5))}});
  }
  // Offset so that the corner x = lo has slack in [0, 0.3) but the limit
  // usually binds at the unconstrained minimizer.
  const double offset = -at_lo - rng.uniform(0.0, 0.3);
  nodes[0].constraint.b(0) = offset / 2;
  nodes[1].constraint.b(0) = offset / 2;
  std::vector<Vector> lo = {nodes[0].set.lo(), nodes[1].set.lo()};
  return ProblemInstance(nodes, std::make_shared<TableQuadraticCost>(table), lo);
}

inline double grid_optimum(const ProblemInstance& inst, double step) {
  double lo[2], a[2], b[2], curv[2], lin[2];
  int count[2];
  for (int i = 0; i < 2; ++i) {
    const auto& set = inst.node(i).set;
    const auto q = *inst.cost().quadratic(i, 1);
    lo[i] = set.lo()(0);
    count[i] = static_cast<int>(std::round((set.hi()(0) - lo[i]) / step));
    a[i] = inst.node(i).constraint.A(0, 0);
    b[i] = inst.node(i).constraint.b(0);
    curv[i] = q.curvature;
    lin[i] = q.linear(0);
  }
  double best = INFINITY;
  for (int u = 0; u <= count[0]; ++u)
    for (int v = 0; v <= count[1]; ++v) {
      const double x0 = lo[0] + u * step, x1 = lo[1] + v * step;
      if (a[0] * x0 + b[0] + a[1] * x1 + b[1] > 0.0) continue;
      best = std::min(best, 0.5 * curv[0] * x0 * x0 + lin[0] * x0 + 0.5 * curv[1] * x1 * x1 + lin[1] * x1);
    }
  return best;
}

// Three nodes on [0, 1]^2 with one round's cost repeated forever; the pull
// towards (1, 1) makes the shared limit bind.
inline ProblemInstance static_binding_instance() {
  std::vector<NodeProblem> nodes;
  std::vector<std::vector<QuadraticCoeffs>> table;
  std::vector<Vector> start;
  for (int i = 0; i < 3; ++i) {
    Matrix A(1, 2);
    A << 0.5, 0.25 * (i + 1);
    nodes.push_back({FeasibleSet::box(Vector::Zero(2), Vector::Ones(2)), AffineConstraint{A, Vector::Constant(1, -0.1)}});
    table.push_back({{1.0, Vector::Constant(2, -1.0)}});
    start.push_back(Vector::Zero(2));
  }
  return ProblemInstance(nodes, std::make_shared<TableQuadraticCost>(table), start);
}

inline ProblemInstance small_pev(std::uint64_t seed, int nodes = 4, int dim = 2, int coupling = 2) {
  PevParams params;
  params.nodes = nodes;
  params.dim = dim;
  params.coupling = coupling;
  params.seed = seed;
  return make_pev_instance(params);
}

}  // namespace dust::testing_fixtures
