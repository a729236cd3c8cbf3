#include "dust/algorithm.hpp"

#include <cmath>

namespace dust {

namespace {

bool finite(const Vector& v) { return v.allFinite(); }

void check_finite(const NodeState& s, int round, int node) {
  if (!finite(s.x) || !finite(s.y) || !finite(s.mu) || !finite(s.lambda) || !std::isfinite(s.weight))
    throw NumericFailure(round, "non-finite state at node " + std::to_string(node));
}

}  // namespace

double StepSchedule::alpha(int t) const { return alpha_scale * std::pow(static_cast<double>(t), alpha_power); }
double StepSchedule::eta(int t) const { return eta_scale * std::pow(static_cast<double>(t), eta_power); }

void StepSchedule::check() const {
  if (!(alpha_scale > 0.0) || !std::isfinite(alpha_power)) throw std::invalid_argument("alpha schedule must be positive");
  if (!(eta_scale > 0.0)) throw std::invalid_argument("eta schedule must be positive");
  if (!(eta_power >= 0.0)) throw std::invalid_argument("eta must be nondecreasing (eta_power >= 0)");
}

std::vector<Vector> SwarmState::decisions() const {
  std::vector<Vector> xs;
  xs.reserve(nodes.size());
  for (const auto& s : nodes) xs.push_back(s.x);
  return xs;
}

Vector SwarmState::tracker_sum() const {
  Vector total = Vector::Zero(constraint_sum.size());
  for (const auto& s : nodes) total += s.y;
  return total;
}

double SwarmState::weight_sum() const {
  double total = 0.0;
  for (const auto& s : nodes) total += s.weight;
  return total;
}

Vector SwarmState::mu_bar() const {
  Vector total = Vector::Zero(constraint_sum.size());
  for (const auto& s : nodes) total += s.mu;
  return total / static_cast<double>(nodes.size());
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "zero_projected") return InitKind::zero_projected;
  if (name == "seeded_random_in_set") return InitKind::seeded_random_in_set;
  if (name == "feasible_point") return InitKind::feasible_point;
  throw std::invalid_argument("unknown init kind: " + std::string(name));
}

std::string_view to_string(InitKind kind) {
  switch (kind) {
    case InitKind::zero_projected: return "zero_projected";
    case InitKind::seeded_random_in_set: return "seeded_random_in_set";
    case InitKind::feasible_point: return "feasible_point";
  }
  return "?";
}

SwarmState initialize(const ProblemInstance& inst, InitKind kind, std::uint64_t seed) {
  const int p = inst.coupling_dim();
  SwarmState state;
  state.round = 1;
  state.constraint_sum = Vector::Zero(p);
  for (int i = 0; i < inst.size(); ++i) {
    const auto& node = inst.node(i);
    NodeState s;
    switch (kind) {
      case InitKind::zero_projected:
        s.x = node.set.project(Vector::Zero(node.set.dim()));
        break;
      case InitKind::seeded_random_in_set: {
        CounterRng rng(seed, Stream::init, {static_cast<std::uint64_t>(i)});
        s.x = node.set.sample(rng);
        break;
      }
      case InitKind::feasible_point:
        s.x = inst.feasible_point()[i];
        break;
    }
    s.y = node.constraint(s.x);
    s.mu = Vector::Zero(p);
    s.lambda = Vector::Zero(p);
    s.weight = 1.0;
    state.constraint_sum += s.y;
    state.nodes.push_back(std::move(s));
  }
  return state;
}

Vector local_argmin(const Vector& x_t, const Vector& subgrad, const Vector& lambda, const AffineConstraint& g,
                    const FeasibleSet& set, double alpha, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (subgrad.size() != x_t.size() || lambda.size() != g.rows())
    throw std::invalid_argument("local_argmin: dimension mismatch");
  return set.project(x_t - (alpha * subgrad + g.weighted_gradient(lambda)) / (2.0 * eta));
}

Vector local_argmin_iterative(const Vector& x_t, const Vector& subgrad, const Vector& lambda,
                              const AffineConstraint& g, const FeasibleSet& set, double alpha, double eta,
                              const IterativeOptions& opts) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (subgrad.size() != x_t.size() || lambda.size() != g.rows())
    throw std::invalid_argument("local_argmin: dimension mismatch");
  const double step = 1.0 / (4.0 * eta);
  const Vector linear = alpha * subgrad + g.weighted_gradient(lambda);
  Vector x = set.project(x_t);
  for (int k = 0; k < opts.max_iter; ++k) {
    const Vector grad = linear + 2.0 * eta * (x - x_t);
    Vector next = set.project(x - step * grad);
    const double moved = (next - x).norm();
    x = std::move(next);
    if (moved <= opts.tol * (1.0 + x.norm())) return x;
  }
  throw std::runtime_error("projected gradient did not converge in " + std::to_string(opts.max_iter) + " steps");
}

SwarmState dust_round(const ProblemInstance& inst, const SwarmState& state, const MixingMatrix& w,
                      const StepSchedule& sched, const RoundOptions& opts, RoundTrace* trace) {
  const int n = inst.size();
  const int p = inst.coupling_dim();
  const int t = state.round;
  if (w.size() != n || static_cast<int>(state.nodes.size()) != n)
    throw std::invalid_argument("dust_round: node count mismatch");

  const double alpha = sched.alpha(t);
  const double eta = sched.eta(t);
  if (!(alpha > 0.0) || !(eta > 0.0) || !std::isfinite(alpha) || !std::isfinite(eta))
    throw NumericFailure(t, "step sizes left (0, inf)");

  SwarmState next;
  next.round = t + 1;
  next.nodes.resize(n);
  next.constraint_sum = Vector::Zero(p);
  if (trace) trace->mu_hat.assign(n, Vector());

  for (int i = 0; i < n; ++i) {
    const NodeState& cur = state.nodes[i];
    const auto& node = inst.node(i);
    if (cur.x.size() != node.set.dim() || cur.y.size() != p || cur.mu.size() != p)
      throw std::invalid_argument("dust_round: state dimensions do not match the instance");

    double c = 0.0;
    Vector mu_hat = Vector::Zero(p);
    Vector y_mix = Vector::Zero(p);
    for (int j = 0; j < n; ++j) {
      const double wij = w(i, j);
      if (wij == 0.0) continue;
      c += wij * state.nodes[j].weight;
      mu_hat += wij * state.nodes[j].mu;
      y_mix += wij * state.nodes[j].y;
    }
    if (!(c > 0.0)) throw NumericFailure(t, "push-sum weight of node " + std::to_string(i) + " is not positive");

    NodeState& out = next.nodes[i];
    out.weight = c;
    out.lambda = mu_hat / c;

    const Vector subgrad = inst.cost().evaluate(i, t, cur.x).subgradient;
    out.x = local_argmin(cur.x, subgrad, out.lambda, node.constraint, node.set, alpha, eta);

    const Vector g_new = node.constraint(out.x);
    out.y = opts.freeze_tracker ? y_mix : Vector(y_mix + g_new - node.constraint(cur.x));
    out.mu = (mu_hat + out.y).cwiseMax(0.0);

    check_finite(out, t, i);
    next.constraint_sum += g_new;
    if (trace) trace->mu_hat[i] = std::move(mu_hat);
  }
  return next;
}

RoundSummary summarize(const ProblemInstance& inst, const SwarmState& state, const Vector& previous_mu_bar) {
  RoundSummary s;
  s.t = state.round;
  s.constraint_sum = state.constraint_sum;
  s.tracker_sum = state.tracker_sum();
  s.weight_sum = state.weight_sum();
  s.weight_min = state.nodes.front().weight;
  s.mu_min = 0.0;
  bool first = true;
  for (int i = 0; i < static_cast<int>(state.nodes.size()); ++i) {
    const auto& node = state.nodes[i];
    s.weight_min = std::min(s.weight_min, node.weight);
    if (node.mu.size() > 0) {
      s.mu_min = first ? node.mu.minCoeff() : std::min(s.mu_min, node.mu.minCoeff());
      first = false;
    }
    s.max_tracker_norm = std::max(s.max_tracker_norm, node.y.norm());
    s.learner_cost += inst.cost().evaluate(i, state.round, node.x).value;
    if (state.round > 1) {
      const double gap = (node.lambda - previous_mu_bar).norm();
      s.consensus_error = std::max(s.consensus_error, gap);
      s.consensus_error_sum += gap;
    }
  }
  s.mu_bar = state.mu_bar();
  return s;
}

Trajectory run(const ProblemInstance& inst, const GraphSequence& seq, const StepSchedule& sched, int horizon,
               const RunOptions& opts) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (seq.nodes() != inst.size()) throw std::invalid_argument("graph and instance disagree on the node count");
  sched.check();

  Trajectory traj;
  traj.rounds.reserve(horizon);
  SwarmState state = initialize(inst, opts.init, opts.init_seed);
  Vector previous_mu_bar = Vector::Zero(inst.coupling_dim());

  auto track_weights = [&](const SwarmState& s) {
    for (const auto& node : s.nodes) traj.empirical_r = std::min(traj.empirical_r, node.weight);
  };
  track_weights(state);

  for (int t = 1; t <= horizon; ++t) {
    RoundSummary summary = summarize(inst, state, previous_mu_bar);
    traj.max_tracker_norm = std::max(traj.max_tracker_norm, summary.max_tracker_norm);
    previous_mu_bar = summary.mu_bar;
    traj.rounds.push_back(std::move(summary));
    if (opts.on_state) opts.on_state(state);
    if (opts.keep_states) traj.states.push_back(state);

    try {
      state = dust_round(inst, state, seq.mixing(t), sched, opts.round);
    } catch (const NumericFailure&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("round " + std::to_string(t) + ": " + e.what());
    }
    track_weights(state);
  }
  traj.final_round = summarize(inst, state, previous_mu_bar);
  traj.max_tracker_norm = std::max(traj.max_tracker_norm, traj.final_round.max_tracker_norm);
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace dust
