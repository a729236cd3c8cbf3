// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed here, not tuned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dust/experiment.hpp"
#include "dust/metrics.hpp"
#include "dust/oracle.hpp"
#include "fixtures.hpp"

namespace {

using namespace dust;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PevRun {
  ProblemInstance inst;
  Trajectory traj;
  double seconds;
};

// N = 10, d = 4, p = 6, T = 2000, B = 2 for seeds 1..3, run once and shared
// by the first two criteria and the envelope check.
const std::vector<PevRun>& tracking_runs() {
  static const std::vector<PevRun> runs = [] {
    std::vector<PevRun> out;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto start = Clock::now();
      auto inst = testing_fixtures::small_pev(seed, 10, 4, 6);
      const auto seq = generate_sequence(GraphKind::cyclic_partition, 10, 2, seed);
      RunOptions opts;
      opts.init_seed = seed;
      auto traj = run(inst, seq, StepSchedule{}, 2000, opts);
      out.push_back({std::move(inst), std::move(traj), seconds_since(start)});
    }
    return out;
  }();
  return runs;
}

Verdict tracking_identity() {
  double worst = 0.0, total = 0.0;
  for (const auto& r : tracking_runs()) {
    total += r.seconds;
    auto check = [&](const RoundSummary& s) {
      worst = std::max(worst, (s.tracker_sum - s.constraint_sum).norm() / (1.0 + s.constraint_sum.norm()));
    };
    for (const auto& s : r.traj.rounds) check(s);
    check(r.traj.final_round);
  }
  return {worst <= 1e-9 && total < 10.0,
          fmt("max relative tracking error %.3g (<= 1e-9), three runs %.2f s (< 10 s)", worst, total)};
}

Verdict push_sum_bounds() {
  double mass = 0.0, weight_min = INFINITY, mu_min = INFINITY;
  for (const auto& r : tracking_runs()) {
    auto check = [&](const RoundSummary& s) {
      mass = std::max(mass, std::abs(s.weight_sum - 10.0));
      weight_min = std::min(weight_min, s.weight_min);
      mu_min = std::min(mu_min, s.mu_min);
    };
    for (const auto& s : r.traj.rounds) check(s);
    check(r.traj.final_round);
  }
  return {mass <= 1e-9 && weight_min > 0.0 && mu_min >= 0.0,
          fmt("max |sum c - N| %.3g (<= 1e-9), min c %.3g (> 0), min mu %.3g (>= 0)", mass, weight_min, mu_min)};
}

struct Series {
  std::vector<RunRecord> records;
  double seconds = 0.0;
  bool certified = false;
};

Series run_series(const ExperimentConfig& cfg, bool optima) {
  const auto start = Clock::now();
  const auto inst = make_instance(cfg);
  const auto seq = generate_sequence(cfg.graph, inst.size(), cfg.b_window, cfg.seed_graph);
  RunOptions opts;
  opts.init = cfg.init;
  opts.init_seed = cfg.seed_init;
  const auto traj = run(inst, seq, make_schedule(cfg), cfg.t_horizon, opts);
  Series out;
  if (optima) {
    OptimaCache cache;
    const auto sol = solve_rounds(inst, cfg.t_horizon + 1, cache);
    out.records = build_records(traj, &sol);
  } else {
    out.records = build_records(traj, nullptr);
  }
  out.seconds = seconds_since(start);
  out.certified = inst.slater().has_value() && inst.slater()->margin > 0.0;
  return out;
}

ExperimentConfig small_pev_config() {
  ExperimentConfig cfg;
  cfg.n = 4;
  cfg.d = 2;
  cfg.p = 2;
  cfg.t_horizon = 4000;
  return cfg;
}

const Series& small_pev_series() {
  static const Series s = run_series(small_pev_config(), true);
  return s;
}

const Series& tangent_series() {
  static const Series s = [] {
    auto cfg = small_pev_config();
    cfg.scenario = "tangent_disc";
    return run_series(cfg, false);
  }();
  return s;
}

Verdict sublinear_trend() {
  const auto& s = small_pev_series();
  const auto& early = s.records[499];
  const auto& late = s.records[3999];
  const double regret_ratio = *late.avg_regret / *early.avg_regret;
  const double violation_ratio = early.avg_violation > 0.0 ? late.avg_violation / early.avg_violation : INFINITY;
  return {regret_ratio <= 0.5 && violation_ratio <= 0.5 && s.seconds < 60.0,
          fmt("avg_regret 4000/500 ratio %.3f (<= 0.5), avg_violation ratio %.3f (<= 0.5), %.2f s (< 60 s)",
              regret_ratio, violation_ratio, s.seconds)};
}

// Least-squares slope of log Reg^c against log T; NaN if some checkpoint is 0.
double violation_slope(const Series& s) {
  std::vector<double> t, v;
  for (int checkpoint : {500, 1000, 2000, 4000}) {
    const double value = s.records[checkpoint - 1].cum_violation;
    if (!(value > 0.0)) return NAN;
    t.push_back(checkpoint);
    v.push_back(value);
  }
  return loglog_slope(t, v);
}

Verdict violation_scaling() {
  const double slope = violation_slope(tangent_series());
  return {slope <= 0.85, fmt("tangent-disc (no interior point) violation slope %.3f (<= 0.85)", slope)};
}

Verdict interior_point_improvement() {
  const double slope = violation_slope(small_pev_series());
  const double reference = violation_slope(tangent_series());
  return {small_pev_series().certified && slope <= 0.70 && slope < reference,
          fmt("certified PEV violation slope %.3f (<= 0.70 and < %.3f)", slope, reference)};
}

Verdict network_sensitivity() {
  ExperimentConfig base;
  base.t_horizon = 1000;
  auto with = [&](int n, int b) {
    auto cfg = base;
    cfg.n = n;
    cfg.b_window = b;
    return run_series(cfg, true).records.back();
  };
  const auto ref = with(10, 2);
  const auto wide = with(10, 10);
  const auto big = with(20, 2);
  const bool ok = *wide.avg_regret >= *ref.avg_regret && wide.avg_violation >= ref.avg_violation &&
                  *big.avg_regret >= *ref.avg_regret && big.avg_violation >= ref.avg_violation;
  return {ok, fmt("avg_regret B=2/B=10/N=20: %.4f/%.4f/%.4f, avg_violation: %.4f/%.4f/%.4f (weakly increasing)",
                  *ref.avg_regret, *wide.avg_regret, *big.avg_regret, ref.avg_violation, wide.avg_violation,
                  big.avg_violation)};
}

Verdict oracle_equivalence() {
  double worst_grid = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto inst = testing_fixtures::tiny_instance(seed);
    worst_grid = std::max(worst_grid, std::abs(solve_round(inst, 1).value - testing_fixtures::grid_optimum(inst, 1e-3)));
  }
  const auto inst = testing_fixtures::static_binding_instance();
  const double dual_gap = (clairvoyant_dual_subgradient(inst, 2000).back().mu - solve_round(inst, 1).mu).norm();
  return {worst_grid <= 2e-3 && dual_gap <= 1e-3,
          fmt("max |solver - grid| %.3g over 20 instances (<= 2e-3), clairvoyant dual gap %.3g (<= 1e-3)", worst_grid,
              dual_gap)};
}

Verdict local_argmin_checks() {
  CounterRng rng(2024, Stream::test);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int d = 1 + static_cast<int>(rng.below(5));
    const int p = 1 + static_cast<int>(rng.below(4));
    const Vector lo = Vector::NullaryExpr(d, [&] { return rng.uniform(-1.0, 0.5); });
    const Vector hi = lo + Vector::NullaryExpr(d, [&] { return rng.uniform(0.1, 2.0); });
    const auto set = FeasibleSet::box(lo, hi);
    const AffineConstraint g{Matrix::NullaryExpr(p, d, [&] { return rng.uniform(-1.0, 1.0); }),
                             Vector::NullaryExpr(p, [&] { return rng.uniform(-1.0, 1.0); })};
    const Vector x_t = set.sample(rng);
    const Vector s = Vector::NullaryExpr(d, [&] { return rng.uniform(-2.0, 2.0); });
    const Vector lambda = Vector::NullaryExpr(p, [&] { return rng.uniform(0.0, 3.0); });
    const double alpha = rng.uniform(0.1, 5.0), eta = rng.uniform(0.5, 10.0);
    worst = std::max(worst, (local_argmin(x_t, s, lambda, g, set, alpha, eta) -
                             local_argmin_iterative(x_t, s, lambda, g, set, alpha, eta))
                                .norm());
  }

  // 1-d fixtures: (x_t, alpha s, A^T lambda, eta, lo, hi).
  const double step = 1e-4;
  const double fixtures[][6] = {{0.0, 2.0, 0.0, 1.0, -1.0, 1.0}, {0.5, 1.0, 1.0, 1.0, 0.0, 1.0}};
  double worst_grid = 0.0;
  for (const auto& f : fixtures) {
    const auto set = FeasibleSet::box(Vector::Constant(1, f[4]), Vector::Constant(1, f[5]));
    const AffineConstraint g{Matrix::Constant(1, 1, f[2]), Vector::Zero(1)};
    const double x = local_argmin(Vector::Constant(1, f[0]), Vector::Constant(1, f[1]), Vector::Ones(1), g, set, 1.0,
                                  f[3])(0);
    double best_x = f[4], best = INFINITY;
    for (int k = 0; f[4] + k * step <= f[5] + 1e-12; ++k) {
      const double z = f[4] + k * step;
      const double v = f[1] * (z - f[0]) + f[2] * z + f[3] * (z - f[0]) * (z - f[0]);
      if (v < best) {
        best = v;
        best_x = z;
      }
    }
    worst_grid = std::max(worst_grid, std::abs(x - best_x));
  }
  return {worst <= 1e-6 && worst_grid <= 2 * step,
          fmt("closed form vs iterative max gap %.3g on 1000 subproblems (<= 1e-6), 1-d grid gap %.3g (<= 2e-4)",
              worst, worst_grid)};
}

Verdict consensus_mechanism() {
  // Ring plus one chord: strongly connected and not balanced.
  const auto seq = GraphSequence::cycle(4, 1, {{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}});
  const auto inst = testing_fixtures::small_pev(1);
  SwarmState s = initialize(inst, InitKind::zero_projected);
  CounterRng rng(9, Stream::test);
  for (auto& node : s.nodes) {
    node.mu = Vector::NullaryExpr(2, [&] { return rng.uniform(0.0, 5.0); });
    node.y = Vector::Zero(2);
  }
  RoundOptions frozen;
  frozen.freeze_tracker = true;
  const auto constants = theory_constants(inst, 1);
  int reached = -1;
  bool bounded = true;
  for (int t = 1; t <= 200; ++t) {
    const Vector mu_bar = s.mu_bar();
    s = dust_round(inst, s, seq.mixing(t), StepSchedule{}, frozen);
    const auto summary = summarize(inst, s, mu_bar);
    bounded &= summary.consensus_error_sum <= constants.consensus_envelope(t);
    if (reached < 0 && summary.consensus_error < 1e-6) reached = t;
  }
  for (const auto& r : tracking_runs())
    for (const auto& point : consensus_diagnostics(r.traj, theory_constants(r.inst, 2)))
      bounded &= point.observed_sum <= point.envelope;
  return {reached > 0 && bounded,
          fmt("frozen-tracker error below 1e-6 at round %d (<= 200), envelope %s on every round", reached,
              bounded ? "dominates" : "violated")};
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "dust_acceptance_determinism";
  fs::remove_all(root);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
  };
  bool same = true;
  int files = 0;
  for (const char* scenario : {"pev", "tangent_disc"}) {
    auto cfg = small_pev_config();
    cfg.scenario = scenario;
    cfg.t_horizon = 500;
    cfg.compute_optima = cfg.scenario == "pev";
    cfg.dump_edges = true;
    cfg.jobs = 2;
    std::vector<fs::path> dirs;
    for (const char* copy : {"a", "b"}) {
      cfg.out = (root / scenario / copy).string();
      if (run_experiment(cfg).exit_code != exit_ok) return {false, fmt("run of %s failed", scenario)};
      dirs.push_back(cfg.out);
    }
    for (const char* name : {"run.csv", "optima.csv", "edges.csv"}) {
      if (!fs::exists(dirs[0] / name)) continue;
      ++files;
      same &= slurp(dirs[0] / name) == slurp(dirs[1] / name);
    }
  }
  fs::remove_all(root);
  return {same && files == 5, fmt("%d CSV pairs from two invocations %s", files, same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"tracking identity", tracking_identity},
      {"push-sum conservation and bounds", push_sum_bounds},
      {"sublinear averages", sublinear_trend},
      {"violation growth without an interior point", violation_scaling},
      {"violation growth with an interior point", interior_point_improvement},
      {"window and network size sensitivity", network_sensitivity},
      {"round optimum oracle", oracle_equivalence},
      {"local argmin", local_argmin_checks},
      {"dual consensus", consensus_mechanism},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
