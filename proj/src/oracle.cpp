#include "dust/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "dust/text.hpp"

namespace dust {

namespace {

constexpr int kBlock = 256;

QuadraticCoeffs strongly_convex_coeffs(const ProblemInstance& inst, int i, int t) {
  const auto q = inst.cost().quadratic(i, t);
  if (!q || !(q->curvature > 0.0))
    throw std::invalid_argument("round solver needs strongly convex quadratic costs (node " + std::to_string(i) + ")");
  return *q;
}

struct RoundData {
  std::vector<QuadraticCoeffs> q;
  double lipschitz = 0.0;  // of the dual gradient
};

RoundData round_data(const ProblemInstance& inst, int t) {
  RoundData data;
  for (int i = 0; i < inst.size(); ++i) {
    data.q.push_back(strongly_convex_coeffs(inst, i, t));
    const Matrix& A = inst.node(i).constraint.A;
    const double op = A.size() ? Eigen::JacobiSVD<Matrix>(A).singularValues()(0) : 0.0;
    data.lipschitz += op * op / data.q.back().curvature;
  }
  return data;
}

std::vector<Vector> block_argmin(const ProblemInstance& inst, const RoundData& data, const Vector& mu) {
  std::vector<Vector> x(inst.size());
  for (int i = 0; i < inst.size(); ++i) {
    const auto& node = inst.node(i);
    const auto& q = data.q[i];
    x[i] = node.set.project(-(q.linear + node.constraint.weighted_gradient(mu)) / q.curvature);
  }
  return x;
}

double lagrangian(const ProblemInstance& inst, const RoundData& data, const std::vector<Vector>& x, const Vector& mu) {
  double value = 0.0;
  for (int i = 0; i < inst.size(); ++i) {
    const auto& q = data.q[i];
    value += 0.5 * q.curvature * x[i].squaredNorm() + q.linear.dot(x[i]);
  }
  return value + mu.dot(inst.constraint_sum(x));
}

}  // namespace

std::vector<Vector> lagrangian_argmin(const ProblemInstance& inst, int t, const Vector& mu) {
  return block_argmin(inst, round_data(inst, t), mu);
}

double dual_value(const ProblemInstance& inst, int t, const Vector& mu) {
  const RoundData data = round_data(inst, t);
  return lagrangian(inst, data, block_argmin(inst, data, mu), mu);
}

double kkt_residual(const ProblemInstance& inst, const std::vector<Vector>& x, const Vector& mu) {
  if (mu.size() == 0) return 0.0;
  const Vector g = inst.constraint_sum(x);
  return (mu - (mu + g).cwiseMax(0.0)).cwiseAbs().maxCoeff();
}

RoundOptimum solve_round(const ProblemInstance& inst, int t, const SolveOptions& opts) {
  const int p = inst.coupling_dim();
  const RoundData data = round_data(inst, t);

  RoundOptimum out;
  out.t = t;
  Vector mu = Vector::Zero(p);
  if (opts.warm_start.size() == p) mu = opts.warm_start.cwiseMax(0.0);

  auto finish = [&](const Vector& m, int iterations) {
    out.mu = m;
    out.x = block_argmin(inst, data, m);
    out.kkt_residual = kkt_residual(inst, out.x, m);
    out.value = 0.0;
    for (int i = 0; i < inst.size(); ++i) out.value += inst.cost().evaluate(i, t, out.x[i]).value;
    out.iterations = iterations;
    out.converged = out.kkt_residual <= opts.tol;
    return out;
  };

  if (p == 0 || data.lipschitz == 0.0) return finish(mu, 0);

  auto residual_of = [&](const Vector& m, const std::vector<Vector>& x) {
    return (m - (m + inst.constraint_sum(x)).cwiseMax(0.0)).cwiseAbs().maxCoeff();
  };

  const double step = 1.0 / data.lipschitz;
  Vector look = mu;
  double momentum = 1.0;
  double last_dual = -INFINITY;

  for (int k = 1; k <= opts.max_iter; ++k) {
    const std::vector<Vector> x_mu = block_argmin(inst, data, mu);
    if (residual_of(mu, x_mu) <= opts.tol) return finish(mu, k - 1);

    Vector next;
    if (opts.method == SolveOptions::Method::diminishing) {
      next = (mu + opts.rho0 / std::sqrt(static_cast<double>(k)) * inst.constraint_sum(x_mu)).cwiseMax(0.0);
    } else {
      const std::vector<Vector> x_look = block_argmin(inst, data, look);
      next = (look + step * inst.constraint_sum(x_look)).cwiseMax(0.0);
    }

    const std::vector<Vector> x_next = block_argmin(inst, data, next);
    const double dual = lagrangian(inst, data, x_next, next);
    if (opts.dual_trace) opts.dual_trace->push_back(dual);

    if (opts.method == SolveOptions::Method::accelerated) {
      if (dual < last_dual) {
        // Adaptive restart: drop the momentum when the dual value decreases.
        momentum = 1.0;
        look = next;
      } else {
        const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        look = (next + ((momentum - 1.0) / m_next) * (next - mu)).cwiseMax(0.0);
        momentum = m_next;
      }
    }
    last_dual = dual;
    mu = std::move(next);
  }
  return finish(mu, opts.max_iter);
}

std::vector<DualStep> clairvoyant_dual_subgradient(const ProblemInstance& inst, int horizon, double step) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (!(step > 0.0)) throw std::invalid_argument("dual step must be positive");
  std::vector<DualStep> out;
  out.reserve(horizon);
  Vector mu = Vector::Zero(inst.coupling_dim());
  for (int t = 1; t <= horizon; ++t) {
    DualStep s;
    s.x = lagrangian_argmin(inst, t, mu);
    mu = (mu + step * inst.constraint_sum(s.x)).cwiseMax(0.0);
    s.mu = mu;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> accumulated_variation_series(const std::vector<RoundOptimum>& optima, int horizon) {
  if (static_cast<int>(optima.size()) < horizon + 1)
    throw std::invalid_argument("accumulated variation needs optima for rounds 1..T+1");
  for (int t = 1; t <= horizon + 1; ++t)
    if (optima[t - 1].t != t) throw std::invalid_argument("optima must be ordered by round starting at 1");
  std::vector<double> series;
  series.reserve(horizon);
  double total = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const auto& a = optima[t - 1].x;
    const auto& b = optima[t].x;
    double step = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) step += (b[i] - a[i]).norm();
    total += std::sqrt(static_cast<double>(t)) * step;
    series.push_back(total);
  }
  return series;
}

double accumulated_variation(const std::vector<RoundOptimum>& optima, int horizon) {
  if (horizon == 0) return 0.0;
  return accumulated_variation_series(optima, horizon).back();
}

std::shared_ptr<const RoundOptimum> OptimaCache::get_or_solve(const ProblemInstance& inst, int t,
                                                              const Vector& warm_start) {
  const auto key = std::make_pair(inst.fingerprint(), t);
  {
    std::lock_guard lock(mutex_);
    if (auto it = store_.find(key); it != store_.end()) return it->second;
  }
  SolveOptions opts = opts_;
  opts.warm_start = warm_start;
  auto solved = std::make_shared<const RoundOptimum>(solve_round(inst, t, opts));
  std::lock_guard lock(mutex_);
  // First insert wins, so every caller sees the same object for a key.
  return store_.emplace(key, std::move(solved)).first->second;
}

std::size_t OptimaCache::size() const {
  std::lock_guard lock(mutex_);
  return store_.size();
}

std::vector<RoundOptimum> solve_rounds(const ProblemInstance& inst, int last, OptimaCache& cache, int jobs) {
  if (last < 1) return {};
  std::vector<RoundOptimum> out(last);
  const int blocks = (last + kBlock - 1) / kBlock;
  std::atomic<int> next_block{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (int b = next_block++; b < blocks; b = next_block++) {
      try {
        Vector warm;
        for (int t = b * kBlock + 1; t <= std::min(last, (b + 1) * kBlock); ++t) {
          auto opt = cache.get_or_solve(inst, t, warm);
          warm = opt->mu;
          out[t - 1] = *opt;
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const int threads = std::clamp(jobs, 1, blocks);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

void write_optima_csv(std::ostream& out, const std::vector<RoundOptimum>& optima) {
  out << "t,f_star,kkt_residual,mu_star_norm\n";
  for (const auto& o : optima)
    out << o.t << ',' << format_double(o.value) << ',' << format_double(o.kkt_residual) << ','
        << format_double(o.mu.norm()) << '\n';
}

}  // namespace dust
