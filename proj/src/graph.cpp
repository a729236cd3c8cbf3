#include "dust/graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dust/rng.hpp"

namespace dust {

namespace {

constexpr double kColumnTolerance = 1e-12;

std::vector<Edge> ring_edges(int n) {
  std::vector<Edge> edges;
  edges.reserve(n);
  for (int j = 0; j < n; ++j) edges.push_back({j, (j + 1) % n});
  return edges;
}

std::vector<Edge> complete_edges(int n) {
  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) edges.push_back({j, i});
  return edges;
}

template <typename T>
void shuffle(std::vector<T>& v, CounterRng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[rng.below(k)]);
}

// Ring plus a few seeded chords, so out-degrees differ and the out-degree
// weights are column- but not row-stochastic.
std::vector<Edge> unbalanced_base(int n, std::uint64_t seed) {
  std::vector<Edge> edges = ring_edges(n);
  if (n < 3) return edges;
  std::set<Edge> present(edges.begin(), edges.end());
  CounterRng rng(seed, Stream::graph, {0xba5e});
  for (int k = 0; k < n / 2 + 1; ++k) {
    const int from = static_cast<int>(rng.below(n));
    const int to = static_cast<int>(rng.below(n));
    if (from != to && present.insert({from, to}).second) edges.push_back({from, to});
  }
  return edges;
}

RoundGraph random_bconnected_round(int n, int window, std::uint64_t seed, int t) {
  const int k = (t - 1) / window;
  const int offset = (t - 1) % window;

  // One random Hamiltonian cycle per window, its edges spread over the
  // window's rounds.
  CounterRng window_rng(seed, Stream::graph, {0xc1c1e, static_cast<std::uint64_t>(k)});
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  shuffle(order, window_rng);

  std::set<Edge> edges;
  for (int m = 0; m < n; ++m) {
    const Edge e{order[m], order[(m + 1) % n]};
    if (static_cast<int>(window_rng.below(window)) == offset) edges.insert(e);
  }

  CounterRng round_rng(seed, Stream::graph, {0xe47a, static_cast<std::uint64_t>(t)});
  for (int from = 0; from < n; ++from) {
    for (int to = 0; to < n; ++to) {
      if (from != to && round_rng.uniform() < 1.0 / (2.0 * n)) edges.insert({from, to});
    }
  }
  return RoundGraph{t, n, {edges.begin(), edges.end()}};
}

}  // namespace

void RoundGraph::check() const {
  if (n < 1) throw std::invalid_argument("round graph needs at least one node");
  std::set<Edge> seen;
  for (const auto& e : edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw std::invalid_argument("edge endpoint out of range in round " + std::to_string(round));
    if (e.from == e.to)
      throw std::invalid_argument("explicit self-loop in round " + std::to_string(round));
    if (!seen.insert(e).second)
      throw std::invalid_argument("duplicate edge in round " + std::to_string(round));
  }
}

MixingMatrix::MixingMatrix(Eigen::MatrixXd weights, double floor)
    : w_(std::move(weights)), floor_(floor) {
  if (w_.rows() != w_.cols()) throw std::invalid_argument("mixing matrix must be square");
}

double MixingMatrix::column_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < w_.cols(); ++j) worst = std::max(worst, std::abs(w_.col(j).sum() - 1.0));
  return worst;
}

double MixingMatrix::min_positive() const {
  double best = 1.0;
  for (Eigen::Index j = 0; j < w_.cols(); ++j)
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      if (w_(i, j) > 0.0) best = std::min(best, w_(i, j));
  return best;
}

MixingMatrix build_out_degree_mixing(const RoundGraph& g) {
  g.check();
  std::vector<int> degree(g.n, 1);
  for (const auto& e : g.edges) ++degree[e.from];

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n, g.n);
  for (int j = 0; j < g.n; ++j) w(j, j) = 1.0 / degree[j];
  for (const auto& e : g.edges) w(e.to, e.from) = 1.0 / degree[e.from];
  return MixingMatrix(std::move(w), 1.0 / g.n);
}

GraphKind parse_graph_kind(std::string_view name) {
  if (name == "static_ring") return GraphKind::static_ring;
  if (name == "static_complete") return GraphKind::static_complete;
  if (name == "cyclic_partition") return GraphKind::cyclic_partition;
  if (name == "random_bconnected") return GraphKind::random_bconnected;
  throw std::invalid_argument("unknown graph kind: " + std::string(name));
}

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::static_ring: return "static_ring";
    case GraphKind::static_complete: return "static_complete";
    case GraphKind::cyclic_partition: return "cyclic_partition";
    case GraphKind::random_bconnected: return "random_bconnected";
  }
  return "?";
}

GraphSequence::GraphSequence(int n, int window, Generator generator)
    : n_(n), window_(window), generator_(std::move(generator)) {
  if (n < 1) throw std::invalid_argument("graph sequence needs at least one node");
  if (window < 1) throw std::invalid_argument("connectivity window must be positive");
}

GraphSequence GraphSequence::cycle(int n, int window, std::vector<std::vector<Edge>> rounds) {
  if (rounds.empty()) throw std::invalid_argument("cyclic sequence needs at least one round");
  return GraphSequence(n, window, [n, rounds = std::move(rounds)](int t) {
    const auto& edges = rounds[static_cast<std::size_t>(t - 1) % rounds.size()];
    return RoundGraph{t, n, edges};
  });
}

RoundGraph GraphSequence::graph(int t) const {
  if (t < 1) throw std::invalid_argument("rounds are numbered from 1");
  return generator_(t);
}

GraphSequence generate_sequence(GraphKind kind, int n, int window, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("graph sequence needs n >= 2");
  if (window < 1) throw std::invalid_argument("connectivity window must be >= 1");

  switch (kind) {
    case GraphKind::static_ring:
      return GraphSequence::cycle(n, window, {ring_edges(n)});
    case GraphKind::static_complete:
      return GraphSequence::cycle(n, window, {complete_edges(n)});
    case GraphKind::cyclic_partition: {
      // Every edge of the strongly connected base lands in exactly one of
      // the B subsets, so any B consecutive rounds cover the base graph.
      std::vector<Edge> base = unbalanced_base(n, seed);
      CounterRng rng(seed, Stream::graph, {0x5bf1});
      shuffle(base, rng);
      std::vector<std::vector<Edge>> subsets(window);
      for (std::size_t k = 0; k < base.size(); ++k) subsets[k % window].push_back(base[k]);
      for (auto& s : subsets) std::sort(s.begin(), s.end());
      return GraphSequence::cycle(n, window, std::move(subsets));
    }
    case GraphKind::random_bconnected:
      return GraphSequence(n, window, [n, window, seed](int t) {
        return random_bconnected_round(n, window, seed, t);
      });
  }
  throw std::invalid_argument("unknown graph kind");
}

bool strongly_connected(int n, std::span<const Edge> edges) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) adj[e.from].push_back(e.to);
  std::vector<int> stack;
  std::vector<char> seen(n);
  for (int source = 0; source < n; ++source) {
    std::fill(seen.begin(), seen.end(), 0);
    seen[source] = 1;
    stack.assign(1, source);
    int reached = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          stack.push_back(v);
        }
      }
    }
    if (reached != n) return false;
  }
  return true;
}

std::string Assumption1Report::summary() const {
  std::ostringstream os;
  os << "rounds=" << rounds_checked << " windows=" << windows_checked
     << " max_column_error=" << max_column_error << " min_weight=" << min_positive_weight;
  if (!column_sum_issues.empty())
    os << "; column sums off in " << column_sum_issues.size() << " columns (first round "
       << column_sum_issues.front().round << ")";
  if (!floor_issues.empty())
    os << "; weights below floor in " << floor_issues.size() << " columns (first round "
       << floor_issues.front().round << ")";
  if (!connectivity_issues.empty())
    os << "; " << connectivity_issues.size() << " windows not strongly connected (first rounds "
       << connectivity_issues.front().first_round << ".." << connectivity_issues.front().last_round
       << ")";
  return os.str();
}

Assumption1Report validate_assumption1(const GraphSequence& seq, int horizon, double floor) {
  if (horizon < seq.window())
    throw std::invalid_argument("validation horizon must cover at least one window");

  Assumption1Report report;
  const int n = seq.nodes();
  const int window = seq.window();
  std::set<Edge> window_union;

  for (int t = 1; t <= horizon; ++t) {
    const RoundGraph g = seq.graph(t);
    const MixingMatrix w = build_out_degree_mixing(g);
    for (int j = 0; j < n; ++j) {
      const double col = w.weights().col(j).sum();
      const double err = std::abs(col - 1.0);
      report.max_column_error = std::max(report.max_column_error, err);
      if (err > kColumnTolerance) report.column_sum_issues.push_back({t, j, col});
      for (int i = 0; i < n; ++i) {
        const double v = w(i, j);
        if (v > 0.0) {
          report.min_positive_weight = std::min(report.min_positive_weight, v);
          if (v < floor) report.floor_issues.push_back({t, j, v});
        }
      }
    }
    ++report.rounds_checked;

    window_union.insert(g.edges.begin(), g.edges.end());
    if (t % window == 0) {
      const std::vector<Edge> edges(window_union.begin(), window_union.end());
      const int k = t / window - 1;
      if (!strongly_connected(n, edges)) report.connectivity_issues.push_back({k, k * window + 1, t});
      ++report.windows_checked;
      window_union.clear();
    }
  }
  return report;
}

void write_edge_csv(std::ostream& out, const GraphSequence& seq, int horizon) {
  out << "t,from,to,weight\n";
  out.precision(17);
  for (int t = 1; t <= horizon; ++t) {
    const MixingMatrix w = seq.mixing(t);
    for (int j = 0; j < w.size(); ++j)
      for (int i = 0; i < w.size(); ++i)
        if (w(i, j) > 0.0) out << t << ',' << j + 1 << ',' << i + 1 << ',' << w(i, j) << '\n';
  }
}

}  // namespace dust
