#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dust {

/// Directed edge: `to` receives messages from `from`. Nodes are 0-based.
struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Communication graph of a single round. Self-loops are implicit.
struct RoundGraph {
  int round = 1;
  int n = 0;
  std::vector<Edge> edges;

  /// Throws std::invalid_argument on out-of-range nodes, explicit self-loops
  /// or duplicate edges.
  void check() const;
};

/// Column-stochastic weights W_t: entry (i, j) is the weight node j puts on
/// the message it sends to node i.
class MixingMatrix {
 public:
  MixingMatrix(Eigen::MatrixXd weights, double floor);

  const Eigen::MatrixXd& weights() const { return w_; }
  double floor() const { return floor_; }
  int size() const { return static_cast<int>(w_.rows()); }
  double operator()(int i, int j) const { return w_(i, j); }

  /// max_j |sum_i w_ij - 1|
  double column_sum_error() const;
  /// Smallest strictly positive entry.
  double min_positive() const;

 private:
  Eigen::MatrixXd w_;
  double floor_;
};

/// w_ij = 1/d_j for every out-neighbour i of j (j included), 0 otherwise.
MixingMatrix build_out_degree_mixing(const RoundGraph& g);

enum class GraphKind { static_ring, static_complete, cyclic_partition, random_bconnected };

GraphKind parse_graph_kind(std::string_view name);
std::string_view to_string(GraphKind kind);

/// A time-varying graph t -> G_t with a declared connectivity window B.
/// Round graphs are produced on demand from a pure generator, so any round
/// can be rebuilt without iterating the ones before it.
class GraphSequence {
 public:
  using Generator = std::function<RoundGraph(int)>;

  GraphSequence(int n, int window, Generator generator);

  /// Round t uses rounds[(t - 1) % rounds.size()].
  static GraphSequence cycle(int n, int window, std::vector<std::vector<Edge>> rounds);

  int nodes() const { return n_; }
  int window() const { return window_; }

  RoundGraph graph(int t) const;
  MixingMatrix mixing(int t) const { return build_out_degree_mixing(graph(t)); }

 private:
  int n_;
  int window_;
  Generator generator_;
};

/// Deterministic in (kind, n, window, seed). Throws std::invalid_argument for
/// n < 2 or window < 1.
GraphSequence generate_sequence(GraphKind kind, int n, int window, std::uint64_t seed);

/// Reachability from every node over the given edge set.
bool strongly_connected(int n, std::span<const Edge> edges);

struct Assumption1Report {
  struct ColumnIssue {
    int round;
    int column;
    double value;
  };
  struct WindowIssue {
    int window;  // k, covering rounds kB+1 .. (k+1)B
    int first_round;
    int last_round;
  };

  std::vector<ColumnIssue> column_sum_issues;
  std::vector<ColumnIssue> floor_issues;
  std::vector<WindowIssue> connectivity_issues;
  double max_column_error = 0.0;
  double min_positive_weight = 1.0;
  int rounds_checked = 0;
  int windows_checked = 0;

  bool ok() const {
    return column_sum_issues.empty() && floor_issues.empty() && connectivity_issues.empty();
  }
  std::string summary() const;
};

/// Checks the three network conditions over rounds 1..horizon: positive
/// weights at least `floor`, column sums within 1e-12 of one, and strong
/// connectivity of the union graph over every complete window.
/// Violations are reported, never thrown.
Assumption1Report validate_assumption1(const GraphSequence& seq, int horizon, double floor);

/// CSV dump `t,from,to,weight` of every positive weight, self-weights
/// included. Node ids are written 1-based.
void write_edge_csv(std::ostream& out, const GraphSequence& seq, int horizon);

}  // namespace dust
