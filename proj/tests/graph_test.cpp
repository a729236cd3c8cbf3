#include <cstring>
#include <sstream>

#include <gtest/gtest.h>

#include "dust/graph.hpp"

namespace dust {
namespace {

TEST(OutDegreeMixing, SingleEdgeSplitsSenderWeight) {
  const RoundGraph g{1, 2, {{0, 1}}};
  const auto w = build_out_degree_mixing(g);
  EXPECT_DOUBLE_EQ(w(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(w(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(w(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(w(1, 1), 1.0);
}

TEST(OutDegreeMixing, NoEdgesGivesIdentity) {
  const auto w = build_out_degree_mixing(RoundGraph{1, 3, {}});
  EXPECT_TRUE(w.weights().isApprox(Eigen::MatrixXd::Identity(3, 3)));
}

TEST(OutDegreeMixing, CompleteDigraphIsUniform) {
  RoundGraph g{1, 3, {}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) g.edges.push_back({i, j});
  const auto w = build_out_degree_mixing(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(w(i, j), 1.0 / 3.0);
}

TEST(RoundGraph, RejectsMalformedEdges) {
  EXPECT_THROW((RoundGraph{1, 2, {{0, 2}}}.check()), std::invalid_argument);
  EXPECT_THROW((RoundGraph{1, 2, {{1, 1}}}.check()), std::invalid_argument);
  EXPECT_THROW((RoundGraph{1, 2, {{0, 1}, {0, 1}}}.check()), std::invalid_argument);
}

TEST(Assumption1, StaticRingPassesWithWindowOne) {
  const auto seq = generate_sequence(GraphKind::static_ring, 5, 1, 7);
  const auto report = validate_assumption1(seq, 20, 1.0 / 5);
  EXPECT_TRUE(report.ok()) << report.summary();
  EXPECT_EQ(report.windows_checked, 20);
}

TEST(Assumption1, AlternatingRingHalvesNeedWindowTwo) {
  const std::vector<std::vector<Edge>> halves = {{{0, 1}, {2, 3}}, {{1, 2}, {3, 0}}};
  const auto pass = GraphSequence::cycle(4, 2, halves);
  EXPECT_TRUE(validate_assumption1(pass, 10, 0.25).ok());

  const auto fail = GraphSequence::cycle(4, 1, halves);
  const auto report = validate_assumption1(fail, 10, 0.25);
  EXPECT_FALSE(report.ok());
  EXPECT_EQ(report.connectivity_issues.size(), 10u);
  EXPECT_TRUE(report.column_sum_issues.empty());
}

TEST(Assumption1, EmptyGraphsFailEveryWindow) {
  const auto seq = GraphSequence::cycle(3, 2, {{}});
  const auto report = validate_assumption1(seq, 8, 1.0 / 3);
  ASSERT_EQ(report.connectivity_issues.size(), 4u);
  EXPECT_EQ(report.connectivity_issues[1].first_round, 3);
  EXPECT_EQ(report.connectivity_issues[1].last_round, 4);
}

TEST(GenerateSequence, StaticRingRepeatsOneCycle) {
  const auto seq = generate_sequence(GraphKind::static_ring, 3, 1, 99);
  const auto first = seq.graph(1).edges;
  EXPECT_EQ(first.size(), 3u);
  EXPECT_TRUE(strongly_connected(3, first));
  for (int t = 2; t <= 6; ++t) EXPECT_EQ(seq.graph(t).edges, first);
}

TEST(GenerateSequence, CyclicPartitionAlternatesSubsets) {
  const auto seq = generate_sequence(GraphKind::cyclic_partition, 4, 2, 5);
  EXPECT_EQ(seq.graph(1).edges, seq.graph(3).edges);
  EXPECT_EQ(seq.graph(2).edges, seq.graph(4).edges);
  EXPECT_NE(seq.graph(1).edges, seq.graph(2).edges);
  EXPECT_TRUE(validate_assumption1(seq, 12, 0.25).ok());
}

TEST(GenerateSequence, RejectsTooFewNodesOrZeroWindow) {
  EXPECT_THROW(generate_sequence(GraphKind::static_ring, 1, 1, 1), std::invalid_argument);
  EXPECT_THROW(generate_sequence(GraphKind::cyclic_partition, 4, 0, 1), std::invalid_argument);
  EXPECT_THROW(parse_graph_kind("torus"), std::invalid_argument);
}

TEST(GenerateSequence, SameSeedSameMatrices) {
  for (auto kind : {GraphKind::cyclic_partition, GraphKind::random_bconnected}) {
    const auto a = generate_sequence(kind, 6, 3, 11);
    const auto b = generate_sequence(kind, 6, 3, 11);
    for (int t = 1; t <= 30; ++t) {
      const Eigen::MatrixXd wa = a.mixing(t).weights();
      const Eigen::MatrixXd wb = b.mixing(t).weights();
      EXPECT_EQ(0, std::memcmp(wa.data(), wb.data(), sizeof(double) * wa.size())) << "round " << t;
    }
  }
}

// Every generated matrix is column-stochastic with entries at least 1/n.
TEST(GenerateSequence, MixingPropertiesOverKindsAndSizes) {
  for (auto kind : {GraphKind::static_ring, GraphKind::static_complete, GraphKind::cyclic_partition,
                    GraphKind::random_bconnected}) {
    for (int n = 2; n <= 8; n += 3) {
      const auto seq = generate_sequence(kind, n, 3, 17);
      for (int t = 1; t <= 12; ++t) {
        const auto w = seq.mixing(t);
        EXPECT_LE(w.column_sum_error(), 1e-12);
        EXPECT_GE(w.min_positive(), 1.0 / n - 1e-15);
      }
    }
  }
}

TEST(GenerateSequence, CyclicPartitionSatisfiesAssumptionOnGrid) {
  for (int n = 2; n <= 10; ++n)
    for (int b = 1; b <= 10; ++b) {
      const auto seq = generate_sequence(GraphKind::cyclic_partition, n, b, 1000 + n * 17 + b);
      const auto report = validate_assumption1(seq, 3 * b, 1.0 / n);
      EXPECT_TRUE(report.ok()) << "n=" << n << " B=" << b << ": " << report.summary();
    }
}

TEST(GenerateSequence, RandomWindowsStayConnected) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto seq = generate_sequence(GraphKind::random_bconnected, 7, 4, seed);
    EXPECT_TRUE(validate_assumption1(seq, 40, 1.0 / 7).ok());
  }
}

TEST(EdgeCsv, WritesOneBasedIdsWithSelfWeights) {
  const auto seq = GraphSequence::cycle(2, 1, {{{0, 1}}});
  std::ostringstream out;
  write_edge_csv(out, seq, 1);
  EXPECT_EQ(out.str(), "t,from,to,weight\n1,1,1,0.5\n1,1,2,0.5\n1,2,2,1\n");
}

}  // namespace
}  // namespace dust
