#include <sstream>

#include <gtest/gtest.h>

#include "dust/instance_io.hpp"

namespace dust {
namespace {

ProblemInstance small_pev(std::uint64_t seed) {
  PevParams params;
  params.nodes = 3;
  params.dim = 2;
  params.coupling = 2;
  params.seed = seed;
  return make_pev_instance(params);
}

std::string replace_first(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

TEST(InstanceText, RoundTripIsExact) {
  const auto inst = small_pev(4);
  const std::string text = instance_to_string(inst);
  std::istringstream in(text);
  const auto back = read_instance(in);
  EXPECT_EQ(instance_to_string(back), text);
  EXPECT_EQ(back.fingerprint(), inst.fingerprint());
  for (int t : {1, 2, 77})
    for (int i = 0; i < inst.size(); ++i) {
      const Vector x = inst.feasible_point()[i];
      EXPECT_EQ(back.cost().evaluate(i, t, x).value, inst.cost().evaluate(i, t, x).value);
    }
  ASSERT_TRUE(back.slater().has_value());
  EXPECT_EQ(back.slater()->margin, inst.slater()->margin);
}

TEST(InstanceText, TableAndPiecewiseCostsRoundTrip) {
  std::vector<NodeProblem> nodes = {
      {FeasibleSet::ball(Vector::Zero(2), 2.0), AffineConstraint{Matrix::Ones(1, 2), Vector::Constant(1, -1.0)}},
      {FeasibleSet::box(-Vector::Ones(2), Vector::Ones(2)), AffineConstraint{Matrix::Ones(1, 2), Vector::Constant(1, -0.5)}},
  };
  const std::vector<Vector> zero(2, Vector::Zero(2));
  std::vector<std::vector<QuadraticCoeffs>> table = {
      {{0.75, Vector::Constant(2, 0.1)}, {1.25, Vector::Constant(2, -0.3)}},
      {{2.0, Vector::Constant(2, 1.0 / 3.0)}, {0.5, Vector::Zero(2)}},
  };
  const ProblemInstance quadratic(nodes, std::make_shared<TableQuadraticCost>(table), zero);
  const ProblemInstance piecewise(
      nodes, std::make_shared<PiecewiseLinearCost>(5, std::vector<Vector>(2, Vector::Constant(2, 0.7)), -1.0, 1.0), zero);
  for (const auto* inst : {&quadratic, &piecewise}) {
    const std::string text = instance_to_string(*inst);
    std::istringstream in(text);
    const auto back = read_instance(in);
    EXPECT_EQ(instance_to_string(back), text);
    EXPECT_EQ(back.cost().family(), inst->cost().family());
  }
}

TEST(InstanceText, ErrorsCarryTheLineNumber) {
  const std::string text = instance_to_string(small_pev(1));
  auto expect_line = [](const std::string& bad, const std::string& line) {
    std::istringstream in(bad);
    try {
      read_instance(in);
      ADD_FAILURE() << "accepted a malformed instance";
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find("line " + line), std::string::npos) << e.what();
    }
  };
  expect_line(replace_first(text, "dust-instance v1", "dust-instance v9"), "1");
  expect_line(replace_first(text, "coupling 2", "coupling two"), "3");
  expect_line(replace_first(text, "set capped_box", "set simplex"), "5");
}

TEST(InstanceText, RejectsInfeasibleStoredPoint) {
  std::vector<NodeProblem> nodes(2, NodeProblem{FeasibleSet::box(Vector::Zero(1), Vector::Ones(1)),
                                                AffineConstraint{Matrix::Ones(1, 1), Vector::Constant(1, -0.25)}});
  const ProblemInstance inst(nodes, std::make_shared<TableQuadraticCost>(std::vector<std::vector<QuadraticCoeffs>>(2, {QuadraticCoeffs{1.0, Vector::Zero(1)}})),
                             std::vector<Vector>(2, Vector::Zero(1)));
  std::string text = instance_to_string(inst);
  // Moving both stored points to 1 gives sum g = 1.5 > 0.
  std::string bad = text;
  for (int k = 0; k < 2; ++k) bad = replace_first(bad, "feasible\n0\n", "feasible\n1\n");
  std::istringstream in(bad);
  EXPECT_THROW(read_instance(in), std::invalid_argument);
}

}  // namespace
}  // namespace dust
