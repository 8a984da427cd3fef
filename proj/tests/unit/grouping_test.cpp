#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "depshap/distributions.hpp"
#include "depshap/errors.hpp"
#include "depshap/grouping.hpp"

using namespace depshap;

namespace {

double naive_tau(const std::vector<double>& a, const std::vector<double>& b) {
  const auto n = static_cast<std::int64_t>(a.size());
  std::int64_t sum = 0;
  auto sign = [](double v) { return (v > 0) - (v < 0); };
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t l = 0; l < n; ++l) {
      if (i != l) sum += sign(a[i] - a[l]) * sign(b[i] - b[l]);
    }
  }
  return static_cast<double>(sum) / static_cast<double>(n * (n - 1));
}

Eigen::MatrixXd planted_blocks(int blocks, int width, int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, blocks * width);
  for (int i = 0; i < n; ++i) {
    for (int b = 0; b < blocks; ++b) {
      const double z = normal(rng);
      for (int w = 0; w < width; ++w) x(i, b * width + w) = z + noise * normal(rng);
    }
  }
  return x;
}

Eigen::MatrixXd three_feature_example() {
  Eigen::Matrix3d d;
  d << 0, 0.1, 0.9, 0.1, 0, 0.9, 0.9, 0.9, 0;
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Kendall's tau

TEST(KendallTau, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> neg(x.size());
  std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
  EXPECT_EQ(kendall_tau(x, x), 1.0);
  EXPECT_EQ(kendall_tau(x, neg), -1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}), 1.0 / 3.0);
}

TEST(KendallTau, TiesCountAsZero) {
  const std::vector<double> a{1, 1, 2};
  const std::vector<double> b{1, 2, 3};
  // Pairs (1,2): 0, (1,3): +1, (2,3): +1, both orders: 4 / 6.
  EXPECT_DOUBLE_EQ(kendall_tau(a, b), 2.0 / 3.0);
  EXPECT_EQ(kendall_tau(std::vector<double>{3, 3, 3}, b), 0.0);
}

TEST(KendallTau, Errors) {
  EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  EXPECT_THROW(kendall_tau(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DomainError);
  EXPECT_THROW(kendall_tau(std::vector<double>{1, NAN}, std::vector<double>{1, 2}), DomainError);
}

TEST(KendallTau, FastEqualsDefinitionExactly) {
  std::mt19937_64 rng(111);
  std::uniform_int_distribution<int> size(2, 80);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    const bool ties = trial % 2 == 1;
    std::uniform_int_distribution<int> level(0, 1 + trial % 7);
    std::vector<double> a(static_cast<std::size_t>(n));
    std::vector<double> b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[i] = ties ? level(rng) : normal(rng);
      b[i] = ties ? level(rng) : 0.5 * a[i] + normal(rng);
    }
    ASSERT_EQ(kendall_tau(a, b), naive_tau(a, b)) << "trial " << trial << " n " << n;
  }
}

TEST(Dissimilarity, PropertiesAndRankInvariance) {
  Eigen::MatrixXd x = sample_equicorrelated_gaussian(4, 0.0, 2000, 112).data();
  x.col(3) = x.col(0);
  const Eigen::MatrixXd d = dissimilarity(x);
  EXPECT_EQ(d, d.transpose());
  EXPECT_EQ(d.diagonal(), Eigen::VectorXd::Zero(4));
  EXPECT_EQ(d(0, 3), 0.0);
  EXPECT_GE(d(0, 1), 0.9);
  EXPECT_GE(d(1, 2), 0.9);
  Eigen::MatrixXd t = x;
  t.col(1) = t.col(1).array().exp();
  t.col(2) = t.col(2).array().pow(3);
  EXPECT_EQ(dissimilarity(t), d);
  EXPECT_EQ(dissimilarity(x, nullptr, 3), d);
}

TEST(Dissimilarity, ConstantColumn) {
  Eigen::MatrixXd x = sample_equicorrelated_gaussian(3, 0.5, 100, 113).data();
  x.col(1).setConstant(2.0);
  Diagnostics diag;
  const Eigen::MatrixXd d = dissimilarity(x, &diag);
  EXPECT_EQ(d(0, 1), 1.0);
  EXPECT_EQ(d(2, 1), 1.0);
  EXPECT_FALSE(diag.empty());
}

// ---------------------------------------------------------------------------
// Complete linkage

TEST(CompleteLinkage, HandTrace) {
  const Dendrogram tree = complete_linkage(three_feature_example());
  ASSERT_EQ(tree.merges.size(), 2u);
  EXPECT_EQ(tree.merges[0].a, 0);
  EXPECT_EQ(tree.merges[0].b, 1);
  EXPECT_EQ(tree.merges[0].height, 0.1);
  EXPECT_EQ(tree.merges[0].size, 2);
  EXPECT_EQ(tree.merges[1].a, 2);
  EXPECT_EQ(tree.merges[1].b, 3);
  EXPECT_EQ(tree.merges[1].height, 0.9);
  EXPECT_EQ(tree.merges[1].size, 3);
  EXPECT_EQ(tree.cut(2), (std::vector<std::vector<int>>{{0, 1}, {2}}));
  EXPECT_EQ(tree.cut(1), (std::vector<std::vector<int>>{{0, 1, 2}}));
}

TEST(CompleteLinkage, LinkageIsMaximumPairwise) {
  Eigen::Matrix4d d;
  d << 0, 0.1, 0.5, 0.8,  //
      0.1, 0, 0.7, 0.2,   //
      0.5, 0.7, 0, 0.3,   //
      0.8, 0.2, 0.3, 0;
  const Dendrogram tree = complete_linkage(d);
  EXPECT_EQ(tree.merges[0].height, 0.1);
  EXPECT_EQ(tree.merges[1].height, 0.3);
  EXPECT_EQ(tree.merges[2].height, 0.8);
}

TEST(CompleteLinkage, BlocksMergeFirst) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(6, 6, 0.7);
  for (int i : {0, 2, 4}) {
    for (int j : {0, 2, 4}) d(i, j) = 0.0;
  }
  for (int i : {1, 3, 5}) {
    for (int j : {1, 3, 5}) d(i, j) = 0.0;
  }
  const Dendrogram tree = complete_linkage(d);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(tree.merges[static_cast<std::size_t>(i)].height, 0.0);
  EXPECT_EQ(tree.merges[4].height, 0.7);
  EXPECT_EQ(tree.cut(2), (std::vector<std::vector<int>>{{0, 2, 4}, {1, 3, 5}}));
}

TEST(CompleteLinkage, HeightsNonDecreasingOnRandomMatrices) {
  std::mt19937_64 rng(114);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 2 + trial % 12;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) d(i, j) = d(j, i) = u(rng);
    }
    const Dendrogram tree = complete_linkage(d);
    ASSERT_EQ(tree.merges.size(), static_cast<std::size_t>(m - 1));
    for (std::size_t k = 1; k < tree.merges.size(); ++k) {
      EXPECT_GE(tree.merges[k].height, tree.merges[k - 1].height);
    }
    std::vector<int> order = tree.leaf_order();
    std::sort(order.begin(), order.end());
    std::vector<int> expected(static_cast<std::size_t>(m));
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(order, expected);
  }
}

TEST(CompleteLinkage, RejectsInvalidMatrix) {
  Eigen::Matrix2d d;
  d << 0, 0.2, 0.3, 0;
  EXPECT_THROW(complete_linkage(d), DomainError);
  EXPECT_THROW(complete_linkage(Eigen::MatrixXd::Zero(2, 3)), DomainError);
}

// ---------------------------------------------------------------------------
// KGS cut

TEST(KgsCut, TwoSeparatedBlocks) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(6, 6, 0.9);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if ((i < 3) == (j < 3)) d(i, j) = 0.0;
    }
  }
  const ClusterAssignment a = kgs_cut(complete_linkage(d), d, 1.0);
  EXPECT_EQ(a.groups, (std::vector<std::vector<int>>{{0, 1, 2}, {3, 4, 5}}));
  EXPECT_EQ(a.labels, (std::vector<std::string>{"g1", "g2"}));
  ASSERT_EQ(a.penalty_table.size(), 4u);
  EXPECT_EQ(a.penalty_table.front().clusters, 2);
}

TEST(KgsCut, PenaltyTableByHand) {
  // Three-feature example: the only level is c = 2 with spread 0.1.
  const Eigen::MatrixXd d = three_feature_example();
  const ClusterAssignment a = kgs_cut(complete_linkage(d), d, 1.0);
  ASSERT_EQ(a.penalty_table.size(), 1u);
  EXPECT_DOUBLE_EQ(a.penalty_table[0].average_spread, 0.1);
  EXPECT_EQ(a.penalty_table[0].normalized_spread, 1.0);
  EXPECT_DOUBLE_EQ(a.penalty_table[0].penalty, 3.0);
  // Leaf order is 3, 1, 2: the final merge joins leaf 3 with cluster {1,2}.
  EXPECT_EQ(a.dendrogram.leaf_order(), (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(a.groups, (std::vector<std::vector<int>>{{2}, {0, 1}}));
}

TEST(KgsCut, ClusterCountNonIncreasingInAlpha) {
  const Eigen::MatrixXd x = planted_blocks(3, 4, 400, 1.0, 115);
  const Eigen::MatrixXd d = dissimilarity(x);
  const Dendrogram tree = complete_linkage(d);
  std::size_t previous = std::numeric_limits<std::size_t>::max();
  for (double alpha : {0.001, 0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
    const std::size_t count = kgs_cut(tree, d, alpha).groups.size();
    EXPECT_LE(count, previous) << "alpha " << alpha;
    previous = count;
  }
}

TEST(KgsCut, IdenticalFeaturesFormOneCluster) {
  Eigen::MatrixXd x(50, 4);
  const Eigen::VectorXd base = sample_equicorrelated_gaussian(1, 0.0, 50, 116).data().col(0);
  for (int j = 0; j < 4; ++j) x.col(j) = base;
  const Eigen::MatrixXd d = dissimilarity(x);
  for (double alpha : {0.01, 1.0, 100.0}) {
    EXPECT_EQ(kgs_cut(complete_linkage(d), d, alpha).groups.size(), 1u);
  }
}

TEST(KgsCut, SmallFeatureCounts) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_EQ(kgs_cut(complete_linkage(one), one).groups.size(), 1u);
  Eigen::Matrix2d two;
  two << 0, 0.4, 0.4, 0;
  EXPECT_EQ(kgs_cut(complete_linkage(two), two).groups.size(), 2u);
  EXPECT_THROW(kgs_cut(complete_linkage(two), two, 0.0), DomainError);
}

TEST(KgsCut, RecoversPlantedBlocks) {
  const int blocks = 4;
  const int width = 7;
  const Eigen::MatrixXd x = planted_blocks(blocks, width, 500, 0.3, 117);
  const Eigen::MatrixXd d = dissimilarity(x);
  const ClusterAssignment a = kgs_cut(complete_linkage(d), d, 1.0);
  ASSERT_EQ(a.groups.size(), static_cast<std::size_t>(blocks));
  std::vector<std::vector<int>> sorted = a.groups;
  std::sort(sorted.begin(), sorted.end());
  for (int b = 0; b < blocks; ++b) {
    std::vector<int> expected(width);
    std::iota(expected.begin(), expected.end(), b * width);
    EXPECT_EQ(sorted[static_cast<std::size_t>(b)], expected);
  }
}

TEST(KgsCut, InvariantToFeatureOrder) {
  const Eigen::MatrixXd x = planted_blocks(3, 3, 300, 0.8, 118);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(119));
  Eigen::MatrixXd permuted(x.rows(), 9);
  for (int j = 0; j < 9; ++j) permuted.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
  const Eigen::MatrixXd d = dissimilarity(x);
  const Eigen::MatrixXd dp = dissimilarity(permuted);
  const ClusterAssignment a = kgs_cut(complete_linkage(d), d, 0.5);
  const ClusterAssignment b = kgs_cut(complete_linkage(dp), dp, 0.5);
  std::vector<std::vector<int>> mapped;
  for (const auto& g : b.groups) {
    std::vector<int> original;
    for (int j : g) original.push_back(perm[static_cast<std::size_t>(j)]);
    std::sort(original.begin(), original.end());
    mapped.push_back(original);
  }
  std::vector<std::vector<int>> expected = a.groups;
  std::sort(mapped.begin(), mapped.end());
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(mapped, expected);
}

// ---------------------------------------------------------------------------
// Aggregation

TEST(Aggregate, SumsMembers) {
  Explanation e;
  e.phi0 = 0.5;
  e.phi = Eigen::Vector3d(0.2, -0.5, 1.0);
  e.prediction = 1.2;
  const GroupExplanation g = aggregate_shapley(e, assignment_from_groups({{0, 1}, {2}}, 3));
  EXPECT_DOUBLE_EQ(g.phi(0), -0.3);
  EXPECT_DOUBLE_EQ(g.phi(1), 1.0);
  EXPECT_EQ(g.phi0, 0.5);
  EXPECT_EQ(g.waterfall, (std::vector<int>{1, 0}));
  EXPECT_NEAR(g.phi0 + g.phi.sum(), e.prediction, 1e-15);
}

TEST(Aggregate, SingletonsAndWhole) {
  Explanation e;
  e.phi0 = -1.0;
  e.phi = Eigen::Vector4d(0.1, 0.2, -0.3, 0.4);
  e.prediction = e.total();
  const GroupExplanation single = aggregate_shapley(e, assignment_from_groups({{0}, {1}, {2}, {3}}, 4));
  EXPECT_EQ(single.phi, e.phi);
  const GroupExplanation whole = aggregate_shapley(e, assignment_from_groups({{0, 1, 2, 3}}, 4));
  EXPECT_DOUBLE_EQ(whole.phi(0), e.prediction - e.phi0);
}

TEST(Aggregate, PartitionMismatch) {
  Explanation e;
  e.phi = Eigen::Vector3d(1, 2, 3);
  EXPECT_THROW(assignment_from_groups({{0, 1}, {1, 2}}, 3), DomainError);
  EXPECT_THROW(assignment_from_groups({{0, 1}}, 3), DomainError);
  EXPECT_THROW(aggregate_shapley(e, assignment_from_groups({{0, 1}, {2, 3}}, 4)), DomainError);
}

TEST(Aggregate, RandomPartitionsPreserveEfficiency) {
  std::mt19937_64 rng(120);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 2 + trial % 9;
    Explanation e;
    e.phi0 = normal(rng);
    e.phi = Eigen::VectorXd::NullaryExpr(m, [&]() { return normal(rng); });
    e.prediction = e.total();
    std::uniform_int_distribution<int> pick(0, m - 1);
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) groups[static_cast<std::size_t>(pick(rng))].push_back(j);
    std::erase_if(groups, [](const std::vector<int>& g) { return g.empty(); });
    const GroupExplanation g = aggregate_shapley(e, assignment_from_groups(groups, m));
    EXPECT_NEAR(g.phi0 + g.phi.sum(), e.prediction, 1e-12);
  }
}

TEST(AssignmentJson, Fields) {
  const Eigen::MatrixXd d = three_feature_example();
  const ClusterAssignment a = kgs_cut(complete_linkage(d), d, 0.1);
  const nlohmann::json j = nlohmann::json::parse(assignment_json(a, {"a", "b", "c"}));
  EXPECT_EQ(j["alpha"], 0.1);
  EXPECT_EQ(j["groups"][1]["features"], (std::vector<int>{1, 2}));
  EXPECT_EQ(j["groups"][1]["names"], (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(j["groups"][1]["label"], "g2");
  EXPECT_EQ(j["leaf_order"], (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(j["merges"].size(), 2u);
  EXPECT_EQ(j["penalty_table"].size(), 1u);
}
