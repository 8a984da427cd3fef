#include <gtest/gtest.h>

#include <cmath>

#include "depshap/aicc.hpp"
#include "depshap/distributions.hpp"
#include "depshap/errors.hpp"

using namespace depshap;

namespace {

struct NaiveAicc {
  double trace = 0.0;
  double tau2 = 0.0;
};

// Entry-by-entry H_ij = w_ij / sum_l w_il with scaled Mahalanobis distances.
NaiveAicc naive_aicc(const TrainingMatrix& train, const std::vector<Eigen::Index>& rows, Coalition s,
                     const Eigen::VectorXd& responses, double sigma) {
  const std::vector<int> cols = s.members();
  const auto d = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd block(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) block(a, b) = train.covariance()(cols[a], cols[b]);
  }
  const Eigen::MatrixXd precision = block.inverse();
  const auto n = static_cast<Eigen::Index>(rows.size());
  NaiveAicc out;
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd diff(d);
      for (Eigen::Index a = 0; a < d; ++a) {
        diff(a) = train.data()(rows[i], cols[a]) - train.data()(rows[j], cols[a]);
      }
      const double d2 = diff.dot(precision * diff) / static_cast<double>(d);
      w[j] = std::exp(-d2 / (2.0 * sigma * sigma));
      total += w[j];
    }
    double fitted = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double h = w[j] / total;
      if (i == j) out.trace += h;
      fitted += h * responses(j);
    }
    rss += (responses(i) - fitted) * (responses(i) - fitted);
  }
  out.tau2 = rss / static_cast<double>(n);
  return out;
}

}  // namespace

TEST(Aicc, HatMatrixMatchesNaiveDoubleLoop) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(4, 0.5, 500, 61);
  const FunctionModel f([](const Eigen::MatrixXd& x) {
    return Eigen::VectorXd((x.col(0).array() * x.col(1).array() + x.col(2).array().cos() + x.col(3).array()).matrix());
  });
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -0.5, 0.7);
  for (std::uint64_t bits : {0b0001u, 0b0110u, 0b1011u}) {
    const Coalition s(bits);
    const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), 100, 5);
    ASSERT_EQ(rows.size(), 100u);
    const AiccProblem problem = build_aicc_problem(train, f, s, x, rows);
    for (double sigma : {0.05, 0.1, 0.4, 1.6}) {
      const AiccScore fast = aicc_criterion(problem.distances2, problem.responses, sigma, AiccPenalty::kCorrected);
      const NaiveAicc slow = naive_aicc(train, rows, s, problem.responses, sigma);
      EXPECT_NEAR(fast.trace, slow.trace, 1e-10) << s.to_string() << " sigma " << sigma;
      EXPECT_NEAR(fast.tau2, slow.tau2, 1e-10) << s.to_string() << " sigma " << sigma;
    }
  }
}

TEST(Aicc, ResponsesAreModelAtConditionedRows) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.2, 50, 62);
  const LinearModel f(0.0, Eigen::Vector3d(1.0, 10.0, 100.0));
  const Eigen::Vector3d x(7.0, 8.0, 9.0);
  const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), 20, 1);
  const AiccProblem problem = build_aicc_problem(train, f, Coalition(0b010), x, rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double expected = train.data()(rows[i], 0) + 80.0 + 100.0 * train.data()(rows[i], 2);
    EXPECT_NEAR(problem.responses(static_cast<Eigen::Index>(i)), expected, 1e-12);
  }
}

TEST(Aicc, LargeBandwidthLimit) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(2, 0.3, 200, 63);
  const LinearModel f(0.0, Eigen::Vector2d(1.0, 1.0));
  const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), 100, 2);
  const AiccProblem problem = build_aicc_problem(train, f, Coalition(0b01), Eigen::Vector2d(0.0, 0.0), rows);
  const AiccScore s = aicc_criterion(problem.distances2, problem.responses, 1e6, AiccPenalty::kCorrected);
  // H tends to the averaging matrix: trace 1, fitted values the mean.
  EXPECT_NEAR(s.trace, 1.0, 1e-9);
  const double mean = problem.responses.mean();
  EXPECT_NEAR(s.tau2, (problem.responses.array() - mean).square().mean(), 1e-9);
}

TEST(Aicc, SmallBandwidthIsInterpolating) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(2, 0.3, 200, 64);
  const LinearModel f(0.0, Eigen::Vector2d(1.0, 1.0));
  const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), 50, 3);
  const AiccProblem problem = build_aicc_problem(train, f, Coalition(0b01), Eigen::Vector2d(0.0, 0.0), rows);
  const AiccScore s = aicc_criterion(problem.distances2, problem.responses, 1e-6, AiccPenalty::kCorrected);
  EXPECT_NEAR(s.trace, 50.0, 1e-9);
  EXPECT_FALSE(s.admissible);
  EXPECT_TRUE(std::isinf(s.aicc));
}

TEST(Aicc, PenaltyForms) {
  EXPECT_NEAR(aicc_penalty(1.0, 100, AiccPenalty::kCorrected), 1.01 / 0.97, 1e-15);
  EXPECT_TRUE(std::isinf(aicc_penalty(98.0, 100, AiccPenalty::kCorrected)));
  EXPECT_NEAR(aicc_penalty(-1.5, 100, AiccPenalty::kPrinted), 0.985 / 0.75, 1e-15);
  EXPECT_TRUE(std::isinf(aicc_penalty(1.0, 100, AiccPenalty::kPrinted)));
}

TEST(Aicc, GridNormalized) {
  const std::vector<double> grid{0.4, 0.1, 0.4, 0.2};
  EXPECT_EQ(normalized_grid(grid), (std::vector<double>{0.1, 0.2, 0.4}));
  EXPECT_THROW(normalized_grid(std::vector<double>{}), DomainError);
  EXPECT_THROW(normalized_grid(std::vector<double>{0.1, 0.0}), DomainError);
}

TEST(Aicc, ArgminTiesAndExclusions) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(argmin_admissible(std::vector<double>{inf, 2.0, 1.0, 1.0}), 2u);
  EXPECT_THROW(argmin_admissible(std::vector<double>{inf, inf}), DomainError);
}

TEST(Aicc, DuplicateGridEntriesDoNotChangeChoice) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.6, 300, 65);
  const LinearModel f(0.0, Eigen::Vector3d(1.0, 2.0, -1.0));
  const Eigen::Vector3d x(0.3, -0.2, 0.5);
  AiccOptions plain;
  plain.n_aicc = 100;
  AiccOptions duplicated = plain;
  duplicated.sigma_grid = {3.2, 0.05, 0.1, 0.1, 0.2, 0.4, 0.8, 1.6, 0.05};
  EXPECT_EQ(aicc_bandwidth(train, f, Coalition(0b001), x, plain, 9),
            aicc_bandwidth(train, f, Coalition(0b001), x, duplicated, 9));
}

TEST(Aicc, SubsampleDeterministicAndDistinct) {
  const std::vector<Eigen::Index> a = aicc_subsample(1000, 400, 11);
  EXPECT_EQ(a, aicc_subsample(1000, 400, 11));
  EXPECT_NE(a, aicc_subsample(1000, 400, 12));
  std::vector<Eigen::Index> sorted = a;
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  EXPECT_EQ(sorted.size(), 400u);
  EXPECT_EQ(aicc_subsample(50, 400, 11).size(), 50u);
}

TEST(Aicc, SharedChoiceMinimizesSummedCriterion) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.6, 300, 66);
  const LinearModel f(0.0, Eigen::Vector3d(1.0, 2.0, -1.0));
  const Eigen::Vector3d x(0.3, -0.2, 0.5);
  AiccOptions options;
  options.n_aicc = 80;
  const double chosen = aicc_bandwidth_for_size(train, f, 1, x, options, 4);
  const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), options.n_aicc, 4);
  const std::vector<double> grid = normalized_grid(options.sigma_grid);
  std::vector<double> totals(grid.size(), 0.0);
  for (std::uint64_t bits : {1u, 2u, 4u}) {
    const AiccProblem p = build_aicc_problem(train, f, Coalition(bits), x, rows);
    const std::vector<AiccScore> scores = aicc_scores(p, grid, AiccPenalty::kCorrected);
    for (std::size_t g = 0; g < grid.size(); ++g) totals[g] += scores[g].aicc;
  }
  EXPECT_EQ(chosen, grid[argmin_admissible(totals)]);
}
