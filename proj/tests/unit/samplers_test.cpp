#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "depshap/distributions.hpp"
#include "depshap/errors.hpp"
#include "depshap/samplers.hpp"
#include "test_util.hpp"

using namespace depshap;
using depshap::testing::ks_critical_1pct;
using depshap::testing::ks_statistic;

namespace {

LinearModel linear(std::initializer_list<double> beta, double intercept = 0.0) {
  Eigen::VectorXd b(static_cast<Eigen::Index>(beta.size()));
  Eigen::Index i = 0;
  for (double v : beta) b(i++) = v;
  return LinearModel(intercept, b);
}

FunctionModel constant_model(double c) {
  return FunctionModel([c](const Eigen::MatrixXd& x) { return Eigen::VectorXd::Constant(x.rows(), c); }, "constant");
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Independence

TEST(Independence, ConstantPredictor) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 200, 1);
  const FunctionModel f = constant_model(2.5);
  for (int k : {1, 10, 1000}) {
    EXPECT_DOUBLE_EQ(estimate_v_independent(train, f, Coalition(0b001), vec({1, 2, 3}), k, 4), 2.5);
  }
}

TEST(Independence, LinearFullAverageIsClosedForm) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.3, 500, 2);
  const LinearModel f = linear({1.0, -2.0, 0.5}, 0.7);
  const Eigen::VectorXd x = vec({0.3, 1.1, -0.4});
  const Coalition s(0b010);
  const double expected = 0.7 + 1.0 * train.mean()(0) - 2.0 * x(1) + 0.5 * train.mean()(2);
  EXPECT_NEAR(estimate_v_independent_full(train, f, s, x), expected, 1e-12);
}

TEST(Independence, ProductMeanZeroWithinStandardErrors) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(2, 0.0, 5000, 3);
  const FunctionModel f([](const Eigen::MatrixXd& x) { return Eigen::VectorXd(x.col(0).cwiseProduct(x.col(1))); },
                        "product");
  const int k = 100000;
  const double v = estimate_v_independent(train, f, Coalition(0b01), vec({2.0, 0.0}), k, 5);
  // Sampling from the training rows: the target is 2 * E[x2] = 0 and the
  // estimate's spread is 2 * sd(x2) / sqrt(k) around the training mean.
  const double se = 2.0 / std::sqrt(k);
  const double training_mean = 2.0 * train.mean()(1);
  EXPECT_LT(std::abs(v - training_mean), 3 * se);
  EXPECT_LT(std::abs(v), 3 * se + std::abs(training_mean));
}

TEST(Independence, Deterministic) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.3, 300, 2);
  const LinearModel f = linear({1, 1, 1});
  const Eigen::VectorXd x = vec({0.1, 0.2, 0.3});
  EXPECT_EQ(estimate_v_independent(train, f, Coalition(1), x, 50, 9),
            estimate_v_independent(train, f, Coalition(1), x, 50, 9));
}

// ---------------------------------------------------------------------------
// Gaussian

TEST(GaussianConditional, BivariateHandExample) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const GaussianConditional c = gaussian_conditional(Eigen::VectorXd::Zero(2), cov, Coalition(0b01), vec({2.0, 0.0}));
  ASSERT_EQ(c.free, std::vector<int>{1});
  EXPECT_NEAR(c.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(c.covariance(0, 0), 0.75, 1e-15);
}

TEST(GaussianConditional, IndependentBlocksUnchanged) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  cov.diagonal() << 1.0, 2.0, 3.0;
  const Eigen::VectorXd mu = vec({1, 2, 3});
  const GaussianConditional c = gaussian_conditional(mu, cov, Coalition(0b010), vec({5, 5, 5}));
  EXPECT_NEAR(c.mean(0), 1.0, 1e-15);
  EXPECT_NEAR(c.mean(1), 3.0, 1e-15);
  EXPECT_NEAR(c.covariance(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(c.covariance(1, 1), 3.0, 1e-15);
  EXPECT_NEAR(c.covariance(0, 1), 0.0, 1e-15);
}

TEST(GaussianConditional, StrongCorrelationShrinksVariance) {
  const int m = 5;
  const Eigen::MatrixXd cov = equicorrelated_covariance(m, 0.98);
  const GaussianConditional c =
      gaussian_conditional(Eigen::VectorXd::Zero(m), cov, Coalition(0b01111), Eigen::VectorXd::Zero(m));
  EXPECT_LT(c.covariance(0, 0), 0.04);
}

TEST(GaussianConditional, InvalidCovarianceRejected) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(gaussian_conditional(Eigen::VectorXd::Zero(2), cov, Coalition(1), vec({0, 0})), DomainError);
}

TEST(GaussianConditional, IllConditionedBlockRegularized) {
  Eigen::MatrixXd cov(3, 3);
  cov << 1, 1, 0.5, 1, 1, 0.5, 0.5, 0.5, 1;
  Diagnostics diag;
  const GaussianConditional c =
      gaussian_conditional(Eigen::VectorXd::Zero(3), cov, Coalition(0b011), vec({1, 1, 0}), &diag);
  EXPECT_TRUE(c.regularized);
  EXPECT_FALSE(diag.empty());
  EXPECT_TRUE(c.mean.allFinite());
}

TEST(GaussianConditional, MomentsMatchRejectionSampling) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 3; ++trial) {
    const int m = 3 + trial;
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
    }
    const Eigen::MatrixXd cov = a * a.transpose() / m + 0.2 * Eigen::MatrixXd::Identity(m, m);
    const Coalition s(0b1);
    const Eigen::VectorXd x_star = Eigen::VectorXd::Constant(m, 0.3);
    const GaussianConditional c = gaussian_conditional(Eigen::VectorXd::Zero(m), cov, s, x_star);
    // Exact draws from the joint law, kept when x_0 lands in a thin band.
    const Eigen::MatrixXd l = cov.llt().matrixL();
    const double eps = 0.01 * std::sqrt(cov(0, 0));
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(m - 1);
    Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(m - 1);
    int accepted = 0;
    while (accepted < 20000) {
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z(i) = normal(rng);
      const Eigen::VectorXd x = l * z;
      if (std::abs(x(0) - 0.3) >= eps) continue;
      const Eigen::VectorXd rest = x.tail(m - 1);
      sum += rest;
      sum2 += rest.cwiseProduct(rest);
      ++accepted;
    }
    const Eigen::VectorXd mean = sum / accepted;
    const Eigen::VectorXd var = sum2 / accepted - mean.cwiseProduct(mean);
    for (int j = 0; j < m - 1; ++j) {
      const double se = std::sqrt(c.covariance(j, j) / accepted);
      EXPECT_LT(std::abs(mean(j) - c.mean(j)), 5 * se + 0.01) << "trial " << trial << " coordinate " << j;
      const double var_se = c.covariance(j, j) * std::sqrt(2.0 / accepted);
      EXPECT_LT(std::abs(var(j) - c.covariance(j, j)), 5 * var_se + 0.01);
    }
  }
}

TEST(GaussianSampling, DegenerateCovarianceGivesMean) {
  GaussianConditional c;
  c.free = {0, 1};
  c.mean = vec({1.5, -2.0});
  c.covariance = Eigen::MatrixXd::Zero(2, 2);
  const Eigen::MatrixXd draws = sample_gaussian_conditional(c, 50, 3);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    EXPECT_EQ(draws(i, 0), 1.5);
    EXPECT_EQ(draws(i, 1), -2.0);
  }
}

TEST(GaussianSampling, BivariateSampleMean) {
  Eigen::MatrixXd cov(2, 2);
  cov << 1.0, 0.5, 0.5, 1.0;
  const GaussianConditional c = gaussian_conditional(Eigen::VectorXd::Zero(2), cov, Coalition(0b01), vec({2.0, 0.0}));
  const Eigen::MatrixXd draws = sample_gaussian_conditional(c, 100000, 21);
  EXPECT_NEAR(draws.col(0).mean(), 1.0, 0.011);
  EXPECT_EQ(draws, sample_gaussian_conditional(c, 100000, 21));
}

TEST(GaussianSampling, EstimateMatchesLinearConditionalExpectation) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.7, 3000, 8);
  const LinearModel f = linear({1.0, 2.0, -1.0});
  const Eigen::VectorXd x = vec({0.5, -0.2, 1.0});
  const Coalition s(0b001);
  const GaussianConditional c = gaussian_conditional(train, s, x);
  const double exact = 0.5 + 2.0 * c.mean(0) - 1.0 * c.mean(1);
  const double sd = std::sqrt(vec({2.0, -1.0}).dot(c.covariance * vec({2.0, -1.0})));
  const int k = 20000;
  EXPECT_NEAR(estimate_v_gaussian(train, f, s, x, k, 4), exact, 4 * sd / std::sqrt(k));
}

// ---------------------------------------------------------------------------
// Copula

TEST(Copula, LatentCorrelationMatchesGaussianData) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.6, 2000, 31);
  const CopulaState state = fit_copula(train);
  const Eigen::MatrixXd corr = correlation_from_covariance(train.covariance());
  EXPECT_LT((state.latent_correlation() - corr).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Copula, MonotoneTransformInvariance) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.4, 500, 32);
  Eigen::MatrixXd transformed = train.data();
  transformed.col(1) = transformed.col(1).array().exp();
  transformed.col(2) = transformed.col(2).array().pow(3) * 5.0 + 1.0;
  const CopulaState a = fit_copula(train);
  const CopulaState b = fit_copula(TrainingMatrix(transformed));
  EXPECT_LT((a.latent_correlation() - b.latent_correlation()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Copula, IndependentUniformsNearZeroCorrelation) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd data(2000, 4);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = u(rng);
  const CopulaState state = fit_copula(TrainingMatrix(data));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i != j) {
        EXPECT_LT(std::abs(state.latent_correlation()(i, j)), 0.06);
      }
    }
  }
}

TEST(Copula, EmpiricalCdfRoundTripAndBounds) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(2, 0.0, 100, 34);
  const CopulaState state = fit_copula(train);
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    const double x = train.data()(i, 0);
    const double u = state.to_uniform(0, x);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_EQ(state.from_uniform(0, u), x);
  }
  EXPECT_GT(state.to_uniform(0, -1e9), 0.0);
  EXPECT_LT(state.to_uniform(0, 1e9), 1.0);
  EXPECT_EQ(state.from_uniform(0, 1e-12), state.min(0));
  EXPECT_EQ(state.from_uniform(0, 1.0 - 1e-12), state.max(0));
}

TEST(Copula, SamplesStayWithinTrainingRange) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 300, 35);
  const CopulaState state = fit_copula(train);
  const Eigen::MatrixXd draws = sample_copula_conditional(state, Coalition(0b001), vec({4.0, 0, 0}), 5000, 2);
  for (int c = 0; c < 2; ++c) {
    EXPECT_GE(draws.col(c).minCoeff(), state.min(c + 1));
    EXPECT_LE(draws.col(c).maxCoeff(), state.max(c + 1));
  }
}

TEST(Copula, IndependentLatentMatchesMargins) {
  std::mt19937_64 rng(36);
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd data(2000, 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = e(rng);
  const CopulaState state = fit_copula(TrainingMatrix(data));
  const Eigen::MatrixXd draws = sample_copula_conditional(state, Coalition(0b01), vec({0.1, 0.0}), 10000, 3);
  // The latent correlation is not exactly zero on a sample; allow its effect.
  std::vector<double> a(draws.col(0).begin(), draws.col(0).end());
  std::vector<double> b(data.col(1).begin(), data.col(1).end());
  EXPECT_LT(ks_statistic(a, b), ks_critical_1pct(a.size(), b.size()) + 0.05);
}

TEST(Copula, ReducesToGaussianOnGaussianData) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.6, 2000, 37);
  const CopulaState state = fit_copula(train);
  const Coalition s(0b001);
  const Eigen::VectorXd x = vec({0.8, 0, 0});
  const Eigen::MatrixXd copula = sample_copula_conditional(state, s, x, 10000, 5);
  const Eigen::MatrixXd gauss = sample_gaussian_conditional(gaussian_conditional(train, s, x), 10000, 6);
  for (int c = 0; c < 2; ++c) {
    std::vector<double> a(copula.col(c).begin(), copula.col(c).end());
    std::vector<double> b(gauss.col(c).begin(), gauss.col(c).end());
    EXPECT_LT(ks_statistic(a, b), ks_critical_1pct(a.size(), b.size())) << "margin " << c;
  }
}

TEST(Copula, DegenerateColumnNoted) {
  Eigen::MatrixXd data = sample_equicorrelated_gaussian(3, 0.2, 100, 38).data();
  data.col(2).setConstant(4.0);
  Diagnostics diag;
  const CopulaState state = fit_copula(TrainingMatrix(data), &diag);
  EXPECT_TRUE(state.degenerate()[2]);
  EXPECT_FALSE(diag.empty());
  const Eigen::MatrixXd draws = sample_copula_conditional(state, Coalition(0b001), vec({0, 0, 4}), 100, 1);
  EXPECT_TRUE((draws.col(1).array() == 4.0).all());
}

TEST(Copula, TooFewRowsRejected) {
  EXPECT_THROW(fit_copula(sample_equicorrelated_gaussian(2, 0.0, 10, 1)), DomainError);
}

// ---------------------------------------------------------------------------
// Empirical

TEST(Empirical, TrainingRowHasZeroDistance) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.4, 200, 41);
  const Eigen::VectorXd x = train.data().row(17).transpose();
  const EmpiricalWeights w = empirical_weights(train, Coalition(0b011), x, 0.1);
  EXPECT_NEAR(w.distances(17), 0.0, 1e-12);
  EXPECT_NEAR(w.weights(17), 1.0, 1e-12);
  EXPECT_EQ(w.order.front(), 17);
}

TEST(Empirical, ScalarDistanceIsAbsoluteDifference) {
  Eigen::MatrixXd data = sample_equicorrelated_gaussian(2, 0.0, 300, 42).data();
  for (int c = 0; c < 2; ++c) {
    const double mean = data.col(c).mean();
    const double sd = std::sqrt((data.col(c).array() - mean).square().sum() / (data.rows() - 1));
    data.col(c) = ((data.col(c).array() - mean) / sd).matrix();
  }
  const TrainingMatrix train(data);
  const Eigen::VectorXd x = vec({0.7, 0.0});
  const EmpiricalWeights w = empirical_weights(train, Coalition(0b01), x, 0.3);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    EXPECT_NEAR(w.distances(i), std::abs(0.7 - data(i, 0)), 1e-10);
  }
}

TEST(Empirical, UnitScalingInvariance) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 200, 43);
  const Eigen::VectorXd x = vec({0.2, -0.3, 0.9});
  const EmpiricalWeights a = empirical_weights(train, Coalition(0b101), x, 0.2);
  const TrainingMatrix scaled(train.data() * 10.0);
  const EmpiricalWeights b = empirical_weights(scaled, Coalition(0b101), x * 10.0, 0.2);
  EXPECT_LT((a.distances - b.distances).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Empirical, WeightsDecreaseWithDistance) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 300, 44);
  const EmpiricalWeights w = empirical_weights(train, Coalition(0b110), vec({0, 0.5, -0.5}), 0.4);
  for (Eigen::Index a = 0; a < 300; ++a) {
    for (Eigen::Index b = 0; b < 300; b += 7) {
      if (w.distances(a) < w.distances(b)) {
        EXPECT_GT(w.weights(a), w.weights(b));
      }
    }
  }
  for (std::size_t r = 1; r < w.order.size(); ++r) {
    EXPECT_GE(w.weights(w.order[r - 1]), w.weights(w.order[r]));
  }
}

namespace {

EmpiricalWeights manual_weights(const Eigen::VectorXd& values) {
  EmpiricalWeights w;
  w.weights = values;
  w.distances = Eigen::VectorXd::Zero(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) w.order.push_back(i);
  std::stable_sort(w.order.begin(), w.order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  return w;
}

}  // namespace

TEST(SelectK, EqualWeights) {
  const EmpiricalWeights w = manual_weights(Eigen::VectorXd::Ones(10));
  EXPECT_EQ(select_k(w, 0.85, 5000), 9);
  EXPECT_EQ(select_k(w, 0.9, 5000), 10);
  EXPECT_EQ(select_k(w, 0.85, 4), 4);
}

TEST(SelectK, DominantWeight) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(201, 0.005);
  v(0) = 0.99;
  const EmpiricalWeights w = manual_weights(v);
  double total = v.sum();
  double cum = 0.99;
  int expected = 1;
  while (!(cum > 0.9 * total)) {
    cum += 0.005;
    ++expected;
  }
  EXPECT_EQ(select_k(w, 0.9, 5000), expected);
}

TEST(SelectK, MonotoneInEtaAndCapped) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 400, 45);
  const EmpiricalWeights w = empirical_weights(train, Coalition(0b001), vec({0.3, 0, 0}), 0.5);
  int previous = 0;
  for (double eta = 0.05; eta < 1.0; eta += 0.05) {
    const int k = select_k(w, eta, 5000);
    EXPECT_GE(k, previous);
    EXPECT_LE(k, 400);
    previous = k;
  }
  EXPECT_LE(select_k(w, 0.99, 30), 30);
}

TEST(Empirical, ConstantPredictor) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 200, 46);
  const FunctionModel f = constant_model(-1.25);
  EXPECT_DOUBLE_EQ(estimate_v_empirical(train, f, Coalition(0b010), vec({0, 1, 0}), 0.1, 0.9, 5000), -1.25);
}

TEST(Empirical, HugeBandwidthWithAllRowsIsIndependence) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.5, 500, 47);
  const LinearModel f = linear({1.0, -0.5, 2.0});
  const Eigen::VectorXd x = vec({0.4, 1.2, -0.7});
  for (std::uint64_t bits : {1u, 2u, 3u, 5u, 6u}) {
    const Coalition s(bits);
    const EmpiricalWeights w = empirical_weights(train, s, x, 1e6);
    const double empirical = estimate_v_empirical_top(train, f, s, x, w, static_cast<int>(train.rows()));
    EXPECT_NEAR(empirical, estimate_v_independent_full(train, f, s, x), 1e-6);
  }
}

TEST(Empirical, LinearDependentWithinStandardErrors) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(2, 0.9, 2000, 48);
  const LinearModel f = linear({1.0, 1.0});
  const Eigen::VectorXd x = vec({0.5, 0.0});
  const Coalition s(0b01);
  const EmpiricalWeights w = empirical_weights(train, s, x, 0.1);
  const int k = select_k(w, 0.9, 5000);
  const double v = estimate_v_empirical_top(train, f, s, x, w, k);
  const GaussianConditional c = gaussian_conditional(train, s, x);
  const double exact = 0.5 + c.mean(0);
  double sum = 0.0;
  double sum2 = 0.0;
  for (int r = 0; r < k; ++r) {
    const double wi = w.weights(w.order[static_cast<std::size_t>(r)]);
    sum += wi;
    sum2 += wi * wi;
  }
  const double ess = sum * sum / sum2;
  const double se = std::sqrt(c.covariance(0, 0) / ess);
  EXPECT_LT(std::abs(v - exact), 3 * se);
}

// ---------------------------------------------------------------------------
// Dispatch

TEST(SamplerSpec, LabelsRoundTrip) {
  for (const std::string label : {"original", "Gaussian", "copula", "empirical-0.1", "empirical-AICc-exact",
                                  "empirical-AICc-approx", "empirical-0.1+Gaussian", "empirical-0.1+copula",
                                  "empirical-AICc-approx+Gaussian"}) {
    EXPECT_EQ(parse_sampler_label(label).label(), label);
  }
  EXPECT_EQ(parse_sampler_label("GAUSSIAN").kind, SamplerKind::kGaussian);
  EXPECT_THROW(parse_sampler_label("kde"), DomainError);
  EXPECT_THROW(parse_sampler_label("empirical-0.1+vine"), DomainError);
  EXPECT_THROW(parse_sampler_label("empirical--1"), DomainError);
}

TEST(ConditionalSampler, EndpointsExactForEverySpec) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(4, 0.5, 300, 51);
  const FunctionModel f([](const Eigen::MatrixXd& x) {
    return Eigen::VectorXd((x.col(0).array() * x.col(1).array() + x.col(2).array().sin()).matrix());
  });
  const Eigen::VectorXd x = vec({0.2, -1.0, 0.4, 2.0});
  const double full = f.predict(x.transpose())(0);
  const double mean = f.predict(train.data()).mean();
  for (const std::string label : {"original", "Gaussian", "copula", "empirical-0.1", "empirical-AICc-exact",
                                  "empirical-AICc-approx", "empirical-0.1+Gaussian", "empirical-0.1+copula"}) {
    const ConditionalSampler sampler(parse_sampler_label(label), train, f);
    EXPECT_EQ(sampler.estimate_v(Coalition::full(4), x, 100, 1), full) << label;
    EXPECT_EQ(sampler.estimate_v(Coalition::empty(), x, 100, 1), mean) << label;
  }
}

TEST(ConditionalSampler, CombinedRoutesBySize) {
  const int m = 8;
  const TrainingMatrix train = sample_equicorrelated_gaussian(m, 0.4, 400, 52);
  const LinearModel f = linear({1, 2, 3, 4, 5, 6, 7, 8});
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(m, -1, 1);
  SamplerSpec combined = parse_sampler_label("empirical-0.1+Gaussian");
  combined.d_star = 3;
  const ConditionalSampler comb(combined, train, f);
  const ConditionalSampler emp(parse_sampler_label("empirical-0.1"), train, f);
  const ConditionalSampler gauss(parse_sampler_label("Gaussian"), train, f);
  const Coalition small(0b00000110);
  const Coalition large(0b01111111);
  EXPECT_EQ(comb.estimate_v(small, x, 1000, 7), emp.estimate_v(small, x, 1000, 7));
  EXPECT_EQ(comb.estimate_v(large, x, 1000, 7), gauss.estimate_v(large, x, 1000, 7));
  EXPECT_EQ(comb.estimate_v(large, x, 1000, 7), estimate_v_gaussian(train, f, large, x, 1000, 7));
}

TEST(ConditionalSampler, PureFunctionOfInputs) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.4, 300, 53);
  const LinearModel f = linear({1, -1, 2});
  const Eigen::VectorXd x = vec({0.3, 0.1, -0.2});
  for (const std::string label : {"original", "Gaussian", "copula", "empirical-AICc-exact"}) {
    const SamplerSpec spec = parse_sampler_label(label);
    EXPECT_EQ(estimate_v(spec, train, f, Coalition(0b001), x, 200, 3),
              estimate_v(spec, train, f, Coalition(0b001), x, 200, 3))
        << label;
  }
}

TEST(ConditionalSampler, WrongInstanceLengthRejected) {
  const TrainingMatrix train = sample_equicorrelated_gaussian(3, 0.4, 100, 54);
  const LinearModel f = linear({1, 1, 1});
  const ConditionalSampler sampler(SamplerSpec{}, train, f);
  EXPECT_THROW(sampler.estimate_v(Coalition(1), vec({1, 2}), 10, 1), DomainError);
}
