#include "depshap/oracles.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "depshap/coalitions.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

constexpr Eigen::Index kPredictChunk = 65536;
constexpr int kMaxQuadratureFeatures = 4;

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned N>
Rule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.nodes.push_back(0.0);
      r.weights.push_back(w[i]);
      continue;
    }
    r.nodes.push_back(a[i]);
    r.weights.push_back(w[i]);
    r.nodes.push_back(-a[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

const Rule& rule(int points) {
  static const Rule r32 = make_rule<32>();
  static const Rule r64 = make_rule<64>();
  static const Rule r128 = make_rule<128>();
  static const Rule r256 = make_rule<256>();
  switch (points) {
    case 32: return r32;
    case 64: return r64;
    case 128: return r128;
    case 256: return r256;
    default: throw DomainError("quadrature supports 32, 64, 128 or 256 points per axis");
  }
}

Eigen::VectorXd predict_chunked(const Model& model, const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index start = 0; start < rows.rows(); start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, rows.rows() - start);
    out.segment(start, len) = evaluate(model, rows.middleRows(start, len));
  }
  return out;
}

// Coefficient of v(T) in phi_j under the exact formula.
double formula_coefficient(int m, Coalition t, int j) {
  if (t.contains(j)) return shapley_permutation_weight(m, t.size() - 1);
  return -shapley_permutation_weight(m, t.size());
}

TrueShapleyResult from_table(const ContributionVector& v, int m, TruthMethod method) {
  const Explanation e = exact_shapley(v, m);
  TrueShapleyResult out;
  out.phi0 = e.phi0;
  out.phi = e.phi;
  out.prediction = e.prediction;
  out.method = method;
  return out;
}

void check_instance(const FeatureDistribution& dist, const Eigen::VectorXd& x_star) {
  if (x_star.size() != dist.dimension()) throw DomainError("instance length does not match distribution dimension");
  if (!x_star.allFinite()) throw DomainError("instance contains non-finite values");
}

}  // namespace

std::string to_string(TruthMethod method) {
  switch (method) {
    case TruthMethod::kClosedForm: return "closed_form";
    case TruthMethod::kQuadrature: return "quadrature";
    case TruthMethod::kMonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

TrueShapleyResult linear_independent_shapley(const LinearModelSpec& model, const Eigen::VectorXd& x_star) {
  if (model.beta.size() != x_star.size() || model.feature_mean.size() != x_star.size()) {
    throw DomainError("linear model: dimension mismatch");
  }
  TrueShapleyResult out;
  out.phi0 = model.beta0 + model.beta.dot(model.feature_mean);
  out.phi = model.beta.cwiseProduct(x_star - model.feature_mean);
  out.prediction = model.beta0 + model.beta.dot(x_star);
  out.method = TruthMethod::kClosedForm;
  return out;
}

double linear_dependent_v(const LinearModelSpec& model, const ConditionalMeanFn& cond_mean, Coalition s,
                          const Eigen::VectorXd& x_star) {
  const int m = static_cast<int>(x_star.size());
  if (model.beta.size() != m) throw DomainError("linear model: dimension mismatch");
  if (s == Coalition::full(m)) return model.beta0 + model.beta.dot(x_star);
  Eigen::VectorXd x = x_star;
  const std::vector<int> free = s.non_members(m);
  const Eigen::VectorXd mean = cond_mean(s, x_star);
  if (mean.size() != std::ssize(free)) throw DomainError("conditional mean has the wrong length");
  for (std::size_t i = 0; i < free.size(); ++i) x(free[i]) = mean(static_cast<Eigen::Index>(i));
  return model.beta0 + model.beta.dot(x);
}

TrueShapleyResult linear_dependent_shapley(const LinearModelSpec& model, const ConditionalMeanFn& cond_mean,
                                           const Eigen::VectorXd& x_star) {
  const int m = static_cast<int>(x_star.size());
  ContributionVector v(m);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
    v.set(Coalition(bits), linear_dependent_v(model, cond_mean, Coalition(bits), x_star));
  }
  return from_table(v, m, TruthMethod::kClosedForm);
}

TrueShapleyResult true_shapley_closed_form(const FeatureDistribution& dist, const LinearCoefficients& coef,
                                           const Eigen::VectorXd& x_star) {
  check_instance(dist, x_star);
  const LinearModelSpec spec{coef.intercept, coef.beta, dist.mean()};
  return linear_dependent_shapley(
      spec, [&dist](Coalition s, const Eigen::VectorXd& x) { return dist.conditional_mean(s, x); }, x_star);
}

// ---------------------------------------------------------------------------

double quadrature_v(const FeatureDistribution& dist, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                    int points, double half_width) {
  check_instance(dist, x_star);
  const int m = dist.dimension();
  if (s == Coalition::full(m)) return evaluate_one(model, x_star);
  const std::vector<int> free = s.non_members(m);
  const int d = static_cast<int>(free.size());
  const Rule& r = rule(points);
  const auto n_axis = static_cast<Eigen::Index>(r.nodes.size());
  Eigen::Index total = 1;
  for (int i = 0; i < d; ++i) total *= n_axis;

  double v = 0.0;
  for (const ConditionalPiece& piece : dist.conditional_pieces(s, x_star)) {
    Eigen::MatrixXd rows = x_star.transpose().replicate(total, 1);
    Eigen::VectorXd log_w(total);
    Eigen::VectorXd z(d);
    for (Eigen::Index flat = 0; flat < total; ++flat) {
      Eigen::Index rem = flat;
      double lw = 0.0;
      for (int a = 0; a < d; ++a) {
        const auto idx = static_cast<std::size_t>(rem % n_axis);
        rem /= n_axis;
        z(a) = half_width * r.nodes[idx];
        lw += std::log(r.weights[idx]);
      }
      const Eigen::VectorXd x_free = piece.center + piece.transform * z;
      for (int a = 0; a < d; ++a) rows(flat, free[static_cast<std::size_t>(a)]) = x_free(a);
      log_w(flat) = lw + piece.log_density(x_free);
    }
    const double top = log_w.maxCoeff();
    const Eigen::VectorXd w = (log_w.array() - top).exp();
    const Eigen::VectorXd f = predict_chunked(model, rows);
    v += piece.weight * w.dot(f) / w.sum();
  }
  return v;
}

TrueShapleyResult true_shapley_quadrature(const FeatureDistribution& dist, const Model& model,
                                          const Eigen::VectorXd& x_star, const QuadratureOptions& options,
                                          std::optional<double> v_empty) {
  check_instance(dist, x_star);
  const int m = dist.dimension();
  if (m > kMaxQuadratureFeatures) throw DomainError("quadrature truth supports at most 4 features");
  const int fine = options.points * 2;
  ContributionVector coarse_v(m);
  ContributionVector fine_v(m);
  std::vector<std::pair<Coalition, double>> residuals;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
    const Coalition s(bits);
    if (s.is_empty() && v_empty) {
      coarse_v.set(s, *v_empty);
      fine_v.set(s, *v_empty);
      continue;
    }
    const double a = quadrature_v(dist, model, s, x_star, options.points, options.half_width);
    const double b = quadrature_v(dist, model, s, x_star, fine, options.half_width);
    coarse_v.set(s, a);
    fine_v.set(s, b);
    residuals.emplace_back(s, std::abs(b - a));
  }
  TrueShapleyResult coarse = from_table(coarse_v, m, TruthMethod::kQuadrature);
  TrueShapleyResult out = from_table(fine_v, m, TruthMethod::kQuadrature);
  out.quadrature_points = fine;
  out.quadrature_change = (out.phi - coarse.phi).cwiseAbs().maxCoeff();
  if (!(out.quadrature_change < options.tolerance)) {
    std::string detail;
    for (const auto& [s, res] : residuals) detail += " " + s.to_string() + ":" + std::to_string(res);
    throw QuadratureError("quadrature refinement did not converge; per-coalition changes" + detail,
                          std::move(residuals));
  }
  return out;
}

// ---------------------------------------------------------------------------

MonteCarloValue monte_carlo_v(const FeatureDistribution& dist, const Model& model, Coalition s,
                              const Eigen::VectorXd& x_star, int n_mc, std::uint64_t seed) {
  check_instance(dist, x_star);
  const int m = dist.dimension();
  if (s == Coalition::full(m)) return {evaluate_one(model, x_star), 0.0};
  if (n_mc < 2) throw DomainError("n_mc must be at least 2");
  const std::vector<int> free = s.non_members(m);
  double sum = 0.0;
  double sum_sq = 0.0;
  int done = 0;
  std::uint64_t chunk_index = 0;
  while (done < n_mc) {
    const int len = std::min<int>(static_cast<int>(kPredictChunk), n_mc - done);
    const Eigen::MatrixXd draws = dist.sample_conditional(s, x_star, len, derive_seed(seed, {chunk_index++}));
    Eigen::MatrixXd rows = x_star.transpose().replicate(len, 1);
    for (std::size_t a = 0; a < free.size(); ++a) rows.col(free[a]) = draws.col(static_cast<Eigen::Index>(a));
    const Eigen::VectorXd f = evaluate(model, rows);
    sum += f.sum();
    sum_sq += f.squaredNorm();
    done += len;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

TrueShapleyResult true_shapley_mc(const FeatureDistribution& dist, const Model& model, const Eigen::VectorXd& x_star,
                                  int n_mc, std::uint64_t seed, std::optional<MonteCarloValue> v_empty) {
  check_instance(dist, x_star);
  const int m = dist.dimension();
  ContributionVector v(m);
  std::vector<double> se(std::size_t{1} << m, 0.0);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
    const Coalition s(bits);
    const MonteCarloValue value = (s.is_empty() && v_empty)
                                      ? *v_empty
                                      : monte_carlo_v(dist, model, s, x_star, n_mc, derive_seed(seed, {bits}));
    v.set(s, value.mean);
    se[bits] = value.std_error;
  }
  TrueShapleyResult out = from_table(v, m, TruthMethod::kMonteCarlo);
  Eigen::VectorXd phi_se = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
      const double c = formula_coefficient(m, Coalition(bits), j);
      acc += c * c * se[bits] * se[bits];
    }
    phi_se(j) = std::sqrt(acc);
  }
  out.mc_std_error = phi_se;
  return out;
}

}  // namespace depshap
