#include "depshap/samplers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "depshap/errors.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(std::ssize(rows), std::ssize(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
    }
  }
  return out;
}

Eigen::VectorXd subvector(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(std::ssize(idx));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

void require_proper(Coalition s, int m, const char* what) {
  if (s.is_empty() || s == Coalition::full(m)) {
    throw DomainError(std::string(what) + ": coalition must be non-empty and proper");
  }
  if ((s.bits() & ~Coalition::full(m).bits()) != 0) throw DomainError(std::string(what) + ": coalition out of range");
}

void require_instance(const TrainingMatrix& train, const Eigen::VectorXd& x_star) {
  if (x_star.size() != train.features()) throw DomainError("instance length does not match training features");
  if (!x_star.allFinite()) throw DomainError("instance contains non-finite values");
}

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }

double normal_quantile(double u) { return boost::math::quantile(boost::math::normal_distribution<double>(), u); }

double tolerance_for(const Eigen::MatrixXd& a) { return 1e-10 * std::max(1.0, a.cwiseAbs().maxCoeff()); }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

}  // namespace

void validate_covariance(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0 || !covariance.allFinite()) {
    throw DomainError("invalid covariance: not a finite square matrix");
  }
  const double tol = tolerance_for(covariance);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw DomainError("invalid covariance: not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol) throw DomainError("invalid covariance: not positive semi-definite");
}

bool regularize_if_ill_conditioned(Eigen::MatrixXd& block, Diagnostics* diag, const std::string& context) {
  if (block.rows() == 0) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const bool ill = !(lo > 0) || hi / lo > kRidgeConditionThreshold;
  if (!ill) return false;
  const double trace = block.trace();
  const double lambda = trace > 0 ? 1e-8 * trace / static_cast<double>(block.rows()) : 1e-8;
  block.diagonal().array() += lambda;
  note(diag, context + ": covariance block ill-conditioned; added ridge " + format_double(lambda));
  return true;
}

Eigen::MatrixXd compose_rows(const Eigen::VectorXd& x_star, const std::vector<int>& columns,
                             const Eigen::MatrixXd& values) {
  Eigen::MatrixXd rows = x_star.transpose().replicate(values.rows(), 1);
  for (std::size_t j = 0; j < columns.size(); ++j) rows.col(columns[j]) = values.col(static_cast<Eigen::Index>(j));
  return rows;
}

// ---------------------------------------------------------------------------

double estimate_v_independent(const TrainingMatrix& train, const Model& model, Coalition s,
                              const Eigen::VectorXd& x_star, int k, std::uint64_t seed) {
  if (k < 1) throw DomainError("k must be at least 1");
  require_instance(train, x_star);
  require_proper(s, train.features(), "estimate_v_independent");
  const std::vector<int> free = s.non_members(train.features());
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, train.rows() - 1);
  Eigen::MatrixXd rows = x_star.transpose().replicate(k, 1);
  for (int r = 0; r < k; ++r) {
    const Eigen::Index i = pick(rng);
    for (int j : free) rows(r, j) = train.data()(i, j);
  }
  return evaluate(model, rows).mean();
}

double estimate_v_independent_full(const TrainingMatrix& train, const Model& model, Coalition s,
                                   const Eigen::VectorXd& x_star) {
  require_instance(train, x_star);
  require_proper(s, train.features(), "estimate_v_independent_full");
  Eigen::MatrixXd rows = train.data();
  for (int j : s.members()) rows.col(j).setConstant(x_star(j));
  return evaluate(model, rows).mean();
}

// ---------------------------------------------------------------------------

GaussianConditional gaussian_conditional(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Coalition s,
                                         const Eigen::VectorXd& x_star, Diagnostics* diag) {
  const int m = static_cast<int>(mean.size());
  if (covariance.rows() != m || x_star.size() != m) throw DomainError("gaussian_conditional: dimension mismatch");
  validate_covariance(covariance);
  GaussianConditional out;
  out.given = s.members();
  out.free = s.non_members(m);
  const Eigen::VectorXd mu_f = subvector(mean, out.free);
  const Eigen::MatrixXd cov_ff = submatrix(covariance, out.free, out.free);
  if (out.given.empty()) {
    out.mean = mu_f;
    out.covariance = cov_ff;
    return out;
  }
  Eigen::MatrixXd cov_ss = submatrix(covariance, out.given, out.given);
  out.regularized = regularize_if_ill_conditioned(cov_ss, diag, "gaussian_conditional " + s.to_string());
  const Eigen::MatrixXd cov_fs = submatrix(covariance, out.free, out.given);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov_ss);
  const Eigen::VectorXd delta = subvector(x_star, out.given) - subvector(mean, out.given);
  out.mean = mu_f + cov_fs * ldlt.solve(delta);
  Eigen::MatrixXd cond = cov_ff - cov_fs * ldlt.solve(cov_fs.transpose());
  out.covariance = 0.5 * (cond + cond.transpose());
  return out;
}

GaussianConditional gaussian_conditional(const TrainingMatrix& train, Coalition s, const Eigen::VectorXd& x_star,
                                         Diagnostics* diag) {
  return gaussian_conditional(train.mean(), train.covariance(), s, x_star, diag);
}

Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& covariance, Diagnostics* diag) {
  if (covariance.rows() == 0) return covariance;
  Eigen::MatrixXd cov = covariance;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() == Eigen::Success && eig.eigenvalues().allFinite()) {
      const double tol = tolerance_for(cov);
      if (eig.eigenvalues().minCoeff() >= -tol) {
        const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
      }
    }
    if (attempt == 0) {
      const double trace = std::abs(cov.trace());
      const double lambda = trace > 0 ? 1e-8 * trace / static_cast<double>(cov.rows()) : 1e-8;
      cov.diagonal().array() += lambda;
      note(diag, "covariance factorization failed; retrying with ridge " + format_double(lambda));
    }
  }
  throw DomainError("covariance factorization failed after regularization");
}

Eigen::MatrixXd sample_gaussian_conditional(const GaussianConditional& cond, int k, std::uint64_t seed,
                                            Diagnostics* diag) {
  if (k < 1) throw DomainError("k must be at least 1");
  const Eigen::Index d = cond.mean.size();
  const Eigen::MatrixXd factor = symmetric_factor(cond.covariance, diag);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(k, d);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index j = 0; j < d; ++j) z(r, j) = normal(rng);
  }
  Eigen::MatrixXd draws = z * factor.transpose();
  draws.rowwise() += cond.mean.transpose();
  return draws;
}

double estimate_v_gaussian(const TrainingMatrix& train, const Model& model, Coalition s,
                           const Eigen::VectorXd& x_star, int k, std::uint64_t seed, Diagnostics* diag) {
  require_instance(train, x_star);
  require_proper(s, train.features(), "estimate_v_gaussian");
  const GaussianConditional cond = gaussian_conditional(train, s, x_star, diag);
  const Eigen::MatrixXd draws = sample_gaussian_conditional(cond, k, seed, diag);
  return evaluate(model, compose_rows(x_star, cond.free, draws)).mean();
}

// ---------------------------------------------------------------------------

double CopulaState::to_uniform(int j, double x) const {
  const auto& col = sorted_.at(static_cast<std::size_t>(j));
  const auto below = std::lower_bound(col.begin(), col.end(), x) - col.begin();
  const auto at_or_below = std::upper_bound(col.begin(), col.end(), x) - col.begin();
  const double n = static_cast<double>(col.size());
  return static_cast<double>(below + at_or_below + 1) / (2.0 * (n + 1.0));
}

double CopulaState::from_uniform(int j, double u) const {
  const auto& col = sorted_.at(static_cast<std::size_t>(j));
  const auto n = std::ssize(col);
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(static_cast<double>(n) * u));
  idx = std::clamp<std::ptrdiff_t>(idx, 1, n);
  return col[static_cast<std::size_t>(idx - 1)];
}

double CopulaState::to_latent(int j, double x) const { return normal_quantile(to_uniform(j, x)); }

double CopulaState::from_latent(int j, double v) const { return from_uniform(j, normal_cdf(v)); }

CopulaState fit_copula(const TrainingMatrix& train, Diagnostics* diag) {
  if (train.rows() < kMinCopulaRows) throw DomainError("fit_copula needs at least 20 training rows");
  const int m = train.features();
  CopulaState state;
  state.sorted_.resize(static_cast<std::size_t>(m));
  state.degenerate_.assign(static_cast<std::size_t>(m), false);
  for (int j = 0; j < m; ++j) {
    auto& col = state.sorted_[static_cast<std::size_t>(j)];
    col.assign(train.data().col(j).begin(), train.data().col(j).end());
    std::sort(col.begin(), col.end());
    if (col.front() == col.back()) {
      state.degenerate_[static_cast<std::size_t>(j)] = true;
      note(diag, "degenerate marginal: column " + std::to_string(j + 1) + " is constant");
    }
  }
  Eigen::MatrixXd latent(train.rows(), m);
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    for (int j = 0; j < m; ++j) latent(i, j) = state.to_latent(j, train.data()(i, j));
  }
  Eigen::MatrixXd corr = correlation_from_covariance(sample_covariance(latent));
  for (int j = 0; j < m; ++j) {
    if (!state.degenerate_[static_cast<std::size_t>(j)]) continue;
    corr.row(j).setZero();
    corr.col(j).setZero();
    corr(j, j) = 1.0;
  }
  state.correlation_ = corr;
  return state;
}

Eigen::MatrixXd sample_copula_conditional(const CopulaState& state, Coalition s, const Eigen::VectorXd& x_star, int k,
                                          std::uint64_t seed, Diagnostics* diag) {
  const int m = state.features();
  if (x_star.size() != m) throw DomainError("instance length does not match copula features");
  Eigen::VectorXd latent_star = Eigen::VectorXd::Zero(m);
  for (int j : s.members()) latent_star(j) = state.to_latent(j, x_star(j));
  const GaussianConditional cond =
      gaussian_conditional(Eigen::VectorXd::Zero(m), state.latent_correlation(), s, latent_star, diag);
  Eigen::MatrixXd draws = sample_gaussian_conditional(cond, k, seed, diag);
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    const int j = cond.free[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < draws.rows(); ++r) draws(r, c) = state.from_latent(j, draws(r, c));
  }
  return draws;
}

double estimate_v_copula(const CopulaState& state, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                         int k, std::uint64_t seed, Diagnostics* diag) {
  require_proper(s, state.features(), "estimate_v_copula");
  const Eigen::MatrixXd draws = sample_copula_conditional(state, s, x_star, k, seed, diag);
  return evaluate(model, compose_rows(x_star, s.non_members(state.features()), draws)).mean();
}

// ---------------------------------------------------------------------------

MahalanobisMetric::MahalanobisMetric(const TrainingMatrix& train, Coalition s, Diagnostics* diag)
    : columns_(s.members()) {
  if (columns_.empty()) throw DomainError("Mahalanobis metric needs a non-empty coalition");
  Eigen::MatrixXd block = submatrix(train.covariance(), columns_, columns_);
  regularize_if_ill_conditioned(block, diag, "empirical_weights " + s.to_string());
  llt_.compute(block);
  if (llt_.info() != Eigen::Success) throw DomainError("empirical_weights: covariance block is not positive definite");
}

Eigen::MatrixXd MahalanobisMetric::transform(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd sub(rows.rows(), std::ssize(columns_));
  for (std::size_t j = 0; j < columns_.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = rows.col(columns_[j]);
  const Eigen::MatrixXd white = llt_.matrixL().solve(sub.transpose()).transpose();
  return white / std::sqrt(static_cast<double>(columns_.size()));
}

Eigen::VectorXd MahalanobisMetric::transform_point(const Eigen::VectorXd& x) const {
  return transform(x.transpose()).row(0).transpose();
}

Eigen::MatrixXd MahalanobisMetric::precision() const {
  return llt_.solve(Eigen::MatrixXd::Identity(std::ssize(columns_), std::ssize(columns_)));
}

EmpiricalWeights empirical_weights(const TrainingMatrix& train, Coalition s, const Eigen::VectorXd& x_star,
                                   double sigma, Diagnostics* diag) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("bandwidth must be positive");
  require_instance(train, x_star);
  const MahalanobisMetric metric(train, s, diag);
  const Eigen::MatrixXd white = metric.transform(train.data());
  const Eigen::RowVectorXd star = metric.transform_point(x_star).transpose();
  EmpiricalWeights out;
  out.sigma = sigma;
  out.distances = (white.rowwise() - star).rowwise().norm();
  out.weights = (-out.distances.array().square() / (2.0 * sigma * sigma)).exp();
  out.order.resize(static_cast<std::size_t>(train.rows()));
  std::iota(out.order.begin(), out.order.end(), Eigen::Index{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return out.weights(a) > out.weights(b); });
  return out;
}

int select_k(const EmpiricalWeights& weights, double eta, int k_cap) {
  if (!(eta > 0 && eta < 1)) throw DomainError("eta must lie in (0,1)");
  if (k_cap < 1) throw DomainError("k_cap must be at least 1");
  const double total = weights.weights.sum();
  if (!(total > 0)) throw DomainError("select_k needs at least one positive weight");
  const int n = static_cast<int>(weights.order.size());
  const int limit = std::min(k_cap, n);
  double cumulative = 0.0;
  for (int l = 0; l < limit; ++l) {
    cumulative += weights.weights(weights.order[static_cast<std::size_t>(l)]);
    if (cumulative / total > eta) return l + 1;
  }
  return limit;
}

double estimate_v_empirical_top(const TrainingMatrix& train, const Model& model, Coalition s,
                                const Eigen::VectorXd& x_star, const EmpiricalWeights& weights, int top_k,
                                Diagnostics* diag) {
  require_instance(train, x_star);
  require_proper(s, train.features(), "estimate_v_empirical");
  if (top_k < 1) throw DomainError("top_k must be at least 1");
  const int k = std::min<int>(top_k, static_cast<int>(weights.order.size()));
  Eigen::VectorXd w(k);
  Eigen::MatrixXd rows = x_star.transpose().replicate(k, 1);
  const std::vector<int> free = s.non_members(train.features());
  for (int r = 0; r < k; ++r) {
    const Eigen::Index i = weights.order[static_cast<std::size_t>(r)];
    w(r) = weights.weights(i);
    for (int j : free) rows(r, j) = train.data()(i, j);
  }
  const double total = w.sum();
  if (!(total > 0)) {
    note(diag, "empirical weights for " + s.to_string() + " vanished; using the independence estimator");
    return estimate_v_independent_full(train, model, s, x_star);
  }
  return w.dot(evaluate(model, rows)) / total;
}

double estimate_v_empirical(const TrainingMatrix& train, const Model& model, Coalition s,
                            const Eigen::VectorXd& x_star, double sigma, double eta, int k_cap, Diagnostics* diag) {
  require_proper(s, train.features(), "estimate_v_empirical");
  const EmpiricalWeights weights = empirical_weights(train, s, x_star, sigma, diag);
  if (!(weights.weights.sum() > 0)) {
    note(diag, "empirical weights for " + s.to_string() + " vanished; using the independence estimator");
    return estimate_v_independent_full(train, model, s, x_star);
  }
  return estimate_v_empirical_top(train, model, s, x_star, weights, select_k(weights, eta, k_cap), diag);
}

// ---------------------------------------------------------------------------

void SamplerSpec::validate() const {
  if (d_star < 1) throw DomainError("d_star must be at least 1");
  if (!(eta > 0 && eta < 1)) throw DomainError("eta must lie in (0,1)");
  if (k_cap < 1) throw DomainError("k_cap must be at least 1");
  if (!uses_empirical()) return;
  if (bandwidth_mode == BandwidthMode::kFixed) {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw DomainError("bandwidth must be positive");
  } else {
    normalized_grid(aicc.sigma_grid);
    if (aicc.n_aicc < 3) throw DomainError("n_aicc must be at least 3");
  }
}

std::string SamplerSpec::label() const {
  std::string empirical;
  switch (bandwidth_mode) {
    case BandwidthMode::kFixed: empirical = "empirical-" + format_double(sigma); break;
    case BandwidthMode::kAiccExact: empirical = "empirical-AICc-exact"; break;
    case BandwidthMode::kAiccApprox: empirical = "empirical-AICc-approx"; break;
  }
  switch (kind) {
    case SamplerKind::kIndependence: return "original";
    case SamplerKind::kGaussian: return "Gaussian";
    case SamplerKind::kCopula: return "copula";
    case SamplerKind::kEmpirical: return empirical;
    case SamplerKind::kCombined:
      return empirical + (backend == ParametricBackend::kGaussian ? "+Gaussian" : "+copula");
  }
  return "unknown";
}

SamplerSpec parse_sampler_label(const std::string& label) {
  const std::string text = lower(label);
  SamplerSpec spec;
  auto parse_empirical = [&](const std::string& part) {
    if (part == "empirical") return;
    if (part == "empirical-aicc-exact") {
      spec.bandwidth_mode = BandwidthMode::kAiccExact;
      return;
    }
    if (part == "empirical-aicc-approx") {
      spec.bandwidth_mode = BandwidthMode::kAiccApprox;
      return;
    }
    const std::string prefix = "empirical-";
    if (part.rfind(prefix, 0) == 0) {
      const std::string number = part.substr(prefix.size());
      double sigma = 0.0;
      auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), sigma);
      if (ec == std::errc() && ptr == number.data() + number.size() && sigma > 0) {
        spec.sigma = sigma;
        return;
      }
    }
    throw DomainError("unknown estimator '" + label + "'");
  };
  if (text == "original" || text == "independence") {
    spec.kind = SamplerKind::kIndependence;
  } else if (text == "gaussian") {
    spec.kind = SamplerKind::kGaussian;
  } else if (text == "copula") {
    spec.kind = SamplerKind::kCopula;
  } else if (text == "combined") {
    spec.kind = SamplerKind::kCombined;
  } else if (const auto plus = text.find('+'); plus != std::string::npos) {
    spec.kind = SamplerKind::kCombined;
    parse_empirical(text.substr(0, plus));
    const std::string backend = text.substr(plus + 1);
    if (backend == "gaussian") {
      spec.backend = ParametricBackend::kGaussian;
    } else if (backend == "copula") {
      spec.backend = ParametricBackend::kCopula;
    } else {
      throw DomainError("unknown estimator '" + label + "'");
    }
  } else {
    spec.kind = SamplerKind::kEmpirical;
    parse_empirical(text);
  }
  return spec;
}

// ---------------------------------------------------------------------------

ConditionalSampler::ConditionalSampler(SamplerSpec spec, const TrainingMatrix& train, const Model& model,
                                       Diagnostics* diag)
    : spec_(std::move(spec)), train_(&train), model_(&model) {
  spec_.validate();
  if (spec_.uses_copula()) copula_ = fit_copula(train, diag);
  mean_prediction_ = evaluate(model, train.data()).mean();
}

bool ConditionalSampler::routes_to_empirical(Coalition s) const {
  if (spec_.kind == SamplerKind::kEmpirical) return true;
  return spec_.kind == SamplerKind::kCombined && s.size() <= spec_.d_star;
}

BandwidthPlan ConditionalSampler::plan_bandwidths(std::span<const Coalition> coalitions,
                                                  const Eigen::VectorXd& x_star, std::uint64_t seed,
                                                  Diagnostics* diag) const {
  BandwidthPlan plan;
  if (!spec_.uses_empirical() || spec_.bandwidth_mode == BandwidthMode::kFixed) return plan;
  const int m = train_->features();
  std::map<int, std::vector<Coalition>> by_size;
  for (Coalition s : coalitions) {
    if (s.is_empty() || s == Coalition::full(m) || !routes_to_empirical(s)) continue;
    by_size[s.size()].push_back(s);
  }
  for (const auto& [size, group] : by_size) {
    if (spec_.bandwidth_mode == BandwidthMode::kAiccApprox) {
      plan.by_size[size] = aicc_bandwidth_shared(*train_, *model_, group, x_star, spec_.aicc, seed, diag);
    } else {
      for (Coalition s : group) {
        plan.by_coalition[s.bits()] = aicc_bandwidth(*train_, *model_, s, x_star, spec_.aicc, seed, diag);
      }
    }
  }
  return plan;
}

double ConditionalSampler::bandwidth_for(Coalition s, const Eigen::VectorXd& x_star, std::uint64_t seed,
                                         const BandwidthPlan* plan, Diagnostics* diag) const {
  switch (spec_.bandwidth_mode) {
    case BandwidthMode::kFixed:
      return spec_.sigma;
    case BandwidthMode::kAiccExact:
      if (plan != nullptr) {
        if (auto it = plan->by_coalition.find(s.bits()); it != plan->by_coalition.end()) return it->second;
      }
      return aicc_bandwidth(*train_, *model_, s, x_star, spec_.aicc, seed, diag);
    case BandwidthMode::kAiccApprox:
      if (plan != nullptr) {
        if (auto it = plan->by_size.find(s.size()); it != plan->by_size.end()) return it->second;
      }
      return aicc_bandwidth_for_size(*train_, *model_, s.size(), x_star, spec_.aicc, seed, diag);
  }
  return spec_.sigma;
}

double ConditionalSampler::estimate_v(Coalition s, const Eigen::VectorXd& x_star, int k, std::uint64_t seed,
                                      const BandwidthPlan* plan, Diagnostics* diag) const {
  const int m = train_->features();
  require_instance(*train_, x_star);
  if (s.is_empty()) return mean_prediction_;
  if (s == Coalition::full(m)) return evaluate_one(*model_, x_star);
  if (k < 1) throw DomainError("k must be at least 1");

  if (routes_to_empirical(s)) {
    const double sigma = bandwidth_for(s, x_star, seed, plan, diag);
    const EmpiricalWeights weights = empirical_weights(*train_, s, x_star, sigma, diag);
    if (!(weights.weights.sum() > 0)) {
      note(diag, "empirical weights for " + s.to_string() + " vanished; using the independence estimator");
      return estimate_v_independent_full(*train_, *model_, s, x_star);
    }
    const int top = std::min(select_k(weights, spec_.eta, spec_.k_cap), k);
    return estimate_v_empirical_top(*train_, *model_, s, x_star, weights, top, diag);
  }

  if (spec_.kind == SamplerKind::kIndependence) return estimate_v_independent(*train_, *model_, s, x_star, k, seed);
  if (!spec_.uses_copula()) return estimate_v_gaussian(*train_, *model_, s, x_star, k, seed, diag);
  return estimate_v_copula(*copula_, *model_, s, x_star, k, seed, diag);
}

double estimate_v(const SamplerSpec& spec, const TrainingMatrix& train, const Model& model, Coalition s,
                  const Eigen::VectorXd& x_star, int k, std::uint64_t seed, Diagnostics* diag) {
  const ConditionalSampler sampler(spec, train, model, diag);
  return sampler.estimate_v(s, x_star, k, seed, nullptr, diag);
}

}  // namespace depshap
