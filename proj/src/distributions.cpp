#include "depshap/distributions.hpp"

#include <cmath>
#include <random>

#include "depshap/errors.hpp"
#include "depshap/samplers.hpp"

namespace depshap {
namespace {

Eigen::MatrixXd block(const Eigen::MatrixXd& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(std::ssize(rows), std::ssize(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
    }
  }
  return out;
}

Eigen::VectorXd pick(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(std::ssize(idx));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  return out;
}

Eigen::MatrixXd standard_normals(int n, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(rng);
  }
  return z;
}

std::function<double(const Eigen::VectorXd&)> gaussian_log_density(const Eigen::VectorXd& center,
                                                                    const Eigen::MatrixXd& covariance) {
  Eigen::MatrixXd cov = covariance;
  regularize_if_ill_conditioned(cov, nullptr, "gaussian density");
  auto ldlt = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(cov);
  return [center, ldlt](const Eigen::VectorXd& x) {
    const Eigen::VectorXd d = x - center;
    return -0.5 * d.dot(ldlt->solve(d));
  };
}

class GaussianDistribution final : public FeatureDistribution {
 public:
  GaussianDistribution(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (covariance_.rows() != mean_.size()) throw DomainError("gaussian distribution: dimension mismatch");
    validate_covariance(covariance_);
  }

  std::string name() const override { return "gaussian"; }
  int dimension() const override { return static_cast<int>(mean_.size()); }
  Eigen::VectorXd mean() const override { return mean_; }
  Eigen::MatrixXd sample(int n, std::uint64_t seed) const override {
    return sample_multivariate_normal(mean_, covariance_, n, seed);
  }

  Eigen::MatrixXd sample_conditional(Coalition s, const Eigen::VectorXd& x_star, int k,
                                     std::uint64_t seed) const override {
    return sample_gaussian_conditional(gaussian_conditional(mean_, covariance_, s, x_star), k, seed);
  }

  Eigen::VectorXd conditional_mean(Coalition s, const Eigen::VectorXd& x_star) const override {
    return gaussian_conditional(mean_, covariance_, s, x_star).mean;
  }

  std::vector<ConditionalPiece> conditional_pieces(Coalition s, const Eigen::VectorXd& x_star) const override {
    const GaussianConditional cond = gaussian_conditional(mean_, covariance_, s, x_star);
    return {ConditionalPiece{1.0, cond.mean, symmetric_factor(cond.covariance),
                             gaussian_log_density(cond.mean, cond.covariance)}};
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

class GHDistribution final : public FeatureDistribution {
 public:
  GHDistribution(GHParams params, PsiVariant variant) : params_(std::move(params)), variant_(variant) {
    params_.validate();
  }

  std::string name() const override { return "gh"; }
  int dimension() const override { return params_.dimension(); }
  Eigen::VectorXd mean() const override { return gh_mean(params_); }
  Eigen::MatrixXd sample(int n, std::uint64_t seed) const override { return sample_gh_rows(params_, n, seed); }

  Eigen::MatrixXd sample_conditional(Coalition s, const Eigen::VectorXd& x_star, int k,
                                     std::uint64_t seed) const override {
    return sample_gh_rows(gh_conditional(params_, s, x_star, variant_), k, seed);
  }

  Eigen::VectorXd conditional_mean(Coalition s, const Eigen::VectorXd& x_star) const override {
    return gh_mean(gh_conditional(params_, s, x_star, variant_));
  }

  std::vector<ConditionalPiece> conditional_pieces(Coalition s, const Eigen::VectorXd& x_star) const override {
    auto cond = std::make_shared<GHParams>(gh_conditional(params_, s, x_star, variant_));
    return {ConditionalPiece{1.0, gh_mean(*cond), symmetric_factor(gh_covariance(*cond)),
                             [cond](const Eigen::VectorXd& x) { return gh_log_density_unnormalized(*cond, x); }}};
  }

 private:
  GHParams params_;
  PsiVariant variant_;
};

class MixtureDistribution final : public FeatureDistribution {
 public:
  explicit MixtureDistribution(MixtureParams params) : params_(std::move(params)) { params_.validate(); }

  std::string name() const override { return "mixture"; }
  int dimension() const override { return params_.dimension(); }
  Eigen::VectorXd mean() const override {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dimension());
    for (std::size_t c = 0; c < params_.means.size(); ++c) {
      m += params_.weights(static_cast<Eigen::Index>(c)) * params_.means[c];
    }
    return m;
  }
  Eigen::MatrixXd sample(int n, std::uint64_t seed) const override { return sample_mixture_rows(params_, n, seed); }

  Eigen::MatrixXd sample_conditional(Coalition s, const Eigen::VectorXd& x_star, int k,
                                     std::uint64_t seed) const override {
    const Eigen::VectorXd post = mixture_posterior_weights(params_, s, x_star);
    std::vector<GaussianConditional> conds;
    for (const auto& mu : params_.means) conds.push_back(gaussian_conditional(mu, params_.covariance, s, x_star));
    const Eigen::MatrixXd factor = symmetric_factor(conds.front().covariance);
    Rng rng = make_rng(seed);
    std::discrete_distribution<int> component(post.data(), post.data() + post.size());
    std::normal_distribution<double> normal;
    const Eigen::Index d = conds.front().mean.size();
    Eigen::MatrixXd out(k, d);
    Eigen::VectorXd z(d);
    for (int r = 0; r < k; ++r) {
      const int c = component(rng);
      for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
      out.row(r) = (conds[static_cast<std::size_t>(c)].mean + factor * z).transpose();
    }
    return out;
  }

  Eigen::VectorXd conditional_mean(Coalition s, const Eigen::VectorXd& x_star) const override {
    const Eigen::VectorXd post = mixture_posterior_weights(params_, s, x_star);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dimension() - s.size());
    for (std::size_t c = 0; c < params_.means.size(); ++c) {
      m += post(static_cast<Eigen::Index>(c)) * gaussian_conditional(params_.means[c], params_.covariance, s, x_star).mean;
    }
    return m;
  }

  std::vector<ConditionalPiece> conditional_pieces(Coalition s, const Eigen::VectorXd& x_star) const override {
    const Eigen::VectorXd post = mixture_posterior_weights(params_, s, x_star);
    std::vector<ConditionalPiece> pieces;
    for (std::size_t c = 0; c < params_.means.size(); ++c) {
      const double w = post(static_cast<Eigen::Index>(c));
      if (w == 0.0) continue;
      const GaussianConditional cond = gaussian_conditional(params_.means[c], params_.covariance, s, x_star);
      pieces.push_back(ConditionalPiece{w, cond.mean, symmetric_factor(cond.covariance),
                                        gaussian_log_density(cond.mean, cond.covariance)});
    }
    return pieces;
  }

 private:
  MixtureParams params_;
};

}  // namespace

// ---------------------------------------------------------------------------

Eigen::MatrixXd equicorrelated_covariance(int m, double rho) {
  if (m < 1) throw DomainError("dimension must be positive");
  const double lower = m > 1 ? -1.0 / (m - 1) : -1.0;
  if (!(rho > lower && rho < 1.0)) throw DomainError("correlation outside the positive definite range");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(m, m, rho);
  cov.diagonal().setOnes();
  return cov;
}

Eigen::MatrixXd sample_multivariate_normal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, int n,
                                           std::uint64_t seed) {
  if (n < 0) throw DomainError("sample size must be non-negative");
  validate_covariance(covariance);
  const Eigen::MatrixXd factor = symmetric_factor(covariance);
  Rng rng = make_rng(seed);
  Eigen::MatrixXd x = standard_normals(n, mean.size(), rng) * factor.transpose();
  x.rowwise() += mean.transpose();
  return x;
}

TrainingMatrix sample_equicorrelated_gaussian(int m, double rho, int n, std::uint64_t seed) {
  return TrainingMatrix(sample_multivariate_normal(Eigen::VectorXd::Zero(m), equicorrelated_covariance(m, rho), n, seed));
}

// ---------------------------------------------------------------------------

void GHParams::validate() const {
  validate_gig(lambda, chi, psi);
  const auto d = mu.size();
  if (d < 1 || sigma.rows() != d || sigma.cols() != d || beta.size() != d) {
    throw DomainError("GH parameters: dimension mismatch");
  }
  if (!mu.allFinite() || !beta.allFinite()) throw DomainError("GH parameters: non-finite location or skewness");
  validate_covariance(sigma);
}

GHParams gh_params(double lambda, double omega, Eigen::VectorXd mu, Eigen::MatrixXd sigma, Eigen::VectorXd beta) {
  if (!(omega > 0)) throw DomainError("GH concentration must be positive");
  GHParams p{lambda, omega, omega, std::move(mu), std::move(sigma), std::move(beta)};
  p.validate();
  return p;
}

GHParams gh_experiment_params(int m, double kappa) {
  const double lambda = 1.0;
  const double omega = 0.5;
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(m, kappa / 4.0);
  const Eigen::VectorXd mu = -gig_mean(lambda, omega, omega) * beta;
  return gh_params(lambda, omega, mu, Eigen::MatrixXd::Identity(m, m), beta);
}

GHParams gh10_params() {
  Eigen::VectorXd diag(10);
  diag << 1, 2, 3, 1, 2, 3, 1, 2, 3, 3;
  Eigen::VectorXd beta(10);
  beta << 1, 1, 1, 1, 1, 0.5, 0.5, 0.5, 0.5, 0.5;
  return gh_params(1.0, 0.5, Eigen::VectorXd::Constant(10, 3.0), diag.asDiagonal(), beta);
}

Eigen::VectorXd gh_mean(const GHParams& p) { return p.mu + gig_mean(p.lambda, p.chi, p.psi) * p.beta; }

Eigen::MatrixXd gh_covariance(const GHParams& p) {
  return gig_mean(p.lambda, p.chi, p.psi) * p.sigma + gig_variance(p.lambda, p.chi, p.psi) * p.beta * p.beta.transpose();
}

Eigen::MatrixXd sample_gh_rows(const GHParams& p, int n, std::uint64_t seed) {
  p.validate();
  if (n < 0) throw DomainError("sample size must be non-negative");
  const Eigen::MatrixXd factor = symmetric_factor(p.sigma);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::Index d = p.mu.size();
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    const double w = sample_gig_one(p.lambda, p.chi, p.psi, rng);
    for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(rng);
    x.row(i) = (p.mu + w * p.beta + std::sqrt(w) * (factor * z)).transpose();
  }
  return x;
}

TrainingMatrix sample_gh(const GHParams& p, int n, std::uint64_t seed) { return TrainingMatrix(sample_gh_rows(p, n, seed)); }

GHParams gh_conditional(const GHParams& p, Coalition s, const Eigen::VectorXd& x_star, PsiVariant variant,
                        Diagnostics* diag) {
  const int m = p.dimension();
  if (x_star.size() != m) throw DomainError("gh_conditional: instance length mismatch");
  const std::vector<int> given = s.members();
  const std::vector<int> free = s.non_members(m);
  if (free.empty()) throw DomainError("gh_conditional: nothing left to condition");
  if (given.empty()) return p;

  Eigen::MatrixXd s11 = block(p.sigma, given, given);
  regularize_if_ill_conditioned(s11, diag, "gh_conditional " + s.to_string());
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s11);
  const Eigen::MatrixXd s21 = block(p.sigma, free, given);
  const Eigen::VectorXd dx = pick(x_star, given) - pick(p.mu, given);
  const Eigen::VectorXd b1 = pick(p.beta, given);

  GHParams out;
  out.lambda = p.lambda - 0.5 * static_cast<double>(given.size());
  out.chi = p.chi + dx.dot(ldlt.solve(dx));
  out.psi = p.psi + (variant == PsiVariant::kInverse ? b1.dot(ldlt.solve(b1)) : b1.dot(s11.transpose() * b1));
  out.mu = pick(p.mu, free) + s21 * ldlt.solve(dx);
  const Eigen::MatrixXd cond = block(p.sigma, free, free) - s21 * ldlt.solve(s21.transpose());
  out.sigma = 0.5 * (cond + cond.transpose());
  out.beta = pick(p.beta, free) - s21 * ldlt.solve(b1);
  return out;
}

double gh_log_density_unnormalized(const GHParams& p, const Eigen::VectorXd& x) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(p.sigma);
  const Eigen::VectorXd dx = x - p.mu;
  const Eigen::VectorXd sb = ldlt.solve(p.beta);
  const double q = p.psi + p.beta.dot(sb);
  const double r = p.chi + dx.dot(ldlt.solve(dx));
  const double nu = p.lambda - 0.5 * static_cast<double>(p.mu.size());
  return 0.5 * nu * std::log(r / q) + log_bessel_k(nu, std::sqrt(r * q)) + dx.dot(sb);
}

// ---------------------------------------------------------------------------

void MixtureParams::validate() const {
  if (weights.size() < 1 || std::ssize(means) != weights.size()) throw DomainError("mixture: component count mismatch");
  if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw DomainError("mixture: weights must be non-negative and sum to 1");
  }
  for (const auto& mu : means) {
    if (mu.size() != covariance.rows()) throw DomainError("mixture: dimension mismatch");
  }
  validate_covariance(covariance);
}

MixtureParams mixture_experiment_params(int m, double gamma) {
  const double pattern[3] = {1.0, -0.5, 1.0};
  Eigen::VectorXd mu(m);
  for (int j = 0; j < m; ++j) mu(j) = gamma * pattern[j % 3];
  MixtureParams p{Eigen::Vector2d(0.5, 0.5), {mu, -mu}, equicorrelated_covariance(m, 0.2)};
  p.validate();
  return p;
}

Eigen::MatrixXd sample_mixture_rows(const MixtureParams& p, int n, std::uint64_t seed) {
  p.validate();
  if (n < 0) throw DomainError("sample size must be non-negative");
  const Eigen::MatrixXd factor = symmetric_factor(p.covariance);
  Rng rng = make_rng(seed);
  std::discrete_distribution<int> component(p.weights.data(), p.weights.data() + p.weights.size());
  std::normal_distribution<double> normal;
  const int d = p.dimension();
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd z(d);
  for (int i = 0; i < n; ++i) {
    const int c = component(rng);
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    x.row(i) = (p.means[static_cast<std::size_t>(c)] + factor * z).transpose();
  }
  return x;
}

TrainingMatrix sample_mixture(const MixtureParams& p, int n, std::uint64_t seed) {
  return TrainingMatrix(sample_mixture_rows(p, n, seed));
}

Eigen::VectorXd mixture_posterior_weights(const MixtureParams& p, Coalition s, const Eigen::VectorXd& x_star) {
  const Eigen::Index k = p.weights.size();
  const std::vector<int> given = s.members();
  if (given.empty()) return p.weights;
  Eigen::MatrixXd s11 = block(p.covariance, given, given);
  regularize_if_ill_conditioned(s11, nullptr, "mixture posterior");
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s11);
  Eigen::VectorXd logw(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd d = pick(x_star, given) - pick(p.means[static_cast<std::size_t>(c)], given);
    logw(c) = p.weights(c) > 0 ? std::log(p.weights(c)) - 0.5 * d.dot(ldlt.solve(d))
                               : -std::numeric_limits<double>::infinity();
  }
  const double top = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - top).exp();
  return w / w.sum();
}

// ---------------------------------------------------------------------------

std::unique_ptr<FeatureDistribution> make_gaussian_distribution(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  return std::make_unique<GaussianDistribution>(std::move(mean), std::move(covariance));
}

std::unique_ptr<FeatureDistribution> make_gh_distribution(GHParams params, PsiVariant variant) {
  return std::make_unique<GHDistribution>(std::move(params), variant);
}

std::unique_ptr<FeatureDistribution> make_mixture_distribution(MixtureParams params) {
  return std::make_unique<MixtureDistribution>(std::move(params));
}

}  // namespace depshap
