#include "depshap/explainer.hpp"

#include "depshap/errors.hpp"
#include "depshap/parallel.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

constexpr std::uint64_t kBandwidthStream = 0xB0A5D1D7ULL;

}  // namespace

std::uint64_t coalition_seed(std::uint64_t seed, std::uint64_t instance, Coalition s) {
  return derive_seed(seed, {instance, s.bits()});
}

Explainer::Explainer(const ConditionalSampler& sampler, const CoalitionMatrix& design, ConstraintMode mode)
    : sampler_(&sampler), solver_(design, mode) {
  if (design.m != sampler.train().features()) throw DomainError("design size does not match training features");
}

ContributionVector Explainer::contributions(const Eigen::VectorXd& x_star, std::uint64_t instance, int k,
                                            std::uint64_t seed, Diagnostics* diag) const {
  const CoalitionMatrix& design = solver_.design();
  const BandwidthPlan plan =
      sampler_->plan_bandwidths(design.rows, x_star, derive_seed(seed, {instance, kBandwidthStream}), diag);
  ContributionVector v(design.m);
  for (Coalition s : design.rows) {
    v.set(s, sampler_->estimate_v(s, x_star, k, coalition_seed(seed, instance, s), &plan, diag));
  }
  return v;
}

Explanation Explainer::explain(const Eigen::VectorXd& x_star, std::uint64_t instance, int k, std::uint64_t seed,
                               Diagnostics* diag) const {
  Explanation e = solver_.solve(contributions(x_star, instance, k, seed, diag));
  e.estimator_id = sampler_->spec().label();
  e.seed = seed;
  e.sample_budget = k;
  return e;
}

std::vector<Explanation> Explainer::explain_all(const Eigen::MatrixXd& x, const ExplainOptions& options,
                                                std::vector<Diagnostics>* diags) const {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<Explanation> out(n);
  std::vector<Diagnostics> local(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    const Eigen::VectorXd row = x.row(static_cast<Eigen::Index>(i)).transpose();
    out[i] = explain(row, i, options.k, options.seed, &local[i]);
  });
  if (diags != nullptr) *diags = std::move(local);
  return out;
}

}  // namespace depshap
