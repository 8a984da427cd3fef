#include "depshap/aicc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "depshap/errors.hpp"
#include "depshap/random.hpp"
#include "depshap/samplers.hpp"

namespace depshap {
namespace {

// Keeps log(tau2) finite when responses are reproduced exactly.
constexpr double kTau2Floor = 1e-300;

std::vector<Coalition> coalitions_of_size(int m, int size) {
  std::vector<Coalition> out;
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << m) - 1; ++bits) {
    if (std::popcount(bits) == size) out.emplace_back(bits);
  }
  return out;
}

}  // namespace

std::vector<double> normalized_grid(std::span<const double> grid) {
  if (grid.empty()) throw DomainError("bandwidth grid is empty");
  std::vector<double> out(grid.begin(), grid.end());
  for (double s : out) {
    if (!(s > 0) || !std::isfinite(s)) throw DomainError("bandwidth grid entries must be positive");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double aicc_penalty(double trace, Eigen::Index n, AiccPenalty form) {
  const double nn = static_cast<double>(n);
  const double numerator = 1.0 + trace / nn;
  const double denominator = form == AiccPenalty::kCorrected ? 1.0 - (trace + 2.0) / nn : 1.0 - (trace + 2.0) / 2.0;
  if (!(denominator > 0)) return std::numeric_limits<double>::infinity();
  return numerator / denominator;
}

AiccScore aicc_criterion(const Eigen::MatrixXd& distances2, const Eigen::VectorXd& responses, double sigma,
                         AiccPenalty form) {
  const Eigen::Index n = responses.size();
  if (distances2.rows() != n || distances2.cols() != n) throw DomainError("aicc_criterion: dimension mismatch");
  const Eigen::MatrixXd w = (-distances2.array() / (2.0 * sigma * sigma)).exp().matrix();
  const Eigen::VectorXd row_sums = w.rowwise().sum();
  AiccScore score;
  score.sigma = sigma;
  score.trace = (w.diagonal().array() / row_sums.array()).sum();
  const Eigen::VectorXd fitted = (w * responses).array() / row_sums.array();
  score.tau2 = (responses - fitted).squaredNorm() / static_cast<double>(n);
  score.penalty = aicc_penalty(score.trace, n, form);
  score.admissible = std::isfinite(score.penalty);
  score.aicc = score.admissible ? std::log(std::max(score.tau2, kTau2Floor)) + score.penalty
                                : std::numeric_limits<double>::infinity();
  return score;
}

std::vector<Eigen::Index> aicc_subsample(Eigen::Index n_train, int n_aicc, std::uint64_t seed) {
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n_train));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  const auto take = static_cast<std::size_t>(std::min<Eigen::Index>(n_train, n_aicc));
  Rng rng = make_rng(derive_seed(seed, {0x41494343}));
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, rows.size() - 1);
    std::swap(rows[i], rows[pick(rng)]);
  }
  rows.resize(take);
  std::sort(rows.begin(), rows.end());
  return rows;
}

AiccProblem build_aicc_problem(const TrainingMatrix& train, const Model& model, Coalition s,
                               const Eigen::VectorXd& x_star, std::span<const Eigen::Index> rows, Diagnostics* diag) {
  if (rows.size() < 3) throw DomainError("AICc needs at least three subsample rows");
  AiccProblem problem;
  problem.rows.assign(rows.begin(), rows.end());
  const auto n = std::ssize(problem.rows);
  Eigen::MatrixXd sub(n, train.features());
  for (Eigen::Index i = 0; i < n; ++i) sub.row(i) = train.data().row(problem.rows[static_cast<std::size_t>(i)]);

  const MahalanobisMetric metric(train, s, diag);
  const Eigen::MatrixXd white = metric.transform(sub);
  const Eigen::VectorXd norms = white.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * white * white.transpose();
  d2.colwise() += norms;
  d2.rowwise() += norms.transpose();
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  problem.distances2 = 0.5 * (d2 + d2.transpose());

  Eigen::MatrixXd queries = sub;
  for (int j : s.members()) queries.col(j).setConstant(x_star(j));
  problem.responses = evaluate(model, queries);
  return problem;
}

std::vector<AiccScore> aicc_scores(const AiccProblem& problem, std::span<const double> grid, AiccPenalty form) {
  std::vector<AiccScore> out;
  out.reserve(grid.size());
  for (double sigma : grid) out.push_back(aicc_criterion(problem.distances2, problem.responses, sigma, form));
  return out;
}

std::size_t argmin_admissible(std::span<const double> criteria) {
  std::size_t best = criteria.size();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!(criteria[i] < std::numeric_limits<double>::infinity())) continue;
    if (best == criteria.size() || criteria[i] < criteria[best]) best = i;
  }
  if (best == criteria.size()) throw DomainError("no admissible bandwidth on the grid");
  return best;
}

double aicc_bandwidth(const TrainingMatrix& train, const Model& model, Coalition s, const Eigen::VectorXd& x_star,
                      const AiccOptions& options, std::uint64_t seed, Diagnostics* diag) {
  const Coalition one[] = {s};
  return aicc_bandwidth_shared(train, model, one, x_star, options, seed, diag);
}

double aicc_bandwidth_for_size(const TrainingMatrix& train, const Model& model, int size,
                               const Eigen::VectorXd& x_star, const AiccOptions& options, std::uint64_t seed,
                               Diagnostics* diag) {
  if (size < 1 || size >= train.features()) throw DomainError("AICc coalition size must be in [1, M-1]");
  const std::vector<Coalition> group = coalitions_of_size(train.features(), size);
  return aicc_bandwidth_shared(train, model, group, x_star, options, seed, diag);
}

double aicc_bandwidth_shared(const TrainingMatrix& train, const Model& model, std::span<const Coalition> coalitions,
                             const Eigen::VectorXd& x_star, const AiccOptions& options, std::uint64_t seed,
                             Diagnostics* diag) {
  if (coalitions.empty()) throw DomainError("AICc needs at least one coalition");
  const std::vector<double> grid = normalized_grid(options.sigma_grid);
  const std::vector<Eigen::Index> rows = aicc_subsample(train.rows(), options.n_aicc, seed);
  std::vector<double> total(grid.size(), 0.0);
  for (Coalition s : coalitions) {
    const AiccProblem problem = build_aicc_problem(train, model, s, x_star, rows, diag);
    const std::vector<AiccScore> scores = aicc_scores(problem, grid, options.penalty);
    for (std::size_t g = 0; g < grid.size(); ++g) total[g] += scores[g].aicc;
  }
  return grid[argmin_admissible(total)];
}

}  // namespace depshap
