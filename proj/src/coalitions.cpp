#include "depshap/coalitions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "depshap/errors.hpp"
#include "depshap/random.hpp"

namespace depshap {
namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

void check_feature_count(int m) {
  if (m < 1 || m > kMaxFeatures) {
    throw DomainError("feature count must be in [1, " + std::to_string(kMaxFeatures) + "], got " +
                      std::to_string(m));
  }
}

CoalitionMatrix build_design(int m, std::vector<Coalition> rows, Eigen::VectorXd weights, bool enumerated,
                             double infinite_weight) {
  CoalitionMatrix design;
  design.m = m;
  design.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), m + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    design.z(row, 0) = 1.0;
    for (int j : rows[r].members()) design.z(row, j + 1) = 1.0;
  }
  design.rows = std::move(rows);
  design.weights = std::move(weights);
  design.enumerated = enumerated;
  design.infinite_weight = infinite_weight;
  design.includes_empty_and_full =
      design.find(Coalition::empty()).has_value() && design.find(Coalition::full(m)).has_value();
  return design;
}

double condition_of(const Eigen::MatrixXd& normal) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(normal);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double smallest = sv(sv.size() - 1);
  return smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
}

// Solves normal * X = rhs with a pivoted QR; throws when rank deficient.
Eigen::MatrixXd pivoted_solve(const Eigen::MatrixXd& normal, const Eigen::MatrixXd& rhs, double* condition) {
  *condition = condition_of(normal);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  if (qr.rank() < normal.cols() || !std::isfinite(*condition) || *condition > 1e14) {
    std::ostringstream msg;
    msg << "degenerate coalition design: normal matrix of size " << normal.rows() << " has rank " << qr.rank()
        << ", condition number " << *condition;
    throw DegenerateDesignError(msg.str(), *condition);
  }
  return qr.solve(rhs);
}

}  // namespace

double shapley_kernel_weight(int m, int s) {
  check_feature_count(m);
  if (s < 0 || s > m) {
    throw DomainError("coalition size " + std::to_string(s) + " outside [0, " + std::to_string(m) + "]");
  }
  if (s == 0 || s == m) {
    throw DomainError("infinite-weight coalition: size " + std::to_string(s) + " of " + std::to_string(m) +
                      " must use the constant C or a hard constraint");
  }
  return (m - 1) / (binomial(m, s) * s * (m - s));
}

double shapley_permutation_weight(int m, int s) {
  check_feature_count(m);
  if (s < 0 || s > m - 1) throw DomainError("coalition size out of range for permutation weight");
  return 1.0 / (m * binomial(m - 1, s));
}

std::optional<std::size_t> CoalitionMatrix::find(Coalition s) const {
  const auto it = std::find(rows.begin(), rows.end(), s);
  if (it == rows.end()) return std::nullopt;
  return static_cast<std::size_t>(it - rows.begin());
}

CoalitionMatrix enumerate_coalitions(int m, int cap, double infinite_weight) {
  check_feature_count(m);
  if (m > cap) {
    throw DomainError("enumeration too large; use sample_coalitions (m=" + std::to_string(m) +
                      ", cap=" + std::to_string(cap) + ")");
  }
  const std::uint64_t count = std::uint64_t{1} << m;
  std::vector<Coalition> rows;
  rows.reserve(count);
  for (std::uint64_t bits = 0; bits < count; ++bits) rows.emplace_back(bits);
  std::sort(rows.begin(), rows.end(), canonical_less);

  Eigen::VectorXd weights(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int s = rows[r].size();
    weights(static_cast<Eigen::Index>(r)) = (s == 0 || s == m) ? infinite_weight : shapley_kernel_weight(m, s);
  }
  return build_design(m, std::move(rows), std::move(weights), true, infinite_weight);
}

CoalitionMatrix sample_coalitions(int m, int n_draws, std::uint64_t seed, double infinite_weight) {
  check_feature_count(m);
  if (n_draws < 1) throw DomainError("n_draws must be >= 1");

  std::map<Coalition, int, decltype(&canonical_less)> counts(canonical_less);
  if (m >= 2) {
    // P(|S| = s) is proportional to C(m,s) k(m,s) = (m-1) / (s (m-s)).
    std::vector<double> size_mass;
    for (int s = 1; s < m; ++s) size_mass.push_back(1.0 / (static_cast<double>(s) * (m - s)));
    Rng rng = make_rng(seed);
    std::discrete_distribution<int> size_dist(size_mass.begin(), size_mass.end());
    std::vector<int> pool(static_cast<std::size_t>(m));
    for (int d = 0; d < n_draws; ++d) {
      const int s = size_dist(rng) + 1;
      std::iota(pool.begin(), pool.end(), 0);
      std::uint64_t bits = 0;
      for (int i = 0; i < s; ++i) {
        std::uniform_int_distribution<int> pick(i, m - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
        bits |= std::uint64_t{1} << pool[static_cast<std::size_t>(i)];
      }
      ++counts[Coalition(bits)];
    }
  }

  std::vector<Coalition> rows;
  std::vector<double> weights;
  rows.push_back(Coalition::empty());
  weights.push_back(infinite_weight);
  for (const auto& [coalition, multiplicity] : counts) {
    rows.push_back(coalition);
    weights.push_back(multiplicity);
  }
  rows.push_back(Coalition::full(m));
  weights.push_back(infinite_weight);
  return build_design(m, std::move(rows), Eigen::Map<Eigen::VectorXd>(weights.data(), std::ssize(weights)), false,
                      infinite_weight);
}

double ContributionVector::at(Coalition s) const {
  const auto it = values_.find(s.bits());
  if (it == values_.end()) throw IncompleteTableError("incomplete contribution table: missing v" + s.to_string());
  return it->second;
}

Eigen::VectorXd ContributionVector::aligned(const CoalitionMatrix& design) const {
  if (design.m != m_) throw DomainError("contribution vector and design disagree on feature count");
  Eigen::VectorXd out(static_cast<Eigen::Index>(design.n_rows()));
  for (std::size_t r = 0; r < design.n_rows(); ++r) out(static_cast<Eigen::Index>(r)) = at(design.rows[r]);
  return out;
}

bool satisfies_efficiency(const Explanation& e, double tolerance) {
  const double gap = std::abs(e.total() - e.prediction);
  return std::isfinite(gap) && gap <= tolerance * std::max(1.0, std::abs(e.prediction));
}

WlsSolver::WlsSolver(const CoalitionMatrix& design, ConstraintMode mode) : design_(design), mode_(mode) {
  const int m = design.m;
  const auto n = static_cast<Eigen::Index>(design.n_rows());
  if (design.z.rows() != n || design.weights.size() != n) throw DomainError("malformed coalition design");

  if (mode == ConstraintMode::kSoft) {
    const Eigen::MatrixXd ztw = design.z.transpose() * design.weights.asDiagonal();
    const Eigen::MatrixXd normal = ztw * design.z;
    projection_ = pivoted_solve(normal, ztw, &condition_number_);
    return;
  }

  const auto empty_row = design.find(Coalition::empty());
  const auto full_row = design.find(Coalition::full(m));
  if (!empty_row || !full_row) {
    throw DomainError("hard-constrained solve needs the empty and full coalitions in the design");
  }
  const auto e = static_cast<Eigen::Index>(*empty_row);
  const auto f = static_cast<Eigen::Index>(*full_row);
  projection_ = Eigen::MatrixXd::Zero(m + 1, n);
  projection_(0, e) = 1.0;
  if (m == 1) {
    projection_(1, f) = 1.0;
    projection_(1, e) = -1.0;
    return;
  }

  // Eliminate phi0 = v(empty) and phi_last = v(full) - v(empty) - sum of the others;
  // the remaining m-1 unknowns solve an ordinary weighted least squares problem.
  std::vector<Eigen::Index> mid;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int s = design.rows[static_cast<std::size_t>(r)].size();
    if (s > 0 && s < m) mid.push_back(r);
  }
  const auto n_mid = std::ssize(mid);
  const int last = m;  // column of the eliminated feature in z
  Eigen::MatrixXd a(n_mid, m - 1);
  Eigen::VectorXd w(n_mid);
  Eigen::VectorXd z_last(n_mid);
  for (Eigen::Index i = 0; i < n_mid; ++i) {
    const Eigen::Index r = mid[static_cast<std::size_t>(i)];
    z_last(i) = design.z(r, last);
    for (int j = 0; j < m - 1; ++j) a(i, j) = design.z(r, j + 1) - z_last(i);
    w(i) = design.weights(r);
  }
  const Eigen::MatrixXd atw = a.transpose() * w.asDiagonal();
  const Eigen::MatrixXd b = pivoted_solve(atw * a, atw, &condition_number_);

  for (int j = 0; j < m - 1; ++j) {
    double to_empty = 0.0;
    double to_full = 0.0;
    for (Eigen::Index i = 0; i < n_mid; ++i) {
      const double bji = b(j, i);
      projection_(j + 1, mid[static_cast<std::size_t>(i)]) = bji;
      to_empty -= bji * (1.0 - z_last(i));
      to_full -= bji * z_last(i);
    }
    projection_(j + 1, e) += to_empty;
    projection_(j + 1, f) += to_full;
  }
  projection_.row(m) = -projection_.middleRows(1, m - 1).colwise().sum();
  projection_(m, f) += 1.0;
  projection_(m, e) -= 1.0;
}

Eigen::VectorXd WlsSolver::solve(const Eigen::VectorXd& v) const {
  if (v.size() != projection_.cols()) throw DomainError("contribution vector length does not match design rows");
  return projection_ * v;
}

Explanation WlsSolver::solve(const ContributionVector& v) const {
  const Eigen::VectorXd coefficients = solve(v.aligned(design_));
  Explanation out;
  out.phi0 = coefficients(0);
  out.phi = coefficients.tail(design_.m);
  out.prediction = v.at(Coalition::full(design_.m));
  return out;
}

ConstraintMode default_constraint_mode(const CoalitionMatrix& design) {
  return design.enumerated ? ConstraintMode::kHard : ConstraintMode::kSoft;
}

Explanation solve_wls(const CoalitionMatrix& design, const ContributionVector& v) {
  return solve_wls(design, v, default_constraint_mode(design));
}

Explanation solve_wls(const CoalitionMatrix& design, const ContributionVector& v, ConstraintMode mode) {
  return WlsSolver(design, mode).solve(v);
}

Explanation exact_shapley(const ContributionVector& v, int m, int cap) {
  check_feature_count(m);
  if (m > cap) throw DomainError("exact Shapley values need full enumeration; m exceeds cap");
  const std::uint64_t count = std::uint64_t{1} << m;
  std::vector<double> table(count);
  for (std::uint64_t bits = 0; bits < count; ++bits) table[bits] = v.at(Coalition(bits));

  std::vector<double> weight(static_cast<std::size_t>(m));
  for (int s = 0; s < m; ++s) weight[static_cast<std::size_t>(s)] = shapley_permutation_weight(m, s);

  Explanation out;
  out.phi0 = table[0];
  out.prediction = table[count - 1];
  out.phi = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    double acc = 0.0;
    for (std::uint64_t bits = 0; bits < count; ++bits) {
      if (bits & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(bits))] * (table[bits | bit] - table[bits]);
    }
    out.phi(j) = acc;
  }
  return out;
}

}  // namespace depshap
