#pragma once

// Coalition designs, Shapley kernel weights, the weighted least squares
// Shapley estimator and the exact combinatorial Shapley formula.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "depshap/coalition.hpp"

namespace depshap {

inline constexpr double kDefaultInfiniteWeight = 1e6;
inline constexpr int kDefaultEnumerationCap = 13;

/// Shapley kernel weight k(m, s) = (m-1) / (C(m, s) * s * (m-s)) for 0 < s < m.
///
/// The empty and full coalitions carry infinite weight; asking for them throws
/// DomainError so the caller substitutes a large constant or a hard constraint.
double shapley_kernel_weight(int m, int s);

// Weight |S|!(m-|S|-1)!/m! that the exact formula gives a coalition of size s.
double shapley_permutation_weight(int m, int s);

struct CoalitionMatrix {
  int m = 0;
  std::vector<Coalition> rows;
  // n_rows x (m+1); column 0 is all ones, column j+1 flags feature j.
  Eigen::MatrixXd z;
  Eigen::VectorXd weights;
  bool includes_empty_and_full = false;
  // True when rows cover all 2^m coalitions.
  bool enumerated = false;
  double infinite_weight = kDefaultInfiniteWeight;

  std::size_t n_rows() const { return rows.size(); }
  std::optional<std::size_t> find(Coalition s) const;
};

/// All 2^m coalitions ordered by size, then lexicographically.
CoalitionMatrix enumerate_coalitions(int m, int cap = kDefaultEnumerationCap,
                                     double infinite_weight = kDefaultInfiniteWeight);

/// Draws n_draws coalitions with replacement from the proper non-empty subsets,
/// with probability proportional to the kernel weight. Duplicates are merged and
/// their multiplicity becomes the row weight. The empty and full sets are
/// appended with the infinite weight.
CoalitionMatrix sample_coalitions(int m, int n_draws, std::uint64_t seed,
                                  double infinite_weight = kDefaultInfiniteWeight);

/// v(S) for a set of coalitions.
class ContributionVector {
 public:
  explicit ContributionVector(int m) : m_(m) {}

  int m() const { return m_; }
  void set(Coalition s, double value) { values_[s.bits()] = value; }
  bool contains(Coalition s) const { return values_.contains(s.bits()); }
  double at(Coalition s) const;
  std::size_t size() const { return values_.size(); }

  // Values aligned with the rows of a design; throws IncompleteTableError.
  Eigen::VectorXd aligned(const CoalitionMatrix& design) const;

 private:
  int m_;
  std::unordered_map<std::uint64_t, double> values_;
};

struct Explanation {
  double phi0 = 0.0;
  Eigen::VectorXd phi;
  double prediction = 0.0;
  std::string estimator_id;
  std::uint64_t seed = 0;
  int sample_budget = 0;

  double total() const { return phi0 + phi.sum(); }
};

// |phi0 + sum(phi) - prediction| <= tolerance * max(1, |prediction|).
bool satisfies_efficiency(const Explanation& e, double tolerance = 1e-6);

enum class ConstraintMode {
  // phi0 = v(empty) and phi0 + sum(phi) = v(full) are imposed exactly.
  kHard,
  // Empty and full coalitions weighted by the large constant C.
  kSoft,
};

/// Weighted least squares Shapley solver for a fixed design. Builds the
/// projection R = (Z^T W Z)^{-1} Z^T W once so any number of contribution
/// vectors can be solved by a matrix-vector product.
class WlsSolver {
 public:
  WlsSolver(const CoalitionMatrix& design, ConstraintMode mode);

  const CoalitionMatrix& design() const { return design_; }
  ConstraintMode mode() const { return mode_; }
  // (m+1) x n_rows.
  const Eigen::MatrixXd& projection() const { return projection_; }
  double condition_number() const { return condition_number_; }

  // v aligned with design rows; returns (phi0, phi1, ..., phim).
  Eigen::VectorXd solve(const Eigen::VectorXd& v) const;
  Explanation solve(const ContributionVector& v) const;

 private:
  CoalitionMatrix design_;
  ConstraintMode mode_;
  Eigen::MatrixXd projection_;
  double condition_number_ = 1.0;
};

// Hard constraints for enumerated designs, soft otherwise.
ConstraintMode default_constraint_mode(const CoalitionMatrix& design);

Explanation solve_wls(const CoalitionMatrix& design, const ContributionVector& v);
Explanation solve_wls(const CoalitionMatrix& design, const ContributionVector& v, ConstraintMode mode);

/// phi_j = sum over S not containing j of |S|!(m-|S|-1)!/m! (v(S+j) - v(S)).
Explanation exact_shapley(const ContributionVector& v, int m, int cap = kDefaultEnumerationCap);

}  // namespace depshap
