#pragma once

// Feature grouping: Kendall's tau dissimilarity, complete-linkage clustering,
// a Kelley-Gardner-Sutcliffe style dendrogram cut, and group Shapley values.

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "depshap/coalitions.hpp"
#include "depshap/diagnostics.hpp"
#include "depshap/training.hpp"

namespace depshap {

/// tau = (1/(n(n-1))) sum_{i != l} sign(xj_i - xj_l) sign(xk_i - xk_l), with
/// sign(0) = 0 and no tie correction. O(n log n).
double kendall_tau(std::span<const double> xj, std::span<const double> xk);

/// Entries 1 - |tau|; a constant column gets dissimilarity 1 to every other column.
Eigen::MatrixXd dissimilarity(const TrainingMatrix& train, Diagnostics* diag = nullptr, int threads = 1);
Eigen::MatrixXd dissimilarity(const Eigen::MatrixXd& data, Diagnostics* diag = nullptr, int threads = 1);

struct Merge {
  // Cluster ids: 0..M-1 are leaves, M+i is the cluster formed by merge i.
  int a = 0;
  int b = 0;
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;

  // Leaf indices in drawing order (left subtree first).
  std::vector<int> leaf_order() const;
  // Partition into c clusters obtained by undoing the last c-1 merges; each
  // group is sorted, groups are ordered by their smallest member.
  std::vector<std::vector<int>> cut(int clusters) const;
};

/// Agglomerates by smallest inter-cluster dissimilarity, where the distance
/// between clusters is the largest pairwise entry. Ties go to the pair with the
/// smallest ids.
Dendrogram complete_linkage(const Eigen::MatrixXd& d);

struct PenaltyRow {
  int clusters = 0;
  double average_spread = 0.0;
  double normalized_spread = 0.0;
  double penalty = 0.0;
};

struct ClusterAssignment {
  // Groups ordered by dendrogram leaf order; labels g1..gk follow that order.
  std::vector<std::vector<int>> groups;
  std::vector<std::string> labels;
  double alpha = 1.0;
  std::vector<PenaltyRow> penalty_table;
  Dendrogram dendrogram;

  int features() const { return dendrogram.leaves; }
  // Group index of every feature.
  std::vector<int> membership() const;
};

/// For c = 2..M-1 clusters: mean pairwise dissimilarity inside each cluster
/// with at least two members, averaged over those clusters, rescaled to
/// [1, M-2] across levels, plus alpha * c. The minimizing level wins (ties go
/// to fewer clusters). A tree whose final merge height is 0 is one cluster.
ClusterAssignment kgs_cut(const Dendrogram& dendrogram, const Eigen::MatrixXd& d, double alpha = 1.0);

// Builds an assignment from an explicit partition (labels in the given order).
ClusterAssignment assignment_from_groups(std::vector<std::vector<int>> groups, int features);

struct GroupExplanation {
  double phi0 = 0.0;
  double prediction = 0.0;
  std::vector<std::string> labels;
  Eigen::VectorXd phi;
  // Group indices ranked by |phi|, largest first (ties by index).
  std::vector<int> waterfall;
};

GroupExplanation aggregate_shapley(const Explanation& explanation, const ClusterAssignment& assignment);

/// JSON with groups (member names), labels, alpha, merges and the penalty table.
std::string assignment_json(const ClusterAssignment& assignment, const std::vector<std::string>& names);

}  // namespace depshap
