#include "depshap/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "depshap/errors.hpp"
#include "depshap/parallel.hpp"

namespace depshap {
namespace {

// Number of pairs among runs of equal values in a sorted sequence.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total + run * (run - 1) / 2;
}

// Sorts v in place and returns the number of inversions (pairs i < l with v[i] > v[l]).
std::int64_t merge_sort_swaps(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_sort_swaps(v, buf, lo, mid) + merge_sort_swaps(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

bool is_constant(const Eigen::VectorXd& col) { return col.minCoeff() == col.maxCoeff(); }

}  // namespace

double kendall_tau(std::span<const double> xj, std::span<const double> xk) {
  if (xj.size() != xk.size()) throw DomainError("kendall_tau: length mismatch");
  const std::size_t n = xj.size();
  if (n < 2) throw DomainError("kendall_tau needs at least two observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(xj[i]) || !std::isfinite(xk[i])) throw DomainError("kendall_tau: non-finite value");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return xj[a] < xj[b] || (xj[a] == xj[b] && xk[a] < xk[b]);
  });
  std::vector<double> a(n);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = xj[idx[i]];
    b[i] = xk[idx[i]];
  }
  const std::int64_t ties_x = tied_pairs(n, [&](std::size_t p, std::size_t q) { return a[p] == a[q]; });
  const std::int64_t ties_xy =
      tied_pairs(n, [&](std::size_t p, std::size_t q) { return a[p] == a[q] && b[p] == b[q]; });
  std::vector<double> buf(n);
  const std::int64_t swaps = merge_sort_swaps(b, buf, 0, n);
  const std::int64_t ties_y = tied_pairs(n, [&](std::size_t p, std::size_t q) { return b[p] == b[q]; });
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t pairs = nn * (nn - 1) / 2;
  // Concordant minus discordant pairs.
  const std::int64_t s = pairs - ties_x - ties_y + ties_xy - 2 * swaps;
  return static_cast<double>(2 * s) / static_cast<double>(nn * (nn - 1));
}

Eigen::MatrixXd dissimilarity(const Eigen::MatrixXd& data, Diagnostics* diag, int threads) {
  if (data.rows() < 2) throw DomainError("dissimilarity needs at least two rows");
  const auto m = static_cast<int>(data.cols());
  std::vector<bool> constant(static_cast<std::size_t>(m));
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    cols[static_cast<std::size_t>(j)].assign(data.col(j).begin(), data.col(j).end());
    constant[static_cast<std::size_t>(j)] = is_constant(data.col(j));
    if (constant[static_cast<std::size_t>(j)]) {
      note(diag, "column " + std::to_string(j + 1) + " is constant; Kendall's tau undefined, dissimilarity set to 1");
    }
  }
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) pairs.emplace_back(j, k);
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  parallel_for(pairs.size(), threads, [&](std::size_t p) {
    const auto [j, k] = pairs[p];
    double value = 1.0;
    if (!constant[static_cast<std::size_t>(j)] && !constant[static_cast<std::size_t>(k)]) {
      value = 1.0 - std::abs(kendall_tau(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(k)]));
    }
    d(j, k) = value;
    d(k, j) = value;
  });
  return d;
}

Eigen::MatrixXd dissimilarity(const TrainingMatrix& train, Diagnostics* diag, int threads) {
  return dissimilarity(train.data(), diag, threads);
}

// ---------------------------------------------------------------------------

std::vector<int> Dendrogram::leaf_order() const {
  if (merges.empty()) {
    std::vector<int> out(static_cast<std::size_t>(leaves));
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  std::vector<int> out;
  std::vector<int> stack{leaves + static_cast<int>(merges.size()) - 1};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < leaves) {
      out.push_back(id);
      continue;
    }
    const Merge& mg = merges[static_cast<std::size_t>(id - leaves)];
    stack.push_back(mg.b);
    stack.push_back(mg.a);
  }
  return out;
}

std::vector<std::vector<int>> Dendrogram::cut(int clusters) const {
  if (clusters < 1 || clusters > leaves) throw DomainError("cut: cluster count out of range");
  std::vector<int> parent(static_cast<std::size_t>(leaves) + merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  const std::size_t applied = static_cast<std::size_t>(leaves - clusters);
  std::vector<std::vector<int>> members(static_cast<std::size_t>(leaves) + merges.size());
  for (int i = 0; i < leaves; ++i) members[static_cast<std::size_t>(i)] = {i};
  for (std::size_t i = 0; i < applied; ++i) {
    const Merge& mg = merges[i];
    auto& out = members[static_cast<std::size_t>(leaves) + i];
    out = members[static_cast<std::size_t>(mg.a)];
    out.insert(out.end(), members[static_cast<std::size_t>(mg.b)].begin(), members[static_cast<std::size_t>(mg.b)].end());
    members[static_cast<std::size_t>(mg.a)].clear();
    members[static_cast<std::size_t>(mg.b)].clear();
  }
  std::vector<std::vector<int>> groups;
  for (std::size_t i = 0; i < static_cast<std::size_t>(leaves) + applied; ++i) {
    if (members[i].empty()) continue;
    std::vector<int> g = members[i];
    std::sort(g.begin(), g.end());
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return groups;
}

Dendrogram complete_linkage(const Eigen::MatrixXd& d) {
  const auto m = static_cast<int>(d.rows());
  if (m < 1 || d.cols() != m) throw DomainError("complete_linkage needs a square matrix");
  if (!d.allFinite() || (d - d.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("complete_linkage needs a finite symmetric matrix");
  }
  Dendrogram tree;
  tree.leaves = m;
  // Distances between active clusters, indexed by cluster id.
  const int total = 2 * m - 1;
  Eigen::MatrixXd dist = Eigen::MatrixXd::Constant(total, total, std::numeric_limits<double>::infinity());
  dist.topLeftCorner(m, m) = d;
  std::vector<int> active(static_cast<std::size_t>(m));
  std::iota(active.begin(), active.end(), 0);
  std::vector<int> size(static_cast<std::size_t>(total), 1);
  for (int step = 0; step < m - 1; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    std::size_t bj = 1;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double v = dist(active[i], active[j]);
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    }
    const int a = active[bi];
    const int b = active[bj];
    const int id = m + step;
    for (int c : active) {
      if (c == a || c == b) continue;
      const double v = std::max(dist(a, c), dist(b, c));
      dist(id, c) = v;
      dist(c, id) = v;
    }
    size[static_cast<std::size_t>(id)] = size[static_cast<std::size_t>(a)] + size[static_cast<std::size_t>(b)];
    tree.merges.push_back(Merge{a, b, best, size[static_cast<std::size_t>(id)]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    active.push_back(id);
  }
  return tree;
}

// ---------------------------------------------------------------------------

std::vector<int> ClusterAssignment::membership() const {
  std::vector<int> out(static_cast<std::size_t>(features()), -1);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (int j : groups[g]) out[static_cast<std::size_t>(j)] = static_cast<int>(g);
  }
  return out;
}

namespace {

// Orders groups by the first appearance of any member in the leaf order.
void order_by_leaves(ClusterAssignment& a) {
  const std::vector<int> order = a.dendrogram.leaf_order();
  std::vector<int> position(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  auto first = [&](const std::vector<int>& g) {
    int best = std::numeric_limits<int>::max();
    for (int j : g) best = std::min(best, position[static_cast<std::size_t>(j)]);
    return best;
  };
  std::stable_sort(a.groups.begin(), a.groups.end(),
                   [&](const auto& x, const auto& y) { return first(x) < first(y); });
  a.labels.clear();
  for (std::size_t g = 0; g < a.groups.size(); ++g) a.labels.push_back("g" + std::to_string(g + 1));
}

double average_spread(const std::vector<std::vector<int>>& groups, const Eigen::MatrixXd& d) {
  double sum = 0.0;
  int count = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    double within = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        within += d(g[i], g[j]);
        ++pairs;
      }
    }
    sum += within / pairs;
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

}  // namespace

ClusterAssignment kgs_cut(const Dendrogram& dendrogram, const Eigen::MatrixXd& d, double alpha) {
  if (!(alpha > 0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  const int m = dendrogram.leaves;
  if (d.rows() != m || d.cols() != m) throw DomainError("kgs_cut: dissimilarity size does not match the tree");
  ClusterAssignment out;
  out.alpha = alpha;
  out.dendrogram = dendrogram;
  const double top = dendrogram.merges.empty() ? 0.0 : dendrogram.merges.back().height;

  if (m == 1 || top == 0.0) {
    out.groups = dendrogram.cut(1);
  } else if (m == 2) {
    out.groups = dendrogram.cut(2);
  } else {
    for (int c = 2; c <= m - 1; ++c) {
      PenaltyRow row;
      row.clusters = c;
      row.average_spread = average_spread(dendrogram.cut(c), d);
      out.penalty_table.push_back(row);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : out.penalty_table) {
      lo = std::min(lo, r.average_spread);
      hi = std::max(hi, r.average_spread);
    }
    int best = -1;
    for (std::size_t i = 0; i < out.penalty_table.size(); ++i) {
      PenaltyRow& r = out.penalty_table[i];
      r.normalized_spread = hi > lo ? (m - 3) * (r.average_spread - lo) / (hi - lo) + 1.0 : 1.0;
      r.penalty = r.normalized_spread + alpha * r.clusters;
      if (best < 0 || r.penalty < out.penalty_table[static_cast<std::size_t>(best)].penalty) best = static_cast<int>(i);
    }
    out.groups = dendrogram.cut(out.penalty_table[static_cast<std::size_t>(best)].clusters);
  }
  order_by_leaves(out);
  return out;
}

ClusterAssignment assignment_from_groups(std::vector<std::vector<int>> groups, int features) {
  std::vector<int> seen(static_cast<std::size_t>(features), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw DomainError("partition has an empty group");
    for (int j : g) {
      if (j < 0 || j >= features) throw DomainError("partition refers to an unknown feature");
      ++seen[static_cast<std::size_t>(j)];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
    throw DomainError("groups do not partition the features");
  }
  ClusterAssignment out;
  out.groups = std::move(groups);
  out.dendrogram.leaves = features;
  for (std::size_t g = 0; g < out.groups.size(); ++g) out.labels.push_back("g" + std::to_string(g + 1));
  return out;
}

GroupExplanation aggregate_shapley(const Explanation& explanation, const ClusterAssignment& assignment) {
  const auto m = static_cast<int>(explanation.phi.size());
  if (assignment.features() != m) throw DomainError("partition does not match the explanation's features");
  const std::vector<int> member = assignment.membership();
  if (std::any_of(member.begin(), member.end(), [](int g) { return g < 0; })) {
    throw DomainError("partition does not cover every feature");
  }
  GroupExplanation out;
  out.phi0 = explanation.phi0;
  out.prediction = explanation.prediction;
  out.labels = assignment.labels;
  out.phi = Eigen::VectorXd::Zero(std::ssize(assignment.groups));
  for (int j = 0; j < m; ++j) out.phi(member[static_cast<std::size_t>(j)]) += explanation.phi(j);
  out.waterfall.resize(assignment.groups.size());
  std::iota(out.waterfall.begin(), out.waterfall.end(), 0);
  std::stable_sort(out.waterfall.begin(), out.waterfall.end(),
                   [&](int a, int b) { return std::abs(out.phi(a)) > std::abs(out.phi(b)); });
  return out;
}

std::string assignment_json(const ClusterAssignment& assignment, const std::vector<std::string>& names) {
  nlohmann::ordered_json root;
  root["alpha"] = assignment.alpha;
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (std::size_t g = 0; g < assignment.groups.size(); ++g) {
    nlohmann::ordered_json jg;
    jg["label"] = assignment.labels[g];
    std::vector<int> one_based;
    std::vector<std::string> member_names;
    for (int j : assignment.groups[g]) {
      one_based.push_back(j + 1);
      member_names.push_back(static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                         : "x" + std::to_string(j + 1));
    }
    jg["features"] = one_based;
    jg["names"] = member_names;
    groups.push_back(jg);
  }
  root["groups"] = groups;
  nlohmann::ordered_json merges = nlohmann::ordered_json::array();
  for (const Merge& mg : assignment.dendrogram.merges) {
    merges.push_back({{"a", mg.a}, {"b", mg.b}, {"height", mg.height}, {"size", mg.size}});
  }
  root["merges"] = merges;
  std::vector<int> order;
  for (int j : assignment.dendrogram.leaf_order()) order.push_back(j + 1);
  root["leaf_order"] = order;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const PenaltyRow& r : assignment.penalty_table) {
    table.push_back({{"clusters", r.clusters},
                     {"average_spread", r.average_spread},
                     {"normalized_spread", r.normalized_spread},
                     {"penalty", r.penalty}});
  }
  root["penalty_table"] = table;
  return root.dump(2) + "\n";
}

}  // namespace depshap
