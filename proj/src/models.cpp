#include "depshap/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "depshap/errors.hpp"
#include "depshap/random.hpp"

namespace depshap {

double fun1(double x) { return x < -0.5 ? -1.0 : (x >= 0.5 ? 1.0 : 0.0); }

double fun2(double x) { return x >= 0.0 ? 2.0 : 0.0; }

double fun3(double x) {
  if (x < -1.0) return -0.5;
  if (x < 1.0) return 0.5;
  return 1.5;
}

Eigen::VectorXd sampling_mean(SamplingModel model, const Eigen::MatrixXd& x) {
  if (x.cols() != 3 && x.cols() != 10) throw DomainError("sampling models are defined for 3 or 10 features");
  const int group = x.cols() == 3 ? 1 : 3;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (int g = 0; g < 3; ++g) {
      for (int t = 0; t < group; ++t) {
        const double v = x(i, g * group + t);
        if (model == SamplingModel::kLinear) {
          acc += v;
        } else {
          acc += g == 0 ? fun1(v) : (g == 1 ? fun2(v) : fun3(v));
        }
      }
    }
    y(i) = acc;
  }
  return y;
}

Eigen::VectorXd sample_response(SamplingModel model, const Eigen::MatrixXd& x, double noise_sd, std::uint64_t seed) {
  if (!(noise_sd >= 0)) throw DomainError("noise_sd must be non-negative");
  Eigen::VectorXd y = sampling_mean(model, x);
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_sd * normal(rng);
  return y;
}

std::unique_ptr<LinearModel> fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Diagnostics* diag) {
  if (x.rows() != y.size()) throw DomainError("fit_ols: row count mismatch");
  if (x.rows() <= x.cols()) throw DomainError("fit_ols needs more rows than features");
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) note(diag, "fit_ols: design is rank deficient; using a pivoted basic solution");
  const Eigen::VectorXd coef = qr.solve(y);
  return std::make_unique<LinearModel>(coef(0), coef.tail(x.cols()));
}

// ---------------------------------------------------------------------------

Eigen::VectorXd BoostedTrees::predict(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != features_) throw DomainError("boosted trees: wrong number of features");
  Eigen::VectorXd out = Eigen::VectorXd::Constant(rows.rows(), base_);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double acc = 0.0;
    for (const Tree& tree : trees_) {
      int node = 0;
      while (tree[static_cast<std::size_t>(node)].feature >= 0) {
        const Node& n = tree[static_cast<std::size_t>(node)];
        node = rows(i, n.feature) < n.threshold ? n.left : n.right;
      }
      acc += tree[static_cast<std::size_t>(node)].value;
    }
    out(i) += acc;
  }
  return out;
}

namespace {

// Split thresholds: midpoints between distinct values, thinned to quantiles
// when there are more than max_bins of them.
std::vector<double> bin_edges(const Eigen::VectorXd& column, int max_bins) {
  std::vector<double> v(column.begin(), column.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> edges;
  if (std::ssize(v) <= max_bins) {
    for (std::size_t i = 1; i < v.size(); ++i) edges.push_back(0.5 * (v[i - 1] + v[i]));
    return edges;
  }
  for (int b = 1; b < max_bins; ++b) {
    const auto idx = static_cast<std::size_t>(static_cast<double>(b) * static_cast<double>(v.size()) / max_bins);
    edges.push_back(0.5 * (v[idx - 1] + v[idx]));
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

struct Split {
  int feature = -1;
  int bin = -1;  // rows with bin index <= bin go left
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<std::uint16_t>>& bins, const std::vector<std::vector<double>>& edges,
              const BoostingOptions& options)
      : bins_(bins), edges_(edges), options_(options) {}

  BoostedTrees::Tree build(const Eigen::VectorXd& residual, std::vector<Eigen::Index> rows) {
    tree_.clear();
    grow(residual, std::move(rows), 0);
    return tree_;
  }

 private:
  double leaf_weight(double g, double n) const { return g / (n + options_.l2); }
  double score(double g, double n) const { return g * g / (n + options_.l2); }

  int grow(const Eigen::VectorXd& residual, std::vector<Eigen::Index> rows, int depth) {
    const int id = static_cast<int>(tree_.size());
    tree_.emplace_back();
    double g_total = 0.0;
    for (Eigen::Index r : rows) g_total += residual(r);
    const auto n_total = static_cast<double>(rows.size());
    const Split split = depth < options_.max_depth ? best_split(residual, rows, g_total, n_total) : Split{};
    if (split.feature < 0) {
      tree_[static_cast<std::size_t>(id)].value = options_.learning_rate * leaf_weight(g_total, n_total);
      return id;
    }
    std::vector<Eigen::Index> left;
    std::vector<Eigen::Index> right;
    const auto& feature_bins = bins_[static_cast<std::size_t>(split.feature)];
    for (Eigen::Index r : rows) {
      (feature_bins[static_cast<std::size_t>(r)] <= split.bin ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(residual, std::move(left), depth + 1);
    const int rgt = grow(residual, std::move(right), depth + 1);
    BoostedTrees::Node& node = tree_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = edges_[static_cast<std::size_t>(split.feature)][static_cast<std::size_t>(split.bin)];
    node.left = l;
    node.right = rgt;
    return id;
  }

  Split best_split(const Eigen::VectorXd& residual, const std::vector<Eigen::Index>& rows, double g_total,
                   double n_total) const {
    Split best;
    const double parent = score(g_total, n_total);
    for (std::size_t f = 0; f < bins_.size(); ++f) {
      const std::size_t n_bins = edges_[f].size() + 1;
      if (n_bins < 2) continue;
      std::vector<double> g(n_bins, 0.0);
      std::vector<double> c(n_bins, 0.0);
      for (Eigen::Index r : rows) {
        const std::uint16_t b = bins_[f][static_cast<std::size_t>(r)];
        g[b] += residual(r);
        c[b] += 1.0;
      }
      double gl = 0.0;
      double cl = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        gl += g[b];
        cl += c[b];
        const double cr = n_total - cl;
        if (cl < options_.min_child_rows || cr < options_.min_child_rows) continue;
        const double gain = score(gl, cl) + score(g_total - gl, cr) - parent;
        if (gain > best.gain + 1e-12) best = Split{static_cast<int>(f), static_cast<int>(b), gain};
      }
    }
    return best;
  }

  const std::vector<std::vector<std::uint16_t>>& bins_;
  const std::vector<std::vector<double>>& edges_;
  const BoostingOptions& options_;
  BoostedTrees::Tree tree_;
};

}  // namespace

std::unique_ptr<BoostedTrees> fit_boosted_trees(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                const BoostingOptions& options) {
  if (x.rows() != y.size() || x.rows() < 2) throw DomainError("fit_boosted_trees: bad training data");
  if (options.rounds < 0 || options.max_depth < 1 || options.max_bins < 2 || options.max_bins > 65536 ||
      !(options.learning_rate > 0)) {
    throw DomainError("fit_boosted_trees: invalid options");
  }
  const auto m = static_cast<std::size_t>(x.cols());
  std::vector<std::vector<double>> edges(m);
  std::vector<std::vector<std::uint16_t>> bins(m);
  for (std::size_t f = 0; f < m; ++f) {
    edges[f] = bin_edges(x.col(static_cast<Eigen::Index>(f)), options.max_bins);
    bins[f].resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, static_cast<Eigen::Index>(f));
      bins[f][static_cast<std::size_t>(i)] =
          static_cast<std::uint16_t>(std::upper_bound(edges[f].begin(), edges[f].end(), v) - edges[f].begin());
    }
  }
  // Bin b holds values in [edges[b-1], edges[b]); "bin <= b" matches "x < edges[b]".
  const double base = y.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), base);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  TreeBuilder builder(bins, edges, options);
  std::vector<BoostedTrees::Tree> trees;
  for (int round = 0; round < options.rounds; ++round) {
    const Eigen::VectorXd residual = y - pred;
    trees.push_back(builder.build(residual, all));
    BoostedTrees single(0.0, {trees.back()}, static_cast<int>(m));
    pred += single.predict(x);
  }
  return std::make_unique<BoostedTrees>(base, std::move(trees), static_cast<int>(m));
}

}  // namespace depshap
