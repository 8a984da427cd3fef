#pragma once

// Sampling models for the simulated response and the built-in predictors
// fitted to it.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "depshap/diagnostics.hpp"
#include "depshap/model.hpp"

namespace depshap {

// Step functions used by the piecewise constant sampling model.
double fun1(double x);
double fun2(double x);
double fun3(double x);

enum class SamplingModel { kLinear, kPiecewise };

/// Noise-free response g(x). Dimension 3 uses features 1-3 directly;
/// dimension 10 uses the groups {1,2,3}, {4,5,6}, {7,8,9}; feature 10 is inert.
Eigen::VectorXd sampling_mean(SamplingModel model, const Eigen::MatrixXd& x);

/// g(x) + eps with eps ~ N(0, noise_sd^2).
Eigen::VectorXd sample_response(SamplingModel model, const Eigen::MatrixXd& x, double noise_sd, std::uint64_t seed);

/// Ordinary least squares with intercept (pivoted QR; rank deficiency is noted).
std::unique_ptr<LinearModel> fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Diagnostics* diag = nullptr);

struct BoostingOptions {
  int rounds = 50;
  int max_depth = 3;
  double learning_rate = 0.1;
  int max_bins = 256;
  double l2 = 1.0;
  int min_child_rows = 1;
};

/// Gradient-boosted regression trees on histogram-binned features, squared loss.
class BoostedTrees final : public Model {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // rows with x < threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  BoostedTrees(double base_score, std::vector<Tree> trees, int features)
      : base_(base_score), trees_(std::move(trees)), features_(features) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const override;
  std::string name() const override { return "boosted_trees"; }

  double base_score() const { return base_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  double base_;
  std::vector<Tree> trees_;
  int features_;
};

std::unique_ptr<BoostedTrees> fit_boosted_trees(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                                const BoostingOptions& options = {});

}  // namespace depshap
