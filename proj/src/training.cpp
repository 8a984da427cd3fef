#include "depshap/training.hpp"

#include <cmath>

#include "depshap/errors.hpp"

namespace depshap {

TrainingMatrix::TrainingMatrix(Eigen::MatrixXd data, std::vector<std::string> column_names)
    : data_(std::move(data)), names_(std::move(column_names)) {
  if (data_.rows() < 2) throw DomainError("training matrix needs at least two rows");
  if (data_.cols() < 1) throw DomainError("training matrix needs at least one column");
  if (!data_.allFinite()) throw DomainError("training matrix contains non-finite values");
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < data_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  }
  if (std::ssize(names_) != data_.cols()) throw DomainError("column name count does not match data");
  mean_ = data_.colwise().mean().transpose();
  covariance_ = sample_covariance(data_);
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
  return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& covariance) {
  const Eigen::VectorXd sd = covariance.diagonal().array().sqrt();
  Eigen::MatrixXd corr = covariance;
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    for (Eigen::Index j = 0; j < corr.cols(); ++j) {
      corr(i, j) = (sd(i) > 0 && sd(j) > 0) ? covariance(i, j) / (sd(i) * sd(j)) : (i == j ? 1.0 : 0.0);
    }
  }
  corr.diagonal().setOnes();
  return corr;
}

}  // namespace depshap
