#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace depshap {

/// Training features with their sample mean and (1/(n-1)) sample covariance.
class TrainingMatrix {
 public:
  TrainingMatrix() = default;
  explicit TrainingMatrix(Eigen::MatrixXd data, std::vector<std::string> column_names = {});

  const Eigen::MatrixXd& data() const { return data_; }
  const std::vector<std::string>& column_names() const { return names_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }

  Eigen::Index rows() const { return data_.rows(); }
  int features() const { return static_cast<int>(data_.cols()); }

 private:
  Eigen::MatrixXd data_;
  std::vector<std::string> names_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
};

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data);
Eigen::MatrixXd correlation_from_covariance(const Eigen::MatrixXd& covariance);

}  // namespace depshap
