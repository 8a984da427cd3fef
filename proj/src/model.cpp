#include "depshap/model.hpp"

#include <cmath>
#include <exception>
#include <vector>

#include "depshap/errors.hpp"

namespace depshap {
namespace {

std::vector<double> row_values(const Eigen::MatrixXd& rows, Eigen::Index i) {
  std::vector<double> out(static_cast<std::size_t>(rows.cols()));
  for (Eigen::Index j = 0; j < rows.cols(); ++j) out[static_cast<std::size_t>(j)] = rows(i, j);
  return out;
}

// Empty string when the single-row call succeeds.
std::string single_row_failure(const Model& model, const Eigen::MatrixXd& rows, Eigen::Index i) {
  try {
    const Eigen::VectorXd y = model.predict(rows.row(i));
    if (y.size() != 1) return "returned " + std::to_string(y.size()) + " values for 1 row";
    if (!std::isfinite(y(0))) return "returned a non-finite prediction";
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

[[noreturn]] void locate_and_throw(const Model& model, const Eigen::MatrixXd& rows, const std::string& batch_reason) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const std::string reason = single_row_failure(model, rows, i);
    if (!reason.empty()) {
      throw PredictorError("predictor '" + model.name() + "' failed on row " + std::to_string(i) + ": " + reason,
                           row_values(rows, i));
    }
  }
  throw PredictorError("predictor '" + model.name() + "' failed on a batch of " + std::to_string(rows.rows()) +
                           " rows: " + batch_reason,
                       rows.rows() > 0 ? row_values(rows, 0) : std::vector<double>{});
}

}  // namespace

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != coef_.beta.size()) throw DomainError("linear model: wrong number of features");
  return (rows * coef_.beta).array() + coef_.intercept;
}

Eigen::VectorXd evaluate(const Model& model, const Eigen::MatrixXd& rows) {
  std::string reason;
  try {
    Eigen::VectorXd y = model.predict(rows);
    if (y.size() != rows.rows()) {
      reason = "returned " + std::to_string(y.size()) + " predictions for " + std::to_string(rows.rows()) + " rows";
    } else if (!y.allFinite()) {
      reason = "returned a non-finite prediction";
    } else {
      return y;
    }
  } catch (const PredictorError&) {
    throw;
  } catch (const ProtocolError&) {
    throw;
  } catch (const std::exception& e) {
    reason = e.what();
  }
  locate_and_throw(model, rows, reason);
}

double evaluate_one(const Model& model, const Eigen::VectorXd& row) {
  const Eigen::MatrixXd rows = row.transpose();
  return evaluate(model, rows)(0);
}

}  // namespace depshap
