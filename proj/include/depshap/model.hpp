#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace depshap {

// Intercept and slopes of a model that is exactly linear in its inputs.
struct LinearCoefficients {
  double intercept = 0.0;
  Eigen::VectorXd beta;
};

/// Predictor contract: a deterministic, vectorized map from an n x M matrix of
/// feature rows to n predictions. Implementations must be safe to call from
/// several threads at once.
class Model {
 public:
  virtual ~Model() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const = 0;
  virtual std::string name() const { return "model"; }
  // Set when predictions are exactly intercept + rows * beta.
  virtual std::optional<LinearCoefficients> linear_coefficients() const { return std::nullopt; }
};

// Adapts a callable to the Model interface.
class FunctionModel final : public Model {
 public:
  using Fn = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
  explicit FunctionModel(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const override { return fn_(rows); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

class LinearModel final : public Model {
 public:
  LinearModel(double intercept, Eigen::VectorXd beta) : coef_{intercept, std::move(beta)} {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& rows) const override;
  std::string name() const override { return "linear"; }
  std::optional<LinearCoefficients> linear_coefficients() const override { return coef_; }
  const LinearCoefficients& coefficients() const { return coef_; }

 private:
  LinearCoefficients coef_;
};

/// Calls model.predict and validates the result. Any failure (exception, wrong
/// length, non-finite output) is rethrown as PredictorError carrying the first
/// row that fails when evaluated on its own. ProtocolError passes through
/// unchanged since retrying rows against a broken model process is pointless.
Eigen::VectorXd evaluate(const Model& model, const Eigen::MatrixXd& rows);

double evaluate_one(const Model& model, const Eigen::VectorXd& row);

}  // namespace depshap
