#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace attrprobe {

/// Defaults: L2 penalty, C = 1.0, 200 iterations, L-BFGS, tolerance 1e-4.
struct LogisticOptions {
  double inverse_regularization = 1.0;  // C
  int max_iterations = 200;
  double gradient_tolerance = 1e-4;
  int history = 10;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  /// Set when training saw a single class; the model then always predicts it.
  std::optional<bool> constant_label;

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double probability(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// sigmoid(w.x + b) >= 0.5; an exact 0.5 predicts positive.
  bool predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct TrainReport {
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  /// Objective at the start and after every accepted step.
  std::vector<double> objective_trace;
  /// Steps taken by the steepest-descent fallback.
  int fallback_steps = 0;
};

struct TrainResult {
  LogisticModel model;
  TrainReport report;
};

/// Mean negative log-likelihood plus ||w||^2 / (2 C n); the bias is not penalized.
/// Parameters are packed as [w_0 .. w_{d-1}, b].
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::Ref<const Eigen::MatrixXd>& features, std::span<const std::uint8_t> labels,
                    double inverse_regularization);

  Eigen::Index n_params() const { return features_.cols() + 1; }
  double value(const Eigen::VectorXd& params) const;
  double evaluate(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const;

 private:
  Eigen::Ref<const Eigen::MatrixXd> features_;
  Eigen::VectorXd labels_;
  double penalty_;  // 1 / (C n)
};

/// Fits one attribute's classifier. Throws on non-finite features or empty
/// input; a single-class label vector yields a constant classifier.
TrainResult train_logistic(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const std::uint8_t> labels, const LogisticOptions& options = {});

}  // namespace attrprobe
