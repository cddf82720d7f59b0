#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace altprobe {

/// Fully connected layer: out = W * in + b.
struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out

  bool operator==(const DenseLayer& o) const { return weights == o.weights && bias == o.bias; }
};

/// Layer widths from input to the single output logit, e.g. {d, h, 1}.
using Architecture = std::vector<std::size_t>;

std::size_t parameter_count(const Architecture& arch);
Eigen::VectorXd pack(std::span<const DenseLayer> layers);
std::vector<DenseLayer> unpack(const Architecture& arch, const Eigen::VectorXd& theta);

/// Logits of a rectifier network (no activation after the last layer).
Eigen::VectorXd forward_logits(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x);

/// Mean binary log-loss of a rectifier network plus (l2/2) * sum of squared
/// weights; biases are not penalized.  Parameters are packed layer by
/// layer, weights (column-major) then bias.
class PenalizedLogLoss {
 public:
  PenalizedLogLoss(Architecture arch, const Eigen::MatrixXd& x, std::span<const int> y, double l2);

  const Architecture& architecture() const { return arch_; }
  std::size_t size() const { return parameter_count(arch_); }

  double value(const Eigen::VectorXd& theta) const;
  /// Returns the loss and writes the analytic gradient into `grad`.
  double value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const;

  /// Gradient and Hessian for the single-layer (logistic regression) case.
  /// Only valid when architecture().size() == 2.
  double linear_newton_terms(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hessian) const;

 private:
  Architecture arch_;
  const Eigen::MatrixXd& x_;
  Eigen::VectorXd y_;
  double l2_;
};

/// Numerically stable log(1 + exp(z)).
double softplus(double z);
double sigmoid(double z);

}  // namespace altprobe
