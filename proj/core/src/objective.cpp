#include "altprobe/objective.hpp"

#include <cmath>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t parameter_count(const Architecture& arch) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) n += arch[i + 1] * arch[i] + arch[i + 1];
  return n;
}

Eigen::VectorXd pack(std::span<const DenseLayer> layers) {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  Eigen::VectorXd theta(n);
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    theta.segment(at, l.weights.size()) = l.weights.reshaped();
    at += l.weights.size();
    theta.segment(at, l.bias.size()) = l.bias;
    at += l.bias.size();
  }
  return theta;
}

std::vector<DenseLayer> unpack(const Architecture& arch, const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count(arch)) {
    throw Error(ErrorCode::DimMismatch, fmt::format("expected {} parameters, got {}", parameter_count(arch), theta.size()));
  }
  std::vector<DenseLayer> layers;
  Eigen::Index at = 0;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    const auto rows = static_cast<Eigen::Index>(arch[i + 1]);
    const auto cols = static_cast<Eigen::Index>(arch[i]);
    DenseLayer l;
    l.weights = theta.segment(at, rows * cols).reshaped(rows, cols);
    at += rows * cols;
    l.bias = theta.segment(at, rows);
    at += rows;
    layers.push_back(std::move(l));
  }
  return layers;
}

Eigen::VectorXd forward_logits(std::span<const DenseLayer> layers, const Eigen::MatrixXd& x) {
  // Activations are kept as (width x n) so each layer is a single GEMM.
  Eigen::MatrixXd a = x.transpose();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * a;
    z.colwise() += layers[i].bias;
    a = i + 1 < layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a.row(0).transpose();
}

PenalizedLogLoss::PenalizedLogLoss(Architecture arch, const Eigen::MatrixXd& x, std::span<const int> y, double l2)
    : arch_(std::move(arch)), x_(x), y_(static_cast<Eigen::Index>(y.size())), l2_(l2) {
  if (arch_.size() < 2 || arch_.front() != static_cast<std::size_t>(x.cols()) || arch_.back() != 1) {
    throw Error(ErrorCode::DimMismatch, "architecture does not match the design matrix");
  }
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
    throw Error(ErrorCode::DimMismatch, "label count differs from row count");
  }
  for (std::size_t i = 0; i < y.size(); ++i) y_[static_cast<Eigen::Index>(i)] = y[i] ? 1.0 : 0.0;
}

double PenalizedLogLoss::value(const Eigen::VectorXd& theta) const {
  const auto layers = unpack(arch_, theta);
  const Eigen::VectorXd z = forward_logits(layers, x_);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z[i]) - y_[i] * z[i];
  loss /= static_cast<double>(z.size());
  double penalty = 0.0;
  for (const auto& l : layers) penalty += l.weights.squaredNorm();
  return loss + 0.5 * l2_ * penalty;
}

double PenalizedLogLoss::value_and_gradient(const Eigen::VectorXd& theta, Eigen::VectorXd& grad) const {
  const auto layers = unpack(arch_, theta);
  const auto n = static_cast<double>(x_.rows());

  // Forward, keeping pre-activations.
  std::vector<Eigen::MatrixXd> acts;  // acts[i]: input to layer i, (width x n)
  std::vector<Eigen::MatrixXd> pre;
  acts.emplace_back(x_.transpose());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Eigen::MatrixXd z = layers[i].weights * acts.back();
    z.colwise() += layers[i].bias;
    pre.push_back(z);
    if (i + 1 < layers.size()) acts.emplace_back(z.cwiseMax(0.0));
  }
  const Eigen::RowVectorXd logits = pre.back().row(0);

  double loss = 0.0;
  Eigen::MatrixXd delta(1, logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    loss += softplus(logits[i]) - y_[i] * logits[i];
    delta(0, i) = (sigmoid(logits[i]) - y_[i]) / n;
  }
  loss /= n;

  std::vector<DenseLayer> g(layers.size());
  for (std::size_t i = layers.size(); i-- > 0;) {
    g[i].weights = delta * acts[i].transpose() + l2_ * layers[i].weights;
    g[i].bias = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back = layers[i].weights.transpose() * delta;
      delta = back.cwiseProduct((pre[i - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  grad = pack(g);

  double penalty = 0.0;
  for (const auto& l : layers) penalty += l.weights.squaredNorm();
  return loss + 0.5 * l2_ * penalty;
}

double PenalizedLogLoss::linear_newton_terms(const Eigen::VectorXd& theta, Eigen::VectorXd& grad,
                                             Eigen::MatrixXd& hessian) const {
  if (arch_.size() != 2) throw Error(ErrorCode::InvalidConfig, "Newton terms need a single-layer model");
  const auto d = x_.cols();
  const auto n = static_cast<double>(x_.rows());
  const Eigen::VectorXd w = theta.head(d);
  const double b = theta[d];
  const Eigen::VectorXd z = (x_ * w).array() + b;

  Eigen::VectorXd r(z.size());  // p - y
  Eigen::VectorXd s(z.size());  // p (1 - p)
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = sigmoid(z[i]);
    loss += softplus(z[i]) - y_[i] * z[i];
    r[i] = p - y_[i];
    s[i] = p * (1.0 - p);
  }
  loss /= n;

  grad.resize(d + 1);
  grad.head(d) = x_.transpose() * r / n + l2_ * w;
  grad[d] = r.sum() / n;

  hessian.resize(d + 1, d + 1);
  const Eigen::MatrixXd sx = s.asDiagonal() * x_;
  hessian.topLeftCorner(d, d) = x_.transpose() * sx / n;
  hessian.topLeftCorner(d, d).diagonal().array() += l2_;
  const Eigen::VectorXd cross = sx.colwise().sum().transpose() / n;
  hessian.block(0, d, d, 1) = cross;
  hessian.block(d, 0, 1, d) = cross.transpose();
  hessian(d, d) = s.sum() / n;

  return loss + 0.5 * l2_ * w.squaredNorm();
}

}  // namespace altprobe
