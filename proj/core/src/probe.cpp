#include "altprobe/probe.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {

std::string_view probe_kind_token(ProbeKind k) {
  switch (k) {
    case ProbeKind::Linear: return "linear";
    case ProbeKind::Mlp1: return "mlp1";
    case ProbeKind::Mlp2: return "mlp2";
  }
  return "?";
}

std::optional<ProbeKind> parse_probe_kind(std::string_view token) {
  if (token == "linear") return ProbeKind::Linear;
  if (token == "mlp1") return ProbeKind::Mlp1;
  if (token == "mlp2") return ProbeKind::Mlp2;
  return std::nullopt;
}

std::string_view train_status_token(TrainStatus s) {
  switch (s) {
    case TrainStatus::Converged: return "converged";
    case TrainStatus::DidNotConverge: return "did_not_converge";
    case TrainStatus::Degenerate: return "degenerate";
  }
  return "?";
}

std::optional<TrainStatus> parse_train_status(std::string_view token) {
  if (token == "converged") return TrainStatus::Converged;
  if (token == "did_not_converge") return TrainStatus::DidNotConverge;
  if (token == "degenerate") return TrainStatus::Degenerate;
  return std::nullopt;
}

void ProbeConfig::validate(std::size_t feature_dim) const {
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorCode::InvalidConfig, fmt::format("l2 must be >= 0 (got {})", l2));
  if (hidden_size < 1) throw Error(ErrorCode::InvalidConfig, "hidden_size must be >= 1");
  if (svd_rank && *svd_rank < 1) throw Error(ErrorCode::InvalidConfig, "svd rank must be >= 1");
  if (kind == ProbeKind::Linear && svd_rank && *svd_rank > feature_dim) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("svd rank {} exceeds feature dim {}", *svd_rank, feature_dim));
  }
  if (max_iters < 1) throw Error(ErrorCode::InvalidConfig, "max_iters must be >= 1");
  if (!(grad_tol >= 0.0)) throw Error(ErrorCode::InvalidConfig, "grad_tol must be >= 0");
}

Architecture architecture_for(const ProbeConfig& config, std::size_t input_dim) {
  const auto h = config.effective_hidden_size();
  switch (config.kind) {
    case ProbeKind::Linear: return {input_dim, 1};
    case ProbeKind::Mlp1: return {input_dim, h, 1};
    case ProbeKind::Mlp2: return {input_dim, h, h, 1};
  }
  return {input_dim, 1};
}

Prediction Probe::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim) {
    throw Error(ErrorCode::DimMismatch, fmt::format("probe expects {} features, got {}", input_dim, x.cols()));
  }
  Prediction out;
  const auto n = x.rows();
  if (constant_label) {
    out.probability = Eigen::VectorXd::Constant(n, *constant_label ? 1.0 : 0.0);
    out.label.assign(static_cast<std::size_t>(n), *constant_label);
    return out;
  }
  const Eigen::VectorXd logits = svd ? forward_logits(layers, svd->project(x)) : forward_logits(layers, x);
  out.probability.resize(n);
  out.label.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.probability[i] = sigmoid(logits[i]);
    out.label[static_cast<std::size_t>(i)] = out.probability[i] >= 0.5 ? 1 : 0;
  }
  return out;
}

namespace {

constexpr double kArmijo = 1e-4;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void train_linear(Probe& probe, const PenalizedLogLoss& objective) {
  const auto& cfg = probe.config;
  const auto p = static_cast<Eigen::Index>(objective.size());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hessian;
  double damping = 1e-10;
  double loss = objective.linear_newton_terms(theta, grad, hessian);
  probe.loss_history.push_back(loss);
  probe.status = TrainStatus::DidNotConverge;

  for (probe.iterations = 0; probe.iterations < cfg.max_iters; ++probe.iterations) {
    if (inf_norm(grad) <= cfg.grad_tol) {
      probe.status = TrainStatus::Converged;
      break;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Eigen::MatrixXd damped = hessian;
      damped.diagonal().array() += damping;
      Eigen::LDLT<Eigen::MatrixXd> solver(damped);
      Eigen::VectorXd step = solver.solve(-grad);
      const double slope = grad.dot(step);
      if (solver.info() != Eigen::Success || !step.allFinite() || !(slope < 0.0)) {
        damping *= 10.0;
        continue;
      }
      for (double t = 1.0; t > 1e-12; t *= 0.5) {
        const Eigen::VectorXd candidate = theta + t * step;
        const double trial = objective.value(candidate);
        if (trial < loss && trial <= loss + kArmijo * t * slope) {
          theta = candidate;
          accepted = true;
          break;
        }
      }
      if (accepted) {
        damping = std::max(damping * 0.1, 1e-14);
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) break;
    loss = objective.linear_newton_terms(theta, grad, hessian);
    probe.loss_history.push_back(loss);
  }
  if (probe.status != TrainStatus::Converged && inf_norm(grad) <= cfg.grad_tol) {
    probe.status = TrainStatus::Converged;
  }
  probe.layers = unpack(objective.architecture(), theta);
  probe.final_loss = loss;
  probe.final_grad_norm = inf_norm(grad);
}

std::vector<DenseLayer> initial_layers(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    const auto fan_in = static_cast<double>(arch[i]);
    const auto fan_out = static_cast<double>(arch[i + 1]);
    const bool output = i + 2 == arch.size();
    // He-uniform into rectifiers, Glorot-uniform into the output logit.
    const double limit = output ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> uniform(-limit, limit);
    DenseLayer l;
    l.weights.resize(static_cast<Eigen::Index>(arch[i + 1]), static_cast<Eigen::Index>(arch[i]));
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) l.weights(r, c) = uniform(rng);
    }
    l.bias = Eigen::VectorXd::Zero(l.weights.rows());
    layers.push_back(std::move(l));
  }
  return layers;
}

void train_mlp(Probe& probe, const PenalizedLogLoss& objective) {
  const auto& cfg = probe.config;
  Eigen::VectorXd theta = pack(initial_layers(objective.architecture(), cfg.seed));
  Eigen::VectorXd grad;
  double loss = objective.value_and_gradient(theta, grad);
  probe.loss_history.push_back(loss);
  probe.status = TrainStatus::DidNotConverge;
  double step = 1.0;

  for (probe.iterations = 0; probe.iterations < cfg.max_iters; ++probe.iterations) {
    if (inf_norm(grad) <= cfg.grad_tol) {
      probe.status = TrainStatus::Converged;
      break;
    }
    const double slope = -grad.squaredNorm();
    bool accepted = false;
    for (; step > 1e-20; step *= 0.5) {
      const Eigen::VectorXd candidate = theta - step * grad;
      const double trial = objective.value(candidate);
      if (trial < loss && trial <= loss + kArmijo * step * slope) {
        theta = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    loss = objective.value_and_gradient(theta, grad);
    probe.loss_history.push_back(loss);
    step = std::min(step * 2.0, 1e6);
  }
  if (probe.status != TrainStatus::Converged && inf_norm(grad) <= cfg.grad_tol) {
    probe.status = TrainStatus::Converged;
  }
  probe.layers = unpack(objective.architecture(), theta);
  probe.final_loss = loss;
  probe.final_grad_norm = inf_norm(grad);
}

}  // namespace

Probe train(const ProbeConfig& config, const Eigen::MatrixXd& x, std::span<const int> y) {
  const auto d = static_cast<std::size_t>(x.cols());
  config.validate(d);
  if (x.rows() < 2) throw Error(ErrorCode::TooFewExamples, "training needs at least two examples");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::DimMismatch, "label count differs from row count");
  }
  if (!x.allFinite()) throw Error(ErrorCode::DimMismatch, "non-finite training features");

  Probe probe;
  probe.config = config;
  probe.input_dim = d;

  const bool has_pos = std::any_of(y.begin(), y.end(), [](int v) { return v != 0; });
  const bool has_neg = std::any_of(y.begin(), y.end(), [](int v) { return v == 0; });
  if (!has_pos || !has_neg) {
    probe.constant_label = has_pos ? 1 : 0;
    probe.status = TrainStatus::Degenerate;
    return probe;
  }

  Eigen::MatrixXd features;
  const Eigen::MatrixXd* design = &x;
  if (config.kind == ProbeKind::Linear && config.svd_rank) {
    // Basis vectors past the training rank see all-zero training features, so
    // their weights stay at zero; capping k at n is therefore exact.
    const auto k = std::min<std::size_t>(*config.svd_rank, static_cast<std::size_t>(x.rows()));
    probe.svd = fit_svd(x, k);
    features = probe.svd->project(x);
    design = &features;
  }

  PenalizedLogLoss objective(architecture_for(config, static_cast<std::size_t>(design->cols())), *design, y,
                             config.l2);
  if (config.kind == ProbeKind::Linear) {
    train_linear(probe, objective);
  } else {
    train_mlp(probe, objective);
  }
  return probe;
}

}  // namespace altprobe
