#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "altprobe/objective.hpp"
#include "altprobe/svd.hpp"

namespace altprobe {

enum class ProbeKind { Linear, Mlp1, Mlp2 };
std::string_view probe_kind_token(ProbeKind k);  // "linear", "mlp1", "mlp2"
std::optional<ProbeKind> parse_probe_kind(std::string_view token);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::Linear;
  std::size_t hidden_size = 768;
  double l2 = 0.0;
  /// Linear: truncated-SVD rank of the input.  MLPs: hidden width (overrides hidden_size).
  std::optional<std::size_t> svd_rank;
  std::uint64_t seed = 0;
  std::size_t max_iters = 1000;
  double grad_tol = 1e-8;

  /// Throws InvalidConfig.  `feature_dim` bounds the SVD rank for Linear probes.
  void validate(std::size_t feature_dim) const;
  std::size_t effective_hidden_size() const { return svd_rank.value_or(hidden_size); }
  bool operator==(const ProbeConfig&) const = default;
};

enum class TrainStatus { Converged, DidNotConverge, Degenerate };
std::string_view train_status_token(TrainStatus s);
std::optional<TrainStatus> parse_train_status(std::string_view token);

struct Prediction {
  Eigen::VectorXd probability;
  std::vector<int> label;  // 1 iff probability >= 0.5
};

/// A trained probe: optional SVD front end, then a rectifier network ending
/// in one logit.  A degenerate probe (single-class training data) has no
/// layers and always predicts `constant_label`.
class Probe {
 public:
  ProbeConfig config;
  TrainStatus status = TrainStatus::Converged;
  std::size_t input_dim = 0;
  std::optional<SvdFrontEnd> svd;
  std::vector<DenseLayer> layers;
  std::optional<int> constant_label;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double final_grad_norm = 0.0;
  /// Objective value after every accepted optimizer step (index 0 = initial).
  std::vector<double> loss_history;

  bool degenerate() const { return constant_label.has_value(); }
  /// Throws DimMismatch when `x` has the wrong width.
  Prediction predict(const Eigen::MatrixXd& x) const;
};

Architecture architecture_for(const ProbeConfig& config, std::size_t input_dim);

/// Fits a probe by minimizing PenalizedLogLoss.  Linear probes use damped
/// Newton steps, MLPs full-batch gradient descent with backtracking.  Both
/// stop when the gradient infinity-norm drops to grad_tol or after max_iters
/// (status DidNotConverge).  Deterministic given config (including seed).
Probe train(const ProbeConfig& config, const Eigen::MatrixXd& x, std::span<const int> y);

/// JSON with base64 float64 (little-endian) parameter blobs.
std::string probe_to_json(const Probe& probe);
Probe probe_from_json(std::string_view json);

}  // namespace altprobe
