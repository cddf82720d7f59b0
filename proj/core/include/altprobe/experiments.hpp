#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "altprobe/aggregate.hpp"
#include "altprobe/datasets.hpp"
#include "altprobe/folds.hpp"
#include "altprobe/metrics.hpp"
#include "altprobe/probe.hpp"

namespace altprobe {

/// Metrics of one task at one layer.  mcc/accuracy are always recomputable
/// from `cm`.
struct LayerResult {
  std::string model_id;
  std::string task;  // frame token, alternation token, or "combined"
  std::size_t layer = 0;
  ConfusionMatrix cm;
  double mcc = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;
  std::size_t fallback_verbs = 0;     // word level: verbs scored from their isolated embedding
  std::size_t unconverged_fits = 0;   // probes that stopped at max_iters

  bool operator==(const LayerResult&) const = default;
};

LayerResult make_result(std::string model_id, std::string task, std::size_t layer, const ConfusionMatrix& cm);

std::uint64_t fold_seed_for(std::uint64_t seed, FrameId frame);

/// Trains on every fold but one, predicts the held-out fold, and pools the
/// predictions into one confusion matrix.  `train_mask`, when given, drops
/// examples with mask 0 from training sets (they are still evaluated).
/// Per-fold probes use seed derive_seed(config.seed, "fold:<i>").
struct CrossValidation {
  ConfusionMatrix pooled;
  std::vector<ConfusionMatrix> per_fold;
  std::size_t unconverged_fits = 0;
};
CrossValidation cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, const FoldAssignment& folds,
                               const ProbeConfig& config, std::span<const std::uint8_t> train_mask = {});

// ---------------------------------------------------------------- word level

struct WordOptions {
  std::size_t folds = 4;
  std::uint64_t fold_seed = 0;
};

/// Frame-membership probe over verb embeddings.  Degenerate frames short-
/// circuit to a constant predictor (accuracy 1, MCC 0).
LayerResult run_word_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                std::size_t layer, const ProbeConfig& config, const WordOptions& options = {});

LayerResult run_word_experiment(const LavaDataset& lava, const FavaDataset& fava,
                                const std::filesystem::path& store, FrameId frame, std::size_t layer,
                                const ProbeConfig& config, const WordOptions& options = {});

// ---------------------------------------------------------------- sentence level

/// One alternation, or all five pooled when empty.
using SentenceTask = std::optional<Alternation>;
std::string sentence_task_token(const SentenceTask& task);

/// Trains on the Train split, evaluates on Test; Dev is never read.
/// Throws EmptySplit when either split is empty and NoSupport when the
/// store lacks a needed sentence.
LayerResult run_sentence_experiment(const FavaDataset& fava, const SentenceFeatures& features,
                                    const SentenceTask& task, std::size_t layer, const ProbeConfig& config);

LayerResult run_sentence_experiment(const FavaDataset& fava, const std::filesystem::path& store,
                                    const SentenceTask& task, std::size_t layer, const ProbeConfig& config);

// ---------------------------------------------------------------- control task

/// Complexity knobs.  Defaults: no dimensionality limit, full training
/// folds, no regularization.
struct ComplexityConfig {
  std::optional<std::size_t> k;  // SVD rank (Linear) or hidden width (MLPs)
  double p = 1.0;                // training proportion
  double l2 = 0.0;

  std::size_t changed_knobs() const;
  /// Throws InvalidConfig when more than one knob is changed or a value is out of range.
  void validate() const;
  ProbeConfig apply(ProbeConfig base) const;
  bool operator==(const ComplexityConfig&) const = default;
};

struct SelectivityResult {
  ConfusionMatrix real_cm;
  ConfusionMatrix control_cm;
  double real_accuracy = 0.0;
  double control_accuracy = 0.0;
  double selectivity = 0.0;  // real_accuracy - control_accuracy
  double control_positive_rate = 0.0;
};

/// Runs the same cross-validated pipeline on two labelings with shared
/// folds and training mask.
SelectivityResult compare_labelings(const Eigen::MatrixXd& x, std::span<const int> real, std::span<const int> control,
                                    const FoldAssignment& folds, std::span<const std::uint8_t> train_mask,
                                    const ProbeConfig& config);

/// Independent streams for the parts of a control experiment.
struct ControlSeeds {
  std::uint64_t folds = 0;
  std::uint64_t control = 0;
  std::uint64_t subsample = 0;
  std::uint64_t probe = 0;

  /// Streams keyed on (seed, frame); the word-level pipeline uses the same
  /// fold stream, so its folds match the control experiment's real run.
  static ControlSeeds from(std::uint64_t seed, FrameId frame);
};

SelectivityResult run_control_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                         std::size_t layer, ProbeKind kind, const ComplexityConfig& complexity,
                                         const ControlSeeds& seeds, const ProbeConfig& base = {},
                                         std::size_t folds = 4);

SelectivityResult run_control_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                         std::size_t layer, ProbeKind kind, const ComplexityConfig& complexity,
                                         std::uint64_t seed);

// ---------------------------------------------------------------- sweep

struct SweepCell {
  FrameId frame = FrameId::spray_load_with();
  std::size_t layer = 0;
  ProbeKind kind = ProbeKind::Linear;
  ComplexityConfig complexity;

  /// Which knob the cell changes: "default", "k", "p" or "l2".
  std::string knob() const;
  double knob_value() const;
  std::string id() const;
};

struct SweepRow {
  SweepCell cell;
  std::optional<SelectivityResult> result;
  std::string error;  // set when the cell failed
};

struct SweepOptions {
  std::uint64_t seed = 0;
  std::size_t folds = 4;
  std::size_t threads = 1;
  ProbeConfig base;  // kind / complexity fields are overridden per cell
};

/// Throws InvalidConfig if any cell changes more than one knob.
void validate_cells(std::span<const SweepCell> cells);

/// Runs every cell (in parallel when threads > 1).  Rows come back in
/// cell order; failures are recorded on the row.  Fold, control and
/// subsampling seeds depend on (seed, frame); probe initialization on
/// (seed, cell id).
std::vector<SweepRow> run_sweep(std::span<const SweepCell> cells, const LavaDataset& lava,
                                const VerbFeatures& features, const SweepOptions& options);

/// Runs `count` independent jobs on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

}  // namespace altprobe
