#include "altprobe/experiments.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "altprobe/error.hpp"
#include "altprobe/seed.hpp"

namespace altprobe {
namespace {

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<int> select(std::span<const int> y, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace

LayerResult make_result(std::string model_id, std::string task, std::size_t layer, const ConfusionMatrix& cm) {
  LayerResult r;
  r.model_id = std::move(model_id);
  r.task = std::move(task);
  r.layer = layer;
  r.cm = cm;
  r.mcc = mcc(cm);
  r.accuracy = accuracy(cm);
  return r;
}

std::uint64_t fold_seed_for(std::uint64_t seed, FrameId frame) {
  return derive_seed(seed, fmt::format("folds:{}", frame_token(frame)));
}

CrossValidation cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, const FoldAssignment& folds,
                               const ProbeConfig& config, std::span<const std::uint8_t> train_mask) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || folds.size() != y.size()) {
    throw Error(ErrorCode::DimMismatch, "features, labels and folds differ in length");
  }
  if (!train_mask.empty() && train_mask.size() != y.size()) {
    throw Error(ErrorCode::DimMismatch, "training mask length differs from labels");
  }
  CrossValidation out;
  for (std::size_t f = 0; f < folds.k; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (folds.fold_of[i] == f) {
        test_rows.push_back(i);
      } else if (train_mask.empty() || train_mask[i]) {
        train_rows.push_back(i);
      }
    }
    ProbeConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, fmt::format("fold:{}", f));
    const auto train_y = select(y, train_rows);
    const auto probe = train(fold_config, select_rows(x, train_rows), train_y);
    if (probe.status == TrainStatus::DidNotConverge) ++out.unconverged_fits;
    const auto test_y = select(y, test_rows);
    const auto pred = probe.predict(select_rows(x, test_rows));
    out.per_fold.push_back(confusion(test_y, pred.label));
    out.pooled += out.per_fold.back();
  }
  return out;
}

// ---------------------------------------------------------------- word level

LayerResult run_word_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                std::size_t layer, const ProbeConfig& config, const WordOptions& options) {
  if (layer >= features.num_layers()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("layer {} out of range (L={})", layer, features.num_layers()));
  }
  const auto labels = frame_labels(lava, frame);
  const auto& counts = lava.counts(frame);
  const auto task = std::string(frame_token(frame));
  if (counts.degenerate()) {
    ConfusionMatrix cm;
    (counts.positive > 0 ? cm.tp : cm.tn) = labels.y.size();
    if (cm.total() == 0) throw Error(ErrorCode::EmptyEvaluation, fmt::format("frame {} has no annotated verbs", task));
    auto r = make_result(features.header.model_id, task, layer, cm);
    r.degenerate = true;
    r.fallback_verbs = features.fallback_count(labels.verbs);
    return r;
  }
  const auto x = features.rows(labels.verbs, layer);
  const auto folds = stratified_kfold(labels.y, options.folds, options.fold_seed);
  const auto cv = cross_validate(x, labels.y, folds, config);
  auto r = make_result(features.header.model_id, task, layer, cv.pooled);
  r.fallback_verbs = features.fallback_count(labels.verbs);
  r.unconverged_fits = cv.unconverged_fits;
  return r;
}

LayerResult run_word_experiment(const LavaDataset& lava, const FavaDataset& fava,
                                const std::filesystem::path& store, FrameId frame, std::size_t layer,
                                const ProbeConfig& config, const WordOptions& options) {
  const auto features = build_verb_features(lava, fava, store);
  return run_word_experiment(lava, features, frame, layer, config, options);
}

// ---------------------------------------------------------------- sentence level

std::string sentence_task_token(const SentenceTask& task) {
  return task ? std::string(alternation_token(*task)) : std::string("combined");
}

LayerResult run_sentence_experiment(const FavaDataset& fava, const SentenceFeatures& features,
                                    const SentenceTask& task, std::size_t layer, const ProbeConfig& config) {
  const auto& x_all = features.layer(layer);
  std::vector<std::size_t> train_rows, test_rows;
  for (auto alt : kAllAlternations) {
    if (task && *task != alt) continue;
    for (auto i : fava.partition(alt, Split::Train)) train_rows.push_back(i);
    for (auto i : fava.partition(alt, Split::Test)) test_rows.push_back(i);
  }
  const auto token = sentence_task_token(task);
  if (train_rows.empty() || test_rows.empty()) {
    throw Error(ErrorCode::EmptySplit, fmt::format("task {}: {} train / {} test sentences", token,
                                                   train_rows.size(), test_rows.size()));
  }
  // Pooled tasks keep FAVA order so results do not depend on alternation order.
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  for (const auto* rows : {&train_rows, &test_rows}) {
    for (auto i : *rows) {
      if (!features.present[i]) {
        throw Error(ErrorCode::NoSupport, fmt::format("store has no record for {}", fava_sentence_id(i)));
      }
    }
  }
  auto labels_of = [&](const std::vector<std::size_t>& rows) {
    std::vector<int> y;
    y.reserve(rows.size());
    for (auto i : rows) y.push_back(fava.sentences()[i].grammatical ? 1 : 0);
    return y;
  };
  const auto train_y = labels_of(train_rows);
  const auto test_y = labels_of(test_rows);
  const auto probe = train(config, select_rows(x_all, train_rows), train_y);
  const auto pred = probe.predict(select_rows(x_all, test_rows));
  auto r = make_result(features.header.model_id, token, layer, confusion(test_y, pred.label));
  r.degenerate = probe.degenerate();
  r.unconverged_fits = probe.status == TrainStatus::DidNotConverge ? 1 : 0;
  return r;
}

LayerResult run_sentence_experiment(const FavaDataset& fava, const std::filesystem::path& store,
                                    const SentenceTask& task, std::size_t layer, const ProbeConfig& config) {
  const std::size_t layers[] = {layer};
  const auto features = build_sentence_features(fava, store, layers);
  return run_sentence_experiment(fava, features, task, layer, config);
}

// ---------------------------------------------------------------- control task

std::size_t ComplexityConfig::changed_knobs() const {
  return (k ? 1u : 0u) + (p != 1.0 ? 1u : 0u) + (l2 != 0.0 ? 1u : 0u);
}

void ComplexityConfig::validate() const {
  if (changed_knobs() > 1) {
    throw Error(ErrorCode::InvalidConfig, "a complexity cell may change at most one of k, p, l2");
  }
  if (k && *k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidConfig, fmt::format("p = {} not in (0, 1]", p));
  if (!(l2 >= 0.0) || !std::isfinite(l2)) throw Error(ErrorCode::InvalidConfig, fmt::format("l2 = {} must be >= 0", l2));
}

ProbeConfig ComplexityConfig::apply(ProbeConfig base) const {
  if (k) base.svd_rank = k;
  if (l2 != 0.0) base.l2 = l2;
  return base;
}

ControlSeeds ControlSeeds::from(std::uint64_t seed, FrameId frame) {
  const auto f = frame_token(frame);
  return {fold_seed_for(seed, frame), derive_seed(seed, fmt::format("control:{}", f)),
          derive_seed(seed, fmt::format("subsample:{}", f)), derive_seed(seed, fmt::format("probe:{}", f))};
}

SelectivityResult compare_labelings(const Eigen::MatrixXd& x, std::span<const int> real, std::span<const int> control,
                                    const FoldAssignment& folds, std::span<const std::uint8_t> train_mask,
                                    const ProbeConfig& config) {
  SelectivityResult out;
  out.real_cm = cross_validate(x, real, folds, config, train_mask).pooled;
  out.control_cm = cross_validate(x, control, folds, config, train_mask).pooled;
  out.real_accuracy = accuracy(out.real_cm);
  out.control_accuracy = accuracy(out.control_cm);
  out.selectivity = out.real_accuracy - out.control_accuracy;
  const auto positives = std::count_if(control.begin(), control.end(), [](int v) { return v != 0; });
  out.control_positive_rate = control.empty() ? 0.0 : static_cast<double>(positives) / static_cast<double>(control.size());
  return out;
}

SelectivityResult run_control_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                         std::size_t layer, ProbeKind kind, const ComplexityConfig& complexity,
                                         const ControlSeeds& seeds, const ProbeConfig& base, std::size_t n_folds) {
  complexity.validate();
  if (lava.counts(frame).degenerate()) {
    throw Error(ErrorCode::DegenerateFrame, fmt::format("frame {} is single-class", frame_token(frame)));
  }
  const auto labels = frame_labels(lava, frame);
  const auto x = features.rows(labels.verbs, layer);
  ProbeConfig config = base;
  config.kind = kind;
  config.seed = seeds.probe;
  config = complexity.apply(config);
  config.validate(static_cast<std::size_t>(x.cols()));

  const auto folds = stratified_kfold(labels.y, n_folds, seeds.folds);
  const auto mask = subsample_mask(folds, labels.y, complexity.p, seeds.subsample);
  const auto control = make_control_task(labels.y, seeds.control);
  return compare_labelings(x, labels.y, control.labels, folds, mask, config);
}

SelectivityResult run_control_experiment(const LavaDataset& lava, const VerbFeatures& features, FrameId frame,
                                         std::size_t layer, ProbeKind kind, const ComplexityConfig& complexity,
                                         std::uint64_t seed) {
  return run_control_experiment(lava, features, frame, layer, kind, complexity, ControlSeeds::from(seed, frame));
}

}  // namespace altprobe
