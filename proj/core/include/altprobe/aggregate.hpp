#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "altprobe/datasets.hpp"
#include "altprobe/embstore.hpp"

namespace altprobe {

struct VerbEmbedding {
  std::string verb;
  std::size_t layer = 0;
  Eigen::VectorXd vector;
  std::size_t support = 0;  // number of sentences averaged
};

struct SentenceEmbedding {
  std::string sentence_id;
  std::size_t layer = 0;
  Eigen::VectorXd vector;
};

/// Mean of the verb-span rows of one record at `layer`, accumulated in double.
Eigen::VectorXd span_mean(const SentenceEmbeddings& record, std::size_t layer);

/// Mean over content-masked rows at `layer`.  Throws EmptyMask.
Eigen::VectorXd masked_mean(const SentenceEmbeddings& record, std::size_t layer);

/// Mean of per-sentence span means (subword pieces first, then sentences).
/// `occurrences` must already be restricted to grammatical sentences that
/// contain the verb.  Throws NoSupport when empty, DimMismatch when a
/// record lacks `layer`.
VerbEmbedding aggregate_verb_embedding(const std::string& verb, std::size_t layer,
                                       std::span<const SentenceEmbeddings> occurrences);

SentenceEmbedding aggregate_sentence_embedding(const SentenceEmbeddings& record, std::size_t layer);

/// Word-level design matrices for every layer, built in one pass over a
/// store.  Rows follow LaVA verb order.
///
/// A verb with no grammatical FAVA sentence in the store falls back to the
/// layer-0 rows of its isolated pseudo-sentence record, used for every layer
/// (`fallback[i]` is set and `support[i]` is 0).  A verb with neither is
/// `missing`; its rows are NaN and experiments that need it raise NoSupport.
struct VerbFeatures {
  std::vector<std::string> verbs;
  std::vector<Eigen::MatrixXd> layers;  // one (n_verbs x d) matrix per layer
  std::vector<std::size_t> support;
  std::vector<bool> fallback;
  std::vector<bool> missing;
  StoreHeader header;

  std::size_t num_layers() const { return layers.size(); }
  std::size_t dim() const { return header.hidden_dim; }
  /// Rows for the given verbs at `layer`.  Throws NoSupport for a missing verb.
  Eigen::MatrixXd rows(std::span<const std::string> verb_names, std::size_t layer) const;
  std::size_t fallback_count(std::span<const std::string> verb_names) const;
};

VerbFeatures build_verb_features(const LavaDataset& lava, const FavaDataset& fava,
                                 const std::filesystem::path& store);

/// Sentence-level pooled embeddings for the requested layers (all layers
/// when `layers` is empty), indexed by FAVA ordinal.
struct SentenceFeatures {
  std::vector<std::size_t> layer_ids;
  std::vector<Eigen::MatrixXd> layers;  // parallel to layer_ids; (n_sentences x d)
  std::vector<bool> present;
  StoreHeader header;

  const Eigen::MatrixXd& layer(std::size_t layer_id) const;
};

SentenceFeatures build_sentence_features(const FavaDataset& fava, const std::filesystem::path& store,
                                         std::span<const std::size_t> layers = {});

}  // namespace altprobe
