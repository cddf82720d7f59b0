#include "altprobe/aggregate.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {
namespace {

void require_layer(const SentenceEmbeddings& r, std::size_t layer) {
  if (layer >= r.num_layers) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("layer {} out of range for record '{}' (L={})", layer, r.sentence_id, r.num_layers));
  }
}

void accumulate_row(Eigen::VectorXd& acc, std::span<const float> row) {
  for (std::size_t j = 0; j < row.size(); ++j) acc[static_cast<Eigen::Index>(j)] += row[j];
}

// Parses "fava:<n>" back into an ordinal.
std::optional<std::size_t> fava_ordinal(std::string_view id) {
  constexpr std::string_view prefix = "fava:";
  if (!id.starts_with(prefix)) return std::nullopt;
  id.remove_prefix(prefix.size());
  std::size_t n = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), n);
  if (ec != std::errc{} || ptr != id.data() + id.size()) return std::nullopt;
  return n;
}

}  // namespace

Eigen::VectorXd span_mean(const SentenceEmbeddings& r, std::size_t layer) {
  require_layer(r, layer);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(r.hidden_dim);
  for (std::size_t t = r.span_start; t < r.span_end; ++t) accumulate_row(acc, r.row(layer, t));
  return acc / static_cast<double>(r.span_end - r.span_start);
}

Eigen::VectorXd masked_mean(const SentenceEmbeddings& r, std::size_t layer) {
  require_layer(r, layer);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(r.hidden_dim);
  std::size_t n = 0;
  for (std::size_t t = 0; t < r.token_count; ++t) {
    if (!r.content_mask[t]) continue;
    accumulate_row(acc, r.row(layer, t));
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyMask, r.sentence_id);
  return acc / static_cast<double>(n);
}

VerbEmbedding aggregate_verb_embedding(const std::string& verb, std::size_t layer,
                                       std::span<const SentenceEmbeddings> occurrences) {
  if (occurrences.empty()) throw Error(ErrorCode::NoSupport, verb);
  VerbEmbedding out{verb, layer, Eigen::VectorXd::Zero(occurrences.front().hidden_dim), 0};
  for (const auto& r : occurrences) {
    if (r.hidden_dim != occurrences.front().hidden_dim) {
      throw Error(ErrorCode::DimMismatch, fmt::format("record '{}' has d={}", r.sentence_id, r.hidden_dim));
    }
    out.vector += span_mean(r, layer);
    ++out.support;
  }
  out.vector /= static_cast<double>(out.support);
  return out;
}

SentenceEmbedding aggregate_sentence_embedding(const SentenceEmbeddings& record, std::size_t layer) {
  return {record.sentence_id, layer, masked_mean(record, layer)};
}

// ---------------------------------------------------------------- tables

Eigen::MatrixXd VerbFeatures::rows(std::span<const std::string> names, std::size_t layer) const {
  if (layer >= layers.size()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("layer {} out of range (L={})", layer, layers.size()));
  }
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < verbs.size(); ++i) index.emplace(verbs[i], i);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = index.find(names[i]);
    if (it == index.end() || missing[it->second]) {
      throw Error(ErrorCode::NoSupport,
                  fmt::format("verb '{}' has no grammatical sentence and no isolated record", names[i]));
    }
    out.row(static_cast<Eigen::Index>(i)) = layers[layer].row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

std::size_t VerbFeatures::fallback_count(std::span<const std::string> names) const {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < verbs.size(); ++i) index.emplace(verbs[i], i);
  std::size_t n = 0;
  for (const auto& v : names) {
    auto it = index.find(v);
    if (it != index.end() && fallback[it->second]) ++n;
  }
  return n;
}

VerbFeatures build_verb_features(const LavaDataset& lava, const FavaDataset& fava,
                                 const std::filesystem::path& store) {
  StoreReader reader(store);
  const auto& h = reader.header();
  const auto n = lava.size();
  const auto d = static_cast<Eigen::Index>(h.hidden_dim);

  VerbFeatures out;
  out.header = h;
  out.support.assign(n, 0);
  out.fallback.assign(n, false);
  out.missing.assign(n, false);
  for (const auto& rec : lava.verbs()) out.verbs.push_back(rec.verb);
  out.layers.assign(h.num_layers, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), d));
  std::vector<std::optional<Eigen::VectorXd>> isolated(n);

  for (const auto& rec : reader) {
    if (auto ord = fava_ordinal(rec.sentence_id)) {
      if (*ord >= fava.size()) {
        throw Error(ErrorCode::DimMismatch,
                    fmt::format("store record '{}' has no FAVA sentence", rec.sentence_id));
      }
      const auto& s = fava.sentences()[*ord];
      if (!s.grammatical) continue;
      auto vi = lava.find(s.verb);
      if (!vi) continue;
      for (std::size_t l = 0; l < h.num_layers; ++l) {
        out.layers[l].row(static_cast<Eigen::Index>(*vi)) += span_mean(rec, l).transpose();
      }
      ++out.support[*vi];
    } else if (rec.sentence_id.starts_with("lava:")) {
      auto vi = lava.find(std::string_view(rec.sentence_id).substr(5));
      if (vi) isolated[*vi] = span_mean(rec, 0);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (out.support[i] > 0) {
      for (auto& m : out.layers) m.row(row) /= static_cast<double>(out.support[i]);
    } else if (isolated[i]) {
      out.fallback[i] = true;
      for (auto& m : out.layers) m.row(row) = isolated[i]->transpose();
    } else {
      out.missing[i] = true;
      for (auto& m : out.layers) m.row(row).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

const Eigen::MatrixXd& SentenceFeatures::layer(std::size_t layer_id) const {
  auto it = std::find(layer_ids.begin(), layer_ids.end(), layer_id);
  if (it == layer_ids.end()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("layer {} was not loaded", layer_id));
  }
  return layers[static_cast<std::size_t>(it - layer_ids.begin())];
}

SentenceFeatures build_sentence_features(const FavaDataset& fava, const std::filesystem::path& store,
                                         std::span<const std::size_t> layers) {
  StoreReader reader(store);
  const auto& h = reader.header();
  SentenceFeatures out;
  out.header = h;
  if (layers.empty()) {
    for (std::size_t l = 0; l < h.num_layers; ++l) out.layer_ids.push_back(l);
  } else {
    out.layer_ids.assign(layers.begin(), layers.end());
  }
  for (auto l : out.layer_ids) {
    if (l >= h.num_layers) {
      throw Error(ErrorCode::DimMismatch, fmt::format("layer {} out of range (L={})", l, h.num_layers));
    }
  }
  const auto n = static_cast<Eigen::Index>(fava.size());
  out.layers.assign(out.layer_ids.size(),
                    Eigen::MatrixXd::Constant(n, h.hidden_dim, std::numeric_limits<double>::quiet_NaN()));
  out.present.assign(fava.size(), false);
  for (const auto& rec : reader) {
    auto ord = fava_ordinal(rec.sentence_id);
    if (!ord) continue;
    if (*ord >= fava.size()) {
      throw Error(ErrorCode::DimMismatch, fmt::format("store record '{}' has no FAVA sentence", rec.sentence_id));
    }
    for (std::size_t k = 0; k < out.layer_ids.size(); ++k) {
      out.layers[k].row(static_cast<Eigen::Index>(*ord)) = masked_mean(rec, out.layer_ids[k]).transpose();
    }
    out.present[*ord] = true;
  }
  return out;
}

}  // namespace altprobe
