#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "altprobe/frames.hpp"

namespace altprobe {

/// A verb plus its membership in each frame it is annotated for.  Frames
/// missing from `labels` are unannotated for this verb (written as "-").
struct VerbRecord {
  std::string verb;
  std::map<FrameId, bool> labels;

  bool operator==(const VerbRecord&) const = default;
};

struct FrameCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t total() const { return positive + negative; }
  /// Single-class frame: MCC is identically zero, accuracy trivially one.
  bool degenerate() const { return positive == 0 || negative == 0; }

  bool operator==(const FrameCounts&) const = default;
};

class LavaDataset {
 public:
  /// Validates uniqueness and non-emptiness of verbs and recomputes the
  /// per-frame tallies.  Throws DuplicateVerb / MalformedRow.
  explicit LavaDataset(std::vector<VerbRecord> verbs);

  const std::vector<VerbRecord>& verbs() const { return verbs_; }
  std::size_t size() const { return verbs_.size(); }
  const FrameCounts& counts(FrameId f) const { return counts_[f.index()]; }
  std::optional<std::size_t> find(std::string_view verb) const;

 private:
  std::vector<VerbRecord> verbs_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::array<FrameCounts, kNumFrames> counts_{};
};

LavaDataset load_lava(const std::filesystem::path& path);
void write_lava(const LavaDataset& lava, const std::filesystem::path& path);

/// Verbs annotated for `f`, in dataset order, with their 0/1 labels.
struct FrameLabels {
  std::vector<std::string> verbs;
  std::vector<int> y;
};
FrameLabels frame_labels(const LavaDataset& lava, FrameId f);

enum class Split { Train, Dev, Test };
std::string_view split_token(Split s);
std::optional<Split> parse_split(std::string_view token);

struct SentenceRecord {
  std::vector<std::string> words;
  Alternation alternation = Alternation::CausativeInchoative;
  Split split = Split::Train;
  bool grammatical = false;
  std::string verb;
  std::size_t verb_word_index = 0;

  std::string text() const;
  bool operator==(const SentenceRecord&) const = default;
};

/// Key shared between a FAVA sentence and its embedding-store record.
std::string fava_sentence_id(std::size_t ordinal);
/// Key of the pseudo-sentence record holding a verb tokenized on its own.
std::string isolated_verb_id(std::string_view verb);

class FavaDataset {
 public:
  explicit FavaDataset(std::vector<SentenceRecord> sentences,
                       std::vector<std::string> warnings = {});

  const std::vector<SentenceRecord>& sentences() const { return sentences_; }
  std::size_t size() const { return sentences_.size(); }
  /// Sentence ordinals of one (alternation, split) partition, in load order.
  std::span<const std::size_t> partition(Alternation a, Split s) const;
  /// Non-fatal loader diagnostics (loose verb/word mismatches).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<SentenceRecord> sentences_;
  std::array<std::array<std::vector<std::size_t>, 3>, kNumAlternations> partitions_;
  std::vector<std::string> warnings_;
};

/// Several files are concatenated in the given order; sentence ordinals
/// (and therefore ids) follow that order.
FavaDataset load_fava(const std::filesystem::path& path);
FavaDataset load_fava(std::span<const std::filesystem::path> paths);
void write_fava(const FavaDataset& fava, const std::filesystem::path& path);

/// Loose check that `word` is an inflection of `verb`: exact match or a
/// shared prefix of at least three characters.
bool plausible_inflection(std::string_view word, std::string_view verb);

}  // namespace altprobe
