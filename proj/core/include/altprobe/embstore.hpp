#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace altprobe {

/// 8-byte tag opening every store file.
inline constexpr std::string_view kStoreMagic = "ALTPROB1";
inline constexpr std::uint32_t kStoreVersion = 1;

struct StoreHeader {
  std::string model_id;
  std::uint32_t num_layers = 0;  // includes layer 0, the static token-embedding layer
  std::uint32_t hidden_dim = 0;

  bool operator==(const StoreHeader&) const = default;
};

/// Hidden states of one input sequence across all layers.
///
/// `data` is layer-major: element (layer, token, dim) lives at
/// `(layer * token_count + token) * hidden_dim + dim`.
struct SentenceEmbeddings {
  std::string sentence_id;
  std::uint32_t num_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t token_count = 0;
  std::uint32_t span_start = 0;  // verb subword pieces: [span_start, span_end)
  std::uint32_t span_end = 0;
  std::vector<std::uint8_t> content_mask;  // 0 for special / delimiter tokens
  std::vector<float> data;

  static SentenceEmbeddings zeros(std::string id, std::uint32_t layers, std::uint32_t dim,
                                  std::uint32_t tokens);

  std::span<const float> row(std::size_t layer, std::size_t token) const {
    return {data.data() + (layer * token_count + token) * hidden_dim, hidden_dim};
  }
  std::span<float> row(std::size_t layer, std::size_t token) {
    return {data.data() + (layer * token_count + token) * hidden_dim, hidden_dim};
  }

  bool operator==(const SentenceEmbeddings&) const = default;
};

/// Throws DimMismatch if the record disagrees with the header shape, has an
/// invalid verb span or an empty content mask, or holds a non-finite value in
/// a content row.
void validate_record(const StoreHeader& header, const SentenceEmbeddings& record);

/// Streaming reader; holds one record in memory at a time.
class StoreReader {
 public:
  explicit StoreReader(const std::filesystem::path& path);

  const StoreHeader& header() const { return header_; }
  std::uint64_t record_count() const { return record_count_; }

  /// Next record, or nullopt after the last one.  Throws TruncatedRecord
  /// when the file ends inside a record.
  std::optional<SentenceEmbeddings> next();

  class iterator {
   public:
    using value_type = SentenceEmbeddings;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    explicit iterator(StoreReader* reader) : reader_(reader) { ++*this; }
    const SentenceEmbeddings& operator*() const { return *current_; }
    const SentenceEmbeddings* operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = reader_->next();
      if (!current_) reader_ = nullptr;
      return *this;
    }
    bool operator==(const iterator& o) const { return reader_ == o.reader_; }

   private:
    StoreReader* reader_ = nullptr;
    std::optional<SentenceEmbeddings> current_;
  };
  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  StoreHeader header_;
  std::uint64_t record_count_ = 0;
  std::uint64_t consumed_ = 0;
};

/// Streaming writer.  The record count is patched into the header by
/// finish(), which also writes the `<store>.meta.json` sidecar.
class StoreWriter {
 public:
  StoreWriter(const std::filesystem::path& path, StoreHeader header);
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;
  ~StoreWriter();

  void add(const SentenceEmbeddings& record);
  void finish();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  StoreHeader header_;
  std::uint64_t count_ = 0;
  bool finished_ = false;
};

void write_store(const StoreHeader& header, std::span<const SentenceEmbeddings> records,
                 const std::filesystem::path& path);

/// Convenience for tests and small stores.
std::vector<SentenceEmbeddings> read_all_records(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& store);

}  // namespace altprobe
