#include "altprobe/embstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "altprobe/error.hpp"

namespace altprobe {
namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

template <typename UInt>
void put_le(std::ostream& out, UInt v) {
  char buf[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, sizeof(UInt));
}

template <typename UInt>
bool get_le(std::istream& in, UInt& v) {
  unsigned char buf[sizeof(UInt)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(UInt))) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
  return true;
}

void put_floats(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  } else {
    for (float f : values) put_le(out, std::bit_cast<std::uint32_t>(f));
  }
}

bool get_floats(std::istream& in, std::span<float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(values.data()),
                                     static_cast<std::streamsize>(values.size() * sizeof(float))));
  } else {
    for (float& f : values) {
      std::uint32_t bits = 0;
      if (!get_le(in, bits)) return false;
      f = std::bit_cast<float>(bits);
    }
    return true;
  }
}

void put_string16(std::ostream& out, std::string_view s, std::string_view what) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("{} longer than 65535 bytes", what));
  }
  put_le(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

bool get_string16(std::istream& in, std::string& s) {
  std::uint16_t len = 0;
  if (!get_le(in, len)) return false;
  s.resize(len);
  return len == 0 || static_cast<bool>(in.read(s.data(), len));
}

void write_sidecar(const std::filesystem::path& store, const StoreHeader& header, std::uint64_t count) {
  nlohmann::ordered_json meta;
  meta["magic"] = kStoreMagic;
  meta["version"] = kStoreVersion;
  meta["model_id"] = header.model_id;
  meta["num_layers"] = header.num_layers;
  meta["hidden_dim"] = header.hidden_dim;
  meta["record_count"] = count;
  meta["scalar"] = "float32";
  meta["endianness"] = "little";
  std::ofstream out(sidecar_path(store), std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", sidecar_path(store).string()));
  out << meta.dump(2) << '\n';
}

void check_header(const StoreHeader& h) {
  if (h.num_layers < 1 || h.hidden_dim < 1) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("header requires L >= 1 and d >= 1 (got L={}, d={})", h.num_layers, h.hidden_dim));
  }
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& store) {
  auto p = store;
  p += ".meta.json";
  return p;
}

SentenceEmbeddings SentenceEmbeddings::zeros(std::string id, std::uint32_t layers, std::uint32_t dim,
                                             std::uint32_t tokens) {
  SentenceEmbeddings r;
  r.sentence_id = std::move(id);
  r.num_layers = layers;
  r.hidden_dim = dim;
  r.token_count = tokens;
  r.span_start = 0;
  r.span_end = tokens > 0 ? 1 : 0;
  r.content_mask.assign(tokens, 1);
  r.data.assign(static_cast<std::size_t>(layers) * tokens * dim, 0.0f);
  return r;
}

void validate_record(const StoreHeader& header, const SentenceEmbeddings& r) {
  if (r.num_layers != header.num_layers || r.hidden_dim != header.hidden_dim) {
    throw Error(ErrorCode::DimMismatch,
                fmt::format("record '{}' has L={}, d={}; store has L={}, d={}", r.sentence_id, r.num_layers,
                            r.hidden_dim, header.num_layers, header.hidden_dim));
  }
  if (r.content_mask.size() != r.token_count ||
      r.data.size() != static_cast<std::size_t>(r.num_layers) * r.token_count * r.hidden_dim) {
    throw Error(ErrorCode::DimMismatch, fmt::format("record '{}': buffer sizes disagree with T={}",
                                                    r.sentence_id, r.token_count));
  }
  if (!(r.span_start < r.span_end && r.span_end <= r.token_count)) {
    throw Error(ErrorCode::DimMismatch, fmt::format("record '{}': invalid verb span [{},{}) for T={}",
                                                    r.sentence_id, r.span_start, r.span_end, r.token_count));
  }
  bool any = false;
  for (std::size_t t = 0; t < r.token_count; ++t) {
    if (r.content_mask[t] > 1) {
      throw Error(ErrorCode::DimMismatch, fmt::format("record '{}': mask byte not 0/1", r.sentence_id));
    }
    if (!r.content_mask[t]) continue;
    any = true;
    for (std::size_t l = 0; l < r.num_layers; ++l) {
      for (float v : r.row(l, t)) {
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::DimMismatch, fmt::format("record '{}': non-finite value at layer {}, token {}",
                                                          r.sentence_id, l, t));
        }
      }
    }
  }
  if (!any) throw Error(ErrorCode::DimMismatch, fmt::format("record '{}': empty content mask", r.sentence_id));
}

// ---------------------------------------------------------------- reader

StoreReader::StoreReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  char magic[8];
  if (!in_.read(magic, 8) || std::string_view(magic, 8) != kStoreMagic) {
    throw Error(ErrorCode::BadMagic, path.string());
  }
  std::uint32_t version = 0;
  if (!get_le(in_, version) || !get_le(in_, header_.num_layers) || !get_le(in_, header_.hidden_dim) ||
      !get_string16(in_, header_.model_id) || !get_le(in_, record_count_)) {
    throw Error(ErrorCode::TruncatedRecord, fmt::format("{}: truncated header", path.string()));
  }
  if (version != kStoreVersion) {
    throw Error(ErrorCode::BadMagic, fmt::format("{}: unsupported version {}", path.string(), version));
  }
  check_header(header_);
}

std::optional<SentenceEmbeddings> StoreReader::next() {
  if (consumed_ == record_count_) {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorCode::TruncatedRecord,
                  fmt::format("{}: data after the declared {} records", path_.string(), record_count_));
    }
    return std::nullopt;
  }
  auto truncated = [&] {
    return Error(ErrorCode::TruncatedRecord,
                 fmt::format("{}: record {} of {} is truncated", path_.string(), consumed_, record_count_));
  };
  SentenceEmbeddings r;
  r.num_layers = header_.num_layers;
  r.hidden_dim = header_.hidden_dim;
  if (!get_string16(in_, r.sentence_id) || !get_le(in_, r.token_count) || !get_le(in_, r.span_start) ||
      !get_le(in_, r.span_end)) {
    throw truncated();
  }
  r.content_mask.resize(r.token_count);
  if (r.token_count && !in_.read(reinterpret_cast<char*>(r.content_mask.data()), r.token_count)) {
    throw truncated();
  }
  r.data.resize(static_cast<std::size_t>(r.num_layers) * r.token_count * r.hidden_dim);
  if (!get_floats(in_, r.data)) throw truncated();
  ++consumed_;
  validate_record(header_, r);
  return r;
}

std::vector<SentenceEmbeddings> read_all_records(const std::filesystem::path& path) {
  StoreReader reader(path);
  std::vector<SentenceEmbeddings> out;
  out.reserve(reader.record_count());
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------- writer

StoreWriter::StoreWriter(const std::filesystem::path& path, StoreHeader header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), header_(std::move(header)) {
  check_header(header_);
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  out_.write(kStoreMagic.data(), 8);
  put_le(out_, kStoreVersion);
  put_le(out_, header_.num_layers);
  put_le(out_, header_.hidden_dim);
  put_string16(out_, header_.model_id, "model_id");
  put_le(out_, std::uint64_t{0});  // patched by finish()
}

StoreWriter::~StoreWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void StoreWriter::add(const SentenceEmbeddings& r) {
  validate_record(header_, r);
  put_string16(out_, r.sentence_id, "sentence_id");
  put_le(out_, r.token_count);
  put_le(out_, r.span_start);
  put_le(out_, r.span_end);
  out_.write(reinterpret_cast<const char*>(r.content_mask.data()), r.token_count);
  put_floats(out_, r.data);
  ++count_;
}

void StoreWriter::finish() {
  if (finished_) return;
  finished_ = true;
  const auto count_offset = static_cast<std::streamoff>(8 + 4 + 4 + 4 + 2 + header_.model_id.size());
  out_.seekp(count_offset);
  put_le(out_, count_);
  out_.close();
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path_.string()));
  write_sidecar(path_, header_, count_);
}

void write_store(const StoreHeader& header, std::span<const SentenceEmbeddings> records,
                 const std::filesystem::path& path) {
  for (const auto& r : records) validate_record(header, r);
  StoreWriter writer(path, header);
  for (const auto& r : records) writer.add(r);
  writer.finish();
}

}  // namespace altprobe
