#include "altprobe/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {
namespace {

constexpr std::string_view kUnannotated = "-";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return fmt::format("{}:{}", path.string(), line_no);
}

}  // namespace

// ---------------------------------------------------------------- LaVA

LavaDataset::LavaDataset(std::vector<VerbRecord> verbs) : verbs_(std::move(verbs)) {
  for (std::size_t i = 0; i < verbs_.size(); ++i) {
    const auto& rec = verbs_[i];
    if (rec.verb.empty()) throw Error(ErrorCode::MalformedRow, "empty verb");
    if (!index_.emplace(rec.verb, i).second) {
      throw Error(ErrorCode::DuplicateVerb, rec.verb);
    }
    for (const auto& [frame, label] : rec.labels) {
      auto& c = counts_[frame.index()];
      (label ? c.positive : c.negative) += 1;
    }
  }
}

std::optional<std::size_t> LavaDataset::find(std::string_view verb) const {
  auto it = index_.find(verb);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

LavaDataset load_lava(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string raw;
  if (!std::getline(in, raw)) {
    throw Error(ErrorCode::MalformedRow, fmt::format("{}: missing header row", path.string()));
  }
  auto header = split_tabs(chomp(raw));
  if (header.size() < 2 || header[0] != "verb") {
    throw Error(ErrorCode::MalformedRow, where(path, 1) + ": header must start with 'verb'");
  }
  std::vector<FrameId> columns;
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto f = parse_frame(header[c]);
    if (!f) throw Error(ErrorCode::UnknownFrame, fmt::format("{}: '{}'", where(path, 1), header[c]));
    if (std::find(columns.begin(), columns.end(), *f) != columns.end()) {
      throw Error(ErrorCode::MalformedRow, fmt::format("{}: repeated column '{}'", where(path, 1), header[c]));
    }
    columns.push_back(*f);
  }

  std::vector<VerbRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = chomp(raw);
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != columns.size() + 1) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("{}: expected {} columns, got {}", where(path, line_no),
                              columns.size() + 1, cells.size()));
    }
    VerbRecord rec;
    rec.verb = std::string(cells[0]);
    for (std::size_t c = 0; c < columns.size(); ++c) {
      auto cell = cells[c + 1];
      if (cell == kUnannotated) continue;
      if (cell != "0" && cell != "1") {
        throw Error(ErrorCode::MalformedRow,
                    fmt::format("{}: non-binary label '{}'", where(path, line_no), cell));
      }
      rec.labels.emplace(columns[c], cell == "1");
    }
    records.push_back(std::move(rec));
  }
  return LavaDataset(std::move(records));
}

void write_lava(const LavaDataset& lava, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "verb";
  for (auto f : all_frames()) out << '\t' << frame_token(f);
  out << '\n';
  for (const auto& rec : lava.verbs()) {
    out << rec.verb;
    for (auto f : all_frames()) {
      auto it = rec.labels.find(f);
      out << '\t' << (it == rec.labels.end() ? kUnannotated : (it->second ? "1" : "0"));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

FrameLabels frame_labels(const LavaDataset& lava, FrameId f) {
  FrameLabels out;
  for (const auto& rec : lava.verbs()) {
    auto it = rec.labels.find(f);
    if (it == rec.labels.end()) continue;
    out.verbs.push_back(rec.verb);
    out.y.push_back(it->second ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------- FAVA

std::string_view split_token(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view token) {
  if (token == "train") return Split::Train;
  if (token == "dev") return Split::Dev;
  if (token == "test") return Split::Test;
  return std::nullopt;
}

std::string SentenceRecord::text() const {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string fava_sentence_id(std::size_t ordinal) { return fmt::format("fava:{}", ordinal); }
std::string isolated_verb_id(std::string_view verb) { return fmt::format("lava:{}", verb); }

bool plausible_inflection(std::string_view word, std::string_view verb) {
  auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
  std::size_t common = 0;
  while (common < word.size() && common < verb.size() && lower(word[common]) == lower(verb[common])) {
    ++common;
  }
  if (common == word.size() && common == verb.size()) return true;
  return common >= 3;
}

FavaDataset::FavaDataset(std::vector<SentenceRecord> sentences, std::vector<std::string> warnings)
    : sentences_(std::move(sentences)), warnings_(std::move(warnings)) {
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    const auto& s = sentences_[i];
    if (s.words.empty() || s.verb_word_index >= s.words.size()) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("sentence {}: verb_word_index {} out of range", i, s.verb_word_index));
    }
    partitions_[static_cast<std::size_t>(s.alternation)][static_cast<std::size_t>(s.split)].push_back(i);
  }
}

std::span<const std::size_t> FavaDataset::partition(Alternation a, Split s) const {
  return partitions_[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
}

namespace {

void append_fava_file(const std::filesystem::path& path, std::vector<SentenceRecord>& out,
                      std::vector<std::string>& warnings) {
  auto in = open_input(path);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = chomp(raw);
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "alternation") continue;
    if (cells.size() != 6) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("{}: expected 6 columns, got {}", where(path, line_no), cells.size()));
    }
    SentenceRecord rec;
    auto alt = parse_alternation(cells[0]);
    if (!alt) throw Error(ErrorCode::UnknownAlternation, fmt::format("{}: '{}'", where(path, line_no), cells[0]));
    rec.alternation = *alt;
    auto split = parse_split(cells[1]);
    if (!split) throw Error(ErrorCode::UnknownSplit, fmt::format("{}: '{}'", where(path, line_no), cells[1]));
    rec.split = *split;
    if (cells[2] != "0" && cells[2] != "1") {
      throw Error(ErrorCode::MalformedRow, fmt::format("{}: non-binary label '{}'", where(path, line_no), cells[2]));
    }
    rec.grammatical = cells[2] == "1";
    rec.verb = std::string(cells[3]);
    if (rec.verb.empty()) throw Error(ErrorCode::MalformedRow, where(path, line_no) + ": empty verb");
    auto idx = cells[4];
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), rec.verb_word_index);
    if (ec != std::errc{} || ptr != idx.data() + idx.size()) {
      throw Error(ErrorCode::MalformedRow, fmt::format("{}: bad verb_word_index '{}'", where(path, line_no), idx));
    }
    std::istringstream words{std::string(cells[5])};
    for (std::string w; words >> w;) rec.words.push_back(std::move(w));
    if (rec.verb_word_index >= rec.words.size()) {
      throw Error(ErrorCode::MalformedRow,
                  fmt::format("{}: verb_word_index {} >= word count {}", where(path, line_no),
                              rec.verb_word_index, rec.words.size()));
    }
    if (!plausible_inflection(rec.words[rec.verb_word_index], rec.verb)) {
      warnings.push_back(fmt::format("{}: word '{}' does not look like verb '{}'", where(path, line_no),
                                     rec.words[rec.verb_word_index], rec.verb));
    }
    out.push_back(std::move(rec));
  }
}

}  // namespace

FavaDataset load_fava(const std::filesystem::path& path) {
  return load_fava(std::span<const std::filesystem::path>(&path, 1));
}

FavaDataset load_fava(std::span<const std::filesystem::path> paths) {
  std::vector<SentenceRecord> sentences;
  std::vector<std::string> warnings;
  for (const auto& p : paths) append_fava_file(p, sentences, warnings);
  return FavaDataset(std::move(sentences), std::move(warnings));
}

void write_fava(const FavaDataset& fava, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "alternation\tsplit\tlabel\tverb\tverb_word_index\tsentence\n";
  for (const auto& s : fava.sentences()) {
    out << alternation_token(s.alternation) << '\t' << split_token(s.split) << '\t'
        << (s.grammatical ? '1' : '0') << '\t' << s.verb << '\t' << s.verb_word_index << '\t'
        << s.text() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed: {}", path.string()));
}

}  // namespace altprobe
