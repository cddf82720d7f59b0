#include "altprobe/synth.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "altprobe/embstore.hpp"
#include "altprobe/error.hpp"
#include "altprobe/seed.hpp"

namespace altprobe {
namespace {

// Dimensions 0..9 carry frame membership, 10 carries grammaticality.
constexpr std::size_t kGrammarDim = kNumFrames;
constexpr std::size_t kReservedDims = kNumFrames + 1;
constexpr double kLabelAmplitude = 2.0;
constexpr double kLexicalScale = 0.3;
constexpr double kContextMix = 0.3;

constexpr std::string_view kCls = "[CLS]";
constexpr std::string_view kSep = "[SEP]";

struct Piece {
  std::string token;
  const VerbRecord* lemma_of = nullptr;  // set for the verb's own pieces
};

struct Tokenized {
  std::vector<Piece> pieces;  // includes [CLS] ... [SEP]
  std::uint32_t span_start = 0;
  std::uint32_t span_end = 0;
};

std::string_view inflection_suffix(std::string_view word, std::string_view verb) {
  if (word.size() > verb.size() && word.substr(0, verb.size()) == verb) return word.substr(verb.size());
  return {};
}

Tokenized tokenize(std::span<const std::string> words, std::size_t verb_index, const VerbRecord& verb) {
  Tokenized out;
  out.pieces.push_back({std::string(kCls)});
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i == verb_index) {
      out.span_start = static_cast<std::uint32_t>(out.pieces.size());
      out.pieces.push_back({verb.verb, &verb});
      auto suffix = inflection_suffix(words[i], verb.verb);
      if (!suffix.empty()) out.pieces.push_back({"##" + std::string(suffix), &verb});
      out.span_end = static_cast<std::uint32_t>(out.pieces.size());
    } else {
      out.pieces.push_back({words[i]});
    }
  }
  out.pieces.push_back({std::string(kSep)});
  return out;
}

class Generator {
 public:
  Generator(const SynthOptions& opt) : opt_(opt) {
    if (opt.num_layers < 1 || opt.hidden_dim < 1) {
      throw Error(ErrorCode::InvalidConfig, "synthetic store needs L >= 1 and d >= 1");
    }
    if (opt.scheme.kind == SynthKind::LinearSignal && opt.hidden_dim <= kReservedDims) {
      throw Error(ErrorCode::InvalidConfig,
                  fmt::format("LinearSignal needs hidden_dim > {}", kReservedDims));
    }
    if (opt.scheme.sigma < 0) throw Error(ErrorCode::InvalidConfig, "sigma must be non-negative");
  }

  // Context-free row of a piece.
  std::vector<double> static_row(const Piece& p) const {
    const auto d = opt_.hidden_dim;
    std::vector<double> row(d, 0.0);
    // Suffix pieces are verb-specific, so identity includes the lemma.
    const bool suffix = p.lemma_of && p.token != p.lemma_of->verb;
    std::mt19937_64 rng(derive_seed(opt_.seed, "static:" + (suffix ? p.lemma_of->verb : std::string()) + p.token));
    std::normal_distribution<double> normal(0.0, kLexicalScale);
    const bool signal = opt_.scheme.kind == SynthKind::LinearSignal;
    const std::size_t first_lexical = signal ? kReservedDims : 0;
    for (std::size_t j = first_lexical; j < d; ++j) row[j] = normal(rng);
    if (p.token == kCls || p.token == kSep) {
      for (auto& v : row) v += 4.0;
    }
    if (signal && p.lemma_of) {
      for (const auto& [frame, label] : p.lemma_of->labels) {
        row[frame.index()] = label ? kLabelAmplitude : -kLabelAmplitude;
      }
    }
    return row;
  }

  SentenceEmbeddings embed(const std::string& id, const Tokenized& tok, int grammar_sign,
                           std::uint64_t noise_seed) const {
    const auto L = opt_.num_layers;
    const auto d = opt_.hidden_dim;
    const auto T = static_cast<std::uint32_t>(tok.pieces.size());
    auto rec = SentenceEmbeddings::zeros(id, L, d, T);
    rec.span_start = tok.span_start;
    rec.span_end = tok.span_end;
    for (std::uint32_t t = 0; t < T; ++t) {
      rec.content_mask[t] = (tok.pieces[t].token == kCls || tok.pieces[t].token == kSep) ? 0 : 1;
    }

    std::vector<std::vector<double>> statics;
    statics.reserve(T);
    for (const auto& p : tok.pieces) statics.push_back(static_row(p));
    std::vector<double> context(d, 0.0);
    std::size_t n_content = 0;
    for (std::uint32_t t = 0; t < T; ++t) {
      if (!rec.content_mask[t]) continue;
      for (std::size_t j = 0; j < d; ++j) context[j] += statics[t][j];
      ++n_content;
    }
    for (auto& v : context) v /= static_cast<double>(n_content);

    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::uint32_t l = 0; l < L; ++l) {
      const double depth = L > 1 ? static_cast<double>(l) / static_cast<double>(L - 1) : 0.0;
      for (std::uint32_t t = 0; t < T; ++t) {
        auto row = rec.row(l, t);
        if (l == 0) {
          for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(statics[t][j]);
          continue;
        }
        if (opt_.scheme.kind == SynthKind::PureNoise) {
          for (std::size_t j = 0; j < d; ++j) row[j] = static_cast<float>(normal(rng));
          continue;
        }
        for (std::size_t j = 0; j < d; ++j) {
          double v = statics[t][j] + kContextMix * context[j];
          if (opt_.scheme.sigma > 0) v += opt_.scheme.sigma * normal(rng);
          row[j] = static_cast<float>(v);
        }
        if (rec.content_mask[t] && grammar_sign != 0) {
          row[kGrammarDim] += static_cast<float>(grammar_sign * kLabelAmplitude * (0.5 + depth));
        }
      }
    }
    return rec;
  }

 private:
  SynthOptions opt_;
};

}  // namespace

void synth_store(const SynthOptions& options, const LavaDataset& lava, const FavaDataset& fava,
                 const std::filesystem::path& out) {
  Generator gen(options);
  StoreWriter writer(out, StoreHeader{options.model_id, options.num_layers, options.hidden_dim});
  for (std::size_t i = 0; i < fava.size(); ++i) {
    const auto& s = fava.sentences()[i];
    auto vi = lava.find(s.verb);
    VerbRecord unknown{s.verb, {}};
    const VerbRecord& verb = vi ? lava.verbs()[*vi] : unknown;
    auto tok = tokenize(s.words, s.verb_word_index, verb);
    auto id = fava_sentence_id(i);
    writer.add(gen.embed(id, tok, s.grammatical ? 1 : -1, derive_seed(options.seed, "noise:" + id)));
  }
  for (const auto& v : lava.verbs()) {
    std::vector<std::string> words{v.verb};
    auto tok = tokenize(words, 0, v);
    auto id = isolated_verb_id(v.verb);
    writer.add(gen.embed(id, tok, 0, derive_seed(options.seed, "noise:" + id)));
  }
  writer.finish();
}

// ---------------------------------------------------------------- datasets

namespace {

struct FrameTally {
  FrameId frame;
  std::size_t positive;
  std::size_t negative;
};

// Per-frame positive / negative verb counts of the LaVA table.
constexpr std::array<FrameTally, kNumFrames> kLavaTallies = {{
    {FrameId::inchoative(), 73, 144},
    {FrameId::causative(), 124, 0},
    {FrameId::dative_prep(), 65, 377},
    {FrameId::dative_double_obj(), 74, 442},
    {FrameId::spray_load_with(), 101, 242},
    {FrameId::spray_load_locative(), 86, 257},
    {FrameId::no_there(), 149, 0},
    {FrameId::there(), 50, 192},
    {FrameId::understood_refl(), 84, 419},
    {FrameId::understood_non_refl(), 11, 503},
}};
constexpr std::size_t kLavaVerbs = 516;

std::vector<std::string> pseudo_words(std::size_t n, std::mt19937_64& rng) {
  static constexpr std::string_view consonants = "bdfgklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::uniform_int_distribution<std::size_t> pick_c(0, consonants.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_v(0, vowels.size() - 1);
  while (out.size() < n) {
    std::string w;
    for (int syl = 0; syl < 2; ++syl) {
      w += consonants[pick_c(rng)];
      w += vowels[pick_v(rng)];
    }
    w += consonants[pick_c(rng)];
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::size_t> sample(std::vector<std::size_t> pool, std::size_t k, std::mt19937_64& rng) {
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

LavaDataset make_synthetic_lava(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "lava"));
  auto names = pseudo_words(kLavaVerbs, rng);
  std::vector<VerbRecord> verbs;
  for (auto& n : names) verbs.push_back({std::move(n), {}});

  std::vector<std::size_t> everyone(kLavaVerbs);
  std::iota(everyone.begin(), everyone.end(), 0);

  // Within an alternation the smaller annotated set nests inside the larger.
  for (std::size_t a = 0; a < kNumAlternations; ++a) {
    const auto& first = kLavaTallies[2 * a];
    const auto& second = kLavaTallies[2 * a + 1];
    const bool first_larger = first.positive + first.negative >= second.positive + second.negative;
    const auto& big = first_larger ? first : second;
    const auto& small = first_larger ? second : first;
    auto big_set = sample(everyone, big.positive + big.negative, rng);
    auto small_set = sample(big_set, small.positive + small.negative, rng);
    for (const auto* tally : {&big, &small}) {
      const auto& members = tally == &big ? big_set : small_set;
      auto positives = sample(members, tally->positive, rng);
      for (auto v : members) {
        verbs[v].labels[tally->frame] = std::binary_search(positives.begin(), positives.end(), v);
      }
    }
  }
  return LavaDataset(std::move(verbs));
}

namespace {

struct Template {
  FrameId frame;
  std::string_view pattern;  // {V} is the verb, {N}/{M} nouns, {P}/{Q} names
};

constexpr std::array<Template, kNumFrames> kTemplates = {{
    {FrameId::inchoative(), "the {N} {V} ."},
    {FrameId::causative(), "{P} {V} the {N} ."},
    {FrameId::dative_prep(), "{P} {V} the {N} to {Q} ."},
    {FrameId::dative_double_obj(), "{P} {V} {Q} the {N} ."},
    {FrameId::spray_load_with(), "{P} {V} the {N} with the {M} ."},
    {FrameId::spray_load_locative(), "{P} {V} the {M} onto the {N} ."},
    {FrameId::no_there(), "a {N} {V} in the {M} ."},
    {FrameId::there(), "there {V} a {N} in the {M} ."},
    {FrameId::understood_refl(), "{P} {V} herself ."},
    {FrameId::understood_non_refl(), "{P} {V} ."},
}};

constexpr std::array<std::string_view, 12> kNouns = {"cup",  "wall", "truck", "paint", "hay",  "window",
                                                     "book", "door", "garden", "water", "box", "letter"};
constexpr std::array<std::string_view, 8> kNames = {"janet", "tamara", "omar", "lena",
                                                    "kofi",  "mira",   "hugo", "ada"};
constexpr std::array<std::string_view, 3> kSuffixes = {"ed", "s", ""};
// Share of sentences per alternation, in alternation order.
constexpr std::array<double, kNumAlternations> kAlternationShare = {0.18, 0.23, 0.22, 0.14, 0.23};

}  // namespace

FavaDataset make_synthetic_fava(const LavaDataset& lava, std::uint64_t seed, std::size_t total) {
  std::mt19937_64 rng(derive_seed(seed, "fava"));
  std::array<std::size_t, kNumAlternations> quota{};
  std::size_t assigned = 0;
  for (std::size_t a = 0; a < kNumAlternations; ++a) {
    quota[a] = a + 1 == kNumAlternations ? total - assigned
                                         : static_cast<std::size_t>(kAlternationShare[a] * static_cast<double>(total));
    assigned += quota[a];
  }

  std::uniform_int_distribution<std::size_t> noun(0, kNouns.size() - 1);
  std::uniform_int_distribution<std::size_t> name(0, kNames.size() - 1);
  std::uniform_int_distribution<std::size_t> suffix(0, kSuffixes.size() - 1);
  std::discrete_distribution<int> split_dist({0.7, 0.1, 0.2});

  std::vector<SentenceRecord> out;
  for (std::size_t a = 0; a < kNumAlternations; ++a) {
    const auto alt = kAllAlternations[a];
    // (verb, frame) pairs annotated in this alternation, cycled in shuffled order.
    std::vector<std::pair<std::size_t, FrameId>> pairs;
    for (std::size_t v = 0; v < lava.size(); ++v) {
      for (const auto& [frame, label] : lava.verbs()[v].labels) {
        if (frame.alternation() == alt) pairs.emplace_back(v, frame);
      }
    }
    if (pairs.empty()) continue;
    std::shuffle(pairs.begin(), pairs.end(), rng);
    for (std::size_t i = 0; i < quota[a]; ++i) {
      const auto& [v, frame] = pairs[i % pairs.size()];
      const auto& verb = lava.verbs()[v];
      SentenceRecord rec;
      rec.alternation = alt;
      rec.split = static_cast<Split>(split_dist(rng));
      rec.grammatical = verb.labels.at(frame);
      rec.verb = verb.verb;
      auto n1 = noun(rng);
      auto n2 = (n1 + 1 + noun(rng) % (kNouns.size() - 1)) % kNouns.size();
      auto p1 = name(rng);
      auto p2 = (p1 + 1 + name(rng) % (kNames.size() - 1)) % kNames.size();
      std::string_view pattern = kTemplates[frame.index()].pattern;
      std::size_t pos = 0;
      while (pos < pattern.size()) {
        auto end = pattern.find(' ', pos);
        if (end == std::string_view::npos) end = pattern.size();
        auto slot = pattern.substr(pos, end - pos);
        if (slot == "{V}") {
          rec.verb_word_index = rec.words.size();
          rec.words.push_back(verb.verb + std::string(kSuffixes[suffix(rng)]));
        } else if (slot == "{N}") {
          rec.words.emplace_back(kNouns[n1]);
        } else if (slot == "{M}") {
          rec.words.emplace_back(kNouns[n2]);
        } else if (slot == "{P}") {
          rec.words.emplace_back(kNames[p1]);
        } else if (slot == "{Q}") {
          rec.words.emplace_back(kNames[p2]);
        } else {
          rec.words.emplace_back(slot);
        }
        pos = end + 1;
      }
      out.push_back(std::move(rec));
    }
  }
  return FavaDataset(std::move(out));
}

}  // namespace altprobe
