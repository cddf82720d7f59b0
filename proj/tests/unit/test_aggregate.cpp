#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

#include "altprobe/aggregate.hpp"
#include "altprobe/datasets.hpp"
#include "altprobe/embstore.hpp"
#include "support.hpp"

using namespace altprobe;
using altprobe::testing::code_of;
using altprobe::testing::TempDir;

namespace {

// Record with one layer, d = 2, whose rows are given explicitly.
SentenceEmbeddings record_from_rows(const std::string& id, const std::vector<std::array<float, 2>>& rows,
                                    std::uint32_t span_start, std::uint32_t span_end) {
  auto r = SentenceEmbeddings::zeros(id, 1, 2, static_cast<std::uint32_t>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    r.row(0, t)[0] = rows[t][0];
    r.row(0, t)[1] = rows[t][1];
  }
  r.span_start = span_start;
  r.span_end = span_end;
  r.content_mask.assign(rows.size(), 1);
  return r;
}

}  // namespace

TEST(VerbAggregate, SingleTokenIsIdentity) {
  const auto r = record_from_rows("a", {{9, 9}, {3, -4}, {9, 9}}, 1, 2);
  const auto v = aggregate_verb_embedding("x", 0, std::span(&r, 1));
  EXPECT_EQ(v.vector, Eigen::Vector2d(3, -4));
  EXPECT_EQ(v.support, 1u);
}

TEST(VerbAggregate, TwoSentencesAverage) {
  std::vector<SentenceEmbeddings> rs{record_from_rows("a", {{2, 6}}, 0, 1), record_from_rows("b", {{4, -2}}, 0, 1)};
  EXPECT_EQ(aggregate_verb_embedding("x", 0, rs).vector, Eigen::Vector2d(3, 2));
}

TEST(VerbAggregate, MeanOfMeansWithUnequalWidths) {
  // Spans of widths 1, 2, 2.
  std::vector<SentenceEmbeddings> rs{
      record_from_rows("a", {{0, 0}, {3, 1}}, 1, 2),
      record_from_rows("b", {{1, 2}, {5, 4}, {7, 7}}, 0, 2),
      record_from_rows("c", {{8, 8}, {0, 6}, {2, 0}}, 1, 3),
  };
  // Straight-line oracle: per-sentence means (3,1), (3,3), (1,3); then mean.
  const double x = (3.0 + (1.0 + 5.0) / 2 + (0.0 + 2.0) / 2) / 3;
  const double y = (1.0 + (2.0 + 4.0) / 2 + (6.0 + 0.0) / 2) / 3;
  const auto v = aggregate_verb_embedding("x", 0, rs);
  EXPECT_DOUBLE_EQ(v.vector[0], x);
  EXPECT_DOUBLE_EQ(v.vector[1], y);
  EXPECT_EQ(v.support, 3u);
  // Pooling all five tokens would give a different answer.
  EXPECT_NE(v.vector[0], (3.0 + 1 + 5 + 0 + 2) / 5);
}

TEST(VerbAggregate, PermutationInvariantAndLinear) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal;
  std::vector<SentenceEmbeddings> rs;
  for (int i = 0; i < 7; ++i) {
    auto r = SentenceEmbeddings::zeros("s" + std::to_string(i), 3, 5, 4);
    for (auto& v : r.data) v = normal(rng);
    r.span_start = static_cast<std::uint32_t>(i % 3);
    r.span_end = r.span_start + 1 + static_cast<std::uint32_t>(i % 2);
    r.content_mask.assign(4, 1);
    rs.push_back(r);
  }
  for (std::size_t layer = 0; layer < 3; ++layer) {
    const auto base = aggregate_verb_embedding("v", layer, rs).vector;
    auto shuffled = rs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_TRUE(aggregate_verb_embedding("v", layer, shuffled).vector.isApprox(base, 1e-12));

    auto scaled = rs;
    for (auto& r : scaled) {
      for (auto& v : r.data) v *= 4.0f;  // exact in binary floating point
    }
    EXPECT_TRUE(aggregate_verb_embedding("v", layer, scaled).vector.isApprox(4.0 * base, 1e-12));
  }
}

TEST(VerbAggregate, NoSupport) {
  EXPECT_EQ(code_of([] { aggregate_verb_embedding("v", 0, {}); }), ErrorCode::NoSupport);
}

TEST(SentenceAggregate, ConstantRows) {
  const auto r = record_from_rows("a", {{2, 5}, {2, 5}, {2, 5}}, 0, 1);
  EXPECT_EQ(aggregate_sentence_embedding(r, 0).vector, Eigen::Vector2d(2, 5));
}

TEST(SentenceAggregate, SpecialTokenExcluded) {
  auto r = record_from_rows("a", {{100, 100}, {1, 0}, {0, 1}}, 1, 2);
  r.content_mask = {0, 1, 1};
  EXPECT_EQ(aggregate_sentence_embedding(r, 0).vector, Eigen::Vector2d(0.5, 0.5));
}

TEST(SentenceAggregate, RandomRecordMatchesOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 20; ++trial) {
    auto r = SentenceEmbeddings::zeros("r", 2, 3, 6);
    for (auto& v : r.data) v = normal(rng);
    for (auto& m : r.content_mask) m = static_cast<std::uint8_t>(rng() % 2);
    r.content_mask[rng() % 6] = 1;
    r.span_end = 1;
    for (std::size_t layer = 0; layer < 2; ++layer) {
      double sum[3] = {0, 0, 0};
      int n = 0;
      for (std::size_t t = 0; t < 6; ++t) {
        if (r.content_mask[t] == 0) continue;
        for (std::size_t j = 0; j < 3; ++j) sum[j] += r.data[(layer * 6 + t) * 3 + j];
        ++n;
      }
      const auto v = aggregate_sentence_embedding(r, layer).vector;
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(v[static_cast<Eigen::Index>(j)], sum[j] / n, 1e-12);
    }
  }
}

TEST(SentenceAggregate, EmptyMask) {
  auto r = record_from_rows("a", {{1, 1}}, 0, 1);
  r.content_mask = {0};
  EXPECT_EQ(code_of([&] { masked_mean(r, 0); }), ErrorCode::EmptyMask);
}

TEST(VerbFeatureTable, GrammaticalOnlyWithIsolatedFallback) {
  TempDir dir;
  LavaDataset lava({{"load", {{FrameId::spray_load_with(), true}}},
                    {"pour", {{FrameId::spray_load_with(), false}}},
                    {"fill", {{FrameId::spray_load_with(), true}}}});
  auto sentence = [](std::string verb, bool ok, std::size_t idx, std::string text) {
    SentenceRecord s;
    std::istringstream in(text);
    for (std::string w; in >> w;) s.words.push_back(w);
    s.alternation = Alternation::SprayLoad;
    s.grammatical = ok;
    s.verb = std::move(verb);
    s.verb_word_index = idx;
    return s;
  };
  FavaDataset fava({sentence("load", true, 1, "i loaded hay"), sentence("load", false, 1, "i loaded onto"),
                    sentence("load", true, 1, "i load hay"), sentence("pour", false, 1, "i poured cart")});

  const std::uint32_t L = 2, d = 1;
  auto rec = [&](std::string id, float value) {
    auto r = SentenceEmbeddings::zeros(std::move(id), L, d, 1);
    r.span_end = 1;
    r.content_mask = {1};
    r.row(0, 0)[0] = value;
    r.row(1, 0)[0] = 10 * value;
    return r;
  };
  std::vector<SentenceEmbeddings> records{rec(fava_sentence_id(0), 1), rec(fava_sentence_id(1), 100),
                                          rec(fava_sentence_id(2), 3), rec(fava_sentence_id(3), 50),
                                          rec(isolated_verb_id("load"), 7), rec(isolated_verb_id("pour"), 5)};
  write_store({"m", L, d}, records, dir / "s.altp");

  const auto f = build_verb_features(lava, fava, dir / "s.altp");
  ASSERT_EQ(f.num_layers(), 2u);
  EXPECT_EQ(f.support, (std::vector<std::size_t>{2, 0, 0}));
  EXPECT_EQ(f.fallback, (std::vector<bool>{false, true, false}));
  EXPECT_EQ(f.missing, (std::vector<bool>{false, false, true}));
  // load: mean of sentences 0 and 2; the ungrammatical one is ignored.
  EXPECT_DOUBLE_EQ(f.layers[0](0, 0), 2.0);
  EXPECT_DOUBLE_EQ(f.layers[1](0, 0), 20.0);
  // pour: layer-0 isolated row at every layer.
  EXPECT_DOUBLE_EQ(f.layers[0](1, 0), 5.0);
  EXPECT_DOUBLE_EQ(f.layers[1](1, 0), 5.0);

  const std::vector<std::string> ok{"pour", "load"};
  EXPECT_EQ(f.rows(ok, 1), (Eigen::MatrixXd(2, 1) << 5.0, 20.0).finished());
  EXPECT_EQ(f.fallback_count(ok), 1u);
  const std::vector<std::string> bad{"fill"};
  EXPECT_EQ(code_of([&] { f.rows(bad, 0); }), ErrorCode::NoSupport);

  const auto sf = build_sentence_features(fava, dir / "s.altp");
  EXPECT_EQ(sf.present, (std::vector<bool>{true, true, true, true}));
  EXPECT_DOUBLE_EQ(sf.layer(1)(1, 0), 1000.0);
}
