#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>

#include <json.hpp>

#include "altprobe/datasets.hpp"
#include "altprobe/embstore.hpp"
#include "altprobe/synth.hpp"
#include "support.hpp"

using namespace altprobe;
using altprobe::testing::code_of;
using altprobe::testing::read_bytes;
using altprobe::testing::TempDir;

namespace {

SentenceEmbeddings random_record(std::mt19937_64& rng, const std::string& id, std::uint32_t L, std::uint32_t d) {
  const auto T = std::uniform_int_distribution<std::uint32_t>(1, 7)(rng);
  auto r = SentenceEmbeddings::zeros(id, L, d, T);
  std::uniform_int_distribution<std::uint32_t> pos(0, T - 1);
  r.span_start = pos(rng);
  r.span_end = std::uniform_int_distribution<std::uint32_t>(r.span_start + 1, T)(rng);
  std::bernoulli_distribution keep(0.7);
  for (auto& m : r.content_mask) m = keep(rng) ? 1 : 0;
  r.content_mask[pos(rng)] = 1;
  std::normal_distribution<float> normal;
  for (auto& v : r.data) v = normal(rng);
  return r;
}

std::vector<SentenceEmbeddings> read_via_iterator(const std::filesystem::path& p) {
  StoreReader reader(p);
  std::vector<SentenceEmbeddings> out;
  for (const auto& r : reader) out.push_back(r);
  return out;
}

}  // namespace

TEST(Store, RoundTripProperty) {
  TempDir dir;
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint32_t L = 1 + trial % 4;
    const std::uint32_t d = 1 + (trial * 7) % 9;
    const StoreHeader h{"model-" + std::to_string(trial), L, d};
    std::vector<SentenceEmbeddings> records;
    for (int i = 0; i < trial % 6; ++i) records.push_back(random_record(rng, "fava:" + std::to_string(i), L, d));
    const auto path = dir / "rt.altp";
    write_store(h, records, path);

    StoreReader reader(path);
    EXPECT_EQ(reader.header(), h);
    EXPECT_EQ(reader.record_count(), records.size());
    EXPECT_EQ(read_via_iterator(path), records);
  }
}

TEST(Store, EmptyStoreIsValid) {
  TempDir dir;
  write_store({"m", 3, 4}, {}, dir / "e.altp");
  StoreReader reader(dir / "e.altp");
  EXPECT_EQ(reader.record_count(), 0u);
  EXPECT_FALSE(reader.next());
}

TEST(Store, FileSizeFollowsLayout) {
  // One record, L=2, T=3, d=4, id "s0", model "m".
  const std::size_t header = 8 + 4 + 4 + 4 + 2 + 1 + 8;
  const std::size_t framing = 2 + 2 + 4 + 4 + 4 + 3;
  const std::size_t payload = 2 * 3 * 4 * 4;
  TempDir dir;
  auto r = SentenceEmbeddings::zeros("s0", 2, 4, 3);
  r.span_start = 1;
  r.span_end = 2;
  r.content_mask = {0, 1, 0};
  write_store({"m", 2, 4}, std::span(&r, 1), dir / "one.altp");
  EXPECT_EQ(std::filesystem::file_size(dir / "one.altp"), header + framing + payload);
  EXPECT_EQ(header + framing + payload, 146u);
}

TEST(Store, ByteLayoutIsLittleEndian) {
  TempDir dir;
  auto r = SentenceEmbeddings::zeros("a", 1, 1, 1);
  r.span_end = 1;
  r.content_mask = {1};
  r.data = {1.0f};
  write_store({"m", 1, 1}, std::span(&r, 1), dir / "le.altp");
  const auto bytes = read_bytes(dir / "le.altp");
  ASSERT_GE(bytes.size(), 31u);
  EXPECT_EQ(bytes.substr(0, 8), "ALTPROB1");
  EXPECT_EQ(bytes.substr(8, 4), std::string("\x01\x00\x00\x00", 4));   // version
  EXPECT_EQ(bytes.substr(23, 8), std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8));  // record count
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string("\x00\x00\x80\x3f", 4));  // 1.0f
}

TEST(Store, SidecarDuplicatesHeader) {
  TempDir dir;
  write_store({"bert-base", 13, 8}, {}, dir / "s.altp");
  std::ifstream in(sidecar_path(dir / "s.altp"));
  ASSERT_TRUE(in);
  const auto meta = nlohmann::json::parse(in);
  EXPECT_EQ(meta["magic"], "ALTPROB1");
  EXPECT_EQ(meta["model_id"], "bert-base");
  EXPECT_EQ(meta["num_layers"], 13);
  EXPECT_EQ(meta["hidden_dim"], 8);
  EXPECT_EQ(meta["record_count"], 0);
}

TEST(Store, WrongMagic) {
  TempDir dir;
  altprobe::testing::write_text(dir / "bad.altp", "NOTASTORE-and-some-more-bytes-here");
  EXPECT_EQ(code_of([&] { StoreReader r(dir / "bad.altp"); }), ErrorCode::BadMagic);
}

TEST(Store, MissingTokenRowIsTruncated) {
  TempDir dir;
  const std::uint32_t L = 2, d = 3;
  auto r = SentenceEmbeddings::zeros("s", L, d, 5);
  r.span_end = 1;
  r.content_mask.assign(5, 1);
  write_store({"m", L, d}, std::span(&r, 1), dir / "t.altp");
  // Declares T=5 but carries only four token rows.
  const auto full = std::filesystem::file_size(dir / "t.altp");
  std::filesystem::resize_file(dir / "t.altp", full - d * sizeof(float) * L);
  StoreReader reader(dir / "t.altp");
  EXPECT_EQ(code_of([&] { reader.next(); }), ErrorCode::TruncatedRecord);
}

TEST(Store, TrailingBytesAreRejected) {
  TempDir dir;
  write_store({"m", 1, 1}, {}, dir / "x.altp");
  {
    std::ofstream out(dir / "x.altp", std::ios::binary | std::ios::app);
    out << "junk";
  }
  StoreReader reader(dir / "x.altp");
  EXPECT_EQ(code_of([&] { reader.next(); }), ErrorCode::TruncatedRecord);
}

TEST(Store, WriterValidatesRecords) {
  TempDir dir;
  auto r = SentenceEmbeddings::zeros("s", 2, 2, 2);
  r.span_end = 1;
  r.content_mask = {1, 1};

  auto nan = r;
  nan.row(1, 1)[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(code_of([&] { write_store({"m", 2, 2}, std::span(&nan, 1), dir / "a.altp"); }), ErrorCode::DimMismatch);

  // A non-finite value in a masked-out row is not an error.
  auto masked = nan;
  masked.content_mask = {1, 0};
  EXPECT_NO_THROW(write_store({"m", 2, 2}, std::span(&masked, 1), dir / "b.altp"));

  EXPECT_EQ(code_of([&] { write_store({"m", 3, 2}, std::span(&r, 1), dir / "c.altp"); }), ErrorCode::DimMismatch);

  auto span = r;
  span.span_start = 1;
  span.span_end = 1;
  EXPECT_EQ(code_of([&] { write_store({"m", 2, 2}, std::span(&span, 1), dir / "d.altp"); }), ErrorCode::DimMismatch);

  auto empty_mask = r;
  empty_mask.content_mask = {0, 0};
  EXPECT_EQ(code_of([&] { write_store({"m", 2, 2}, std::span(&empty_mask, 1), dir / "e.altp"); }),
            ErrorCode::DimMismatch);
}

TEST(Synth, SameSeedGivesIdenticalBytes) {
  TempDir dir;
  const auto lava = make_synthetic_lava(1);
  const auto fava = make_synthetic_fava(lava, 1, 200);
  for (auto kind : {SynthKind::LinearSignal, SynthKind::PureNoise}) {
    SynthOptions o;
    o.seed = 11;
    o.scheme.kind = kind;
    o.scheme.sigma = 0.5;
    o.num_layers = 3;
    o.hidden_dim = 16;
    synth_store(o, lava, fava, dir / "a.altp");
    synth_store(o, lava, fava, dir / "b.altp");
    EXPECT_EQ(read_bytes(dir / "a.altp"), read_bytes(dir / "b.altp"));
    o.seed = 12;
    synth_store(o, lava, fava, dir / "c.altp");
    EXPECT_NE(read_bytes(dir / "a.altp"), read_bytes(dir / "c.altp"));
  }
}

TEST(Synth, CoversEverySentenceAndVerb) {
  TempDir dir;
  const auto lava = make_synthetic_lava(2);
  const auto fava = make_synthetic_fava(lava, 2, 150);
  SynthOptions o;
  o.num_layers = 2;
  o.hidden_dim = 12;
  synth_store(o, lava, fava, dir / "s.altp");
  const auto records = read_all_records(dir / "s.altp");
  ASSERT_EQ(records.size(), fava.size() + lava.size());
  for (std::size_t i = 0; i < fava.size(); ++i) EXPECT_EQ(records[i].sentence_id, fava_sentence_id(i));
  for (std::size_t i = 0; i < lava.size(); ++i) {
    EXPECT_EQ(records[fava.size() + i].sentence_id, isolated_verb_id(lava.verbs()[i].verb));
  }
}

TEST(Synth, StaticLayerDependsOnTokenOnly) {
  TempDir dir;
  const auto lava = make_synthetic_lava(4);
  const auto fava = make_synthetic_fava(lava, 4, 300);
  SynthOptions o;
  o.num_layers = 3;
  o.hidden_dim = 14;
  synth_store(o, lava, fava, dir / "s.altp");
  const auto records = read_all_records(dir / "s.altp");

  // The lemma piece opens every verb span; at layer 0 it must equal the
  // verb's isolated record exactly, whatever the sentence.
  std::map<std::string, const SentenceEmbeddings*> isolated;
  for (std::size_t i = 0; i < lava.size(); ++i) isolated[lava.verbs()[i].verb] = &records[fava.size() + i];
  std::size_t checked = 0;
  for (std::size_t i = 0; i < fava.size(); ++i) {
    const auto& r = records[i];
    const auto* iso = isolated.at(fava.sentences()[i].verb);
    const auto a = r.row(0, r.span_start);
    const auto b = iso->row(0, iso->span_start);
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
    ++checked;
  }
  EXPECT_EQ(checked, fava.size());
}
