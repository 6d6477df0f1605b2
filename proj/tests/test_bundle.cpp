#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "bfscl/binary_io.hpp"
#include "bfscl/bundle.hpp"
#include "bfscl/dataset.hpp"
#include "bfscl/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bfscl;
using bfscl::testing::label_index;

namespace {

SyntheticTeacherConfig small_teacher(std::uint64_t seed = 1) {
  SyntheticTeacherConfig c;
  c.scale_dims = {3, 5};
  c.embed_dim = 4;
  c.seed = seed;
  return c;
}

bool same_floats(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("bundle write/load round trip") {
  const DatasetIndex idx = label_index(6, 4, 2);
  const TeacherBundle b = synthetic_teacher(idx, 0.7, small_teacher());
  write_bundle(b, "roundtrip.bftb");
  const TeacherBundle r = load_bundle("roundtrip.bftb");
  CHECK(r.version == b.version);
  CHECK(r.scale_dims == b.scale_dims);
  CHECK(r.embed_dim == b.embed_dim);
  CHECK(r.class_names == b.class_names);
  REQUIRE(r.records.size() == b.records.size());
  for (std::size_t i = 0; i < b.records.size(); ++i) {
    CHECK(r.records[i].sample_id == b.records[i].sample_id);
    CHECK(r.records[i].label == b.records[i].label);
    CHECK(same_floats(r.records[i].embedding, b.records[i].embedding));
    CHECK(same_floats(r.records[i].vocab_scores, b.records[i].vocab_scores));
    for (std::size_t l = 0; l < 2; ++l) CHECK(same_floats(r.records[i].features[l], b.records[i].features[l]));
  }
  CHECK(encode_bundle(r) == encode_bundle(b));
  CHECK_THROWS_AS(r.record(999), BundleError);
}

TEST_CASE("bundle decoding failures") {
  const TeacherBundle b = synthetic_teacher(label_index(3, 2, 1), 1.0, small_teacher());
  const std::string bytes = encode_bundle(b);

  std::string bad = bytes;
  bad.replace(0, 4, "XXXX");
  CHECK_THROWS_AS(decode_bundle(bad), FormatError);

  std::string wrong_version = bytes;
  wrong_version[4] = 9;
  CHECK_THROWS_AS(decode_bundle(wrong_version), FormatError);

  // Cut in the middle of the last record.
  CHECK_THROWS_AS(decode_bundle(bytes.substr(0, bytes.size() - 7)), CorruptionError);
  try {
    decode_bundle(bytes.substr(0, bytes.size() - 7));
  } catch (const CorruptionError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_bundle(bytes.substr(0, 10)), CorruptionError);
  CHECK_THROWS_AS(decode_bundle(bytes + "junk"), CorruptionError);
  CHECK_THROWS_AS(load_bundle("does-not-exist.bftb"), FormatError);
}

TEST_CASE("validate_bundle reports one issue per defect") {
  const DatasetIndex idx = label_index(5, 3, 1);
  TeacherBundle b = synthetic_teacher(idx, 0.5, small_teacher());
  BundleExpectations expect{.n_scales = 2, .scale_dims = {3, 5}, .embed_dim = 4, .class_universe = idx.class_names,
                            .n_samples = idx.samples.size()};
  CHECK(validate_bundle(b, expect).empty());

  TeacherBundle nan = b;
  nan.records[7].embedding[2] = std::numeric_limits<float>::quiet_NaN();
  const auto issues = validate_bundle(nan, expect);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].sample_id == 7u);
  CHECK(issues[0].field == "embedding");
  CHECK(issues[0].to_string().find("sample 7") != std::string::npos);
  CHECK_THROWS_AS(decode_bundle(encode_bundle(nan)), BundleError);

  TeacherBundle missing = b;
  missing.class_names.pop_back();
  for (auto& r : missing.records) r.vocab_scores.pop_back();
  bool coverage = false;
  for (const auto& i : validate_bundle(missing, expect)) coverage |= i.field == "vocabulary-coverage";
  CHECK(coverage);

  expect.scale_dims = {3, 6};
  const auto dims = validate_bundle(b, expect);
  REQUIRE(dims.size() == 1);
  CHECK(dims[0].field == "scale 2");
}

TEST_CASE("synthetic teacher quality") {
  const DatasetIndex idx = label_index(10, 40, 10);
  const VocabularyMap vocab(idx.class_names, idx.class_names);
  auto cfg = small_teacher(3);
  CHECK(teacher_accuracy(synthetic_teacher(idx, 1.0, cfg), vocab) == 100.0);

  const double chance = teacher_accuracy(synthetic_teacher(idx, 0.0, cfg), vocab);
  const double n = static_cast<double>(idx.samples.size());
  CHECK(std::abs(chance - 10.0) <= 3 * 100.0 * std::sqrt(0.1 * 0.9 / n));

  double prev = -1;
  for (double q : {0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0}) {
    const double acc = teacher_accuracy(synthetic_teacher(idx, q, cfg), vocab);
    CHECK(acc >= prev);
    prev = acc;
  }

  CHECK(encode_bundle(synthetic_teacher(idx, 0.4, cfg)) == encode_bundle(synthetic_teacher(idx, 0.4, cfg)));
  CHECK_THROWS_AS(synthetic_teacher(idx, 1.5, cfg), UsageError);
  CHECK_THROWS_AS(synthetic_teacher(idx, -0.1, cfg), UsageError);
}

TEST_CASE("dataset round trip") {
  BlobsConfig bc;
  bc.classes = 3;
  bc.train_per_class = 4;
  bc.test_per_class = 2;
  bc.seed = 9;
  const Dataset ds = make_blobs(bc);
  CHECK(ds.size() == 18);
  std::filesystem::remove_all("ds_roundtrip");
  write_dataset(ds, "ds_roundtrip");
  const Dataset back = load_dataset("ds_roundtrip");
  CHECK(back.index.class_names == ds.index.class_names);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.index.samples[i].label == ds.index.samples[i].label);
    CHECK(back.index.samples[i].test == ds.index.samples[i].test);
  }
  const std::uint64_t ids[] = {0, 17};
  const Tensor a = ds.batch(ids), c = back.batch(ids);
  CHECK(a.shape == Shape{2, 8, 8, 3});
  // Pixels are stored as f32.
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(c[i] == static_cast<double>(static_cast<float>(a[i])));
  CHECK_THROWS_AS(load_dataset("no-such-dataset"), FormatError);
}

TEST_CASE("class-name manifest") {
  const std::string names[] = {"cat", "dog"};
  const std::string text = join_manifest(names);
  CHECK(split_manifest(text, 2) == std::vector<std::string>{"cat", "dog"});
  CHECK(split_manifest(text + "\n", 2) == std::vector<std::string>{"cat", "dog"});
  CHECK_THROWS(split_manifest(text, 3));
}

TEST_CASE("byte reader reports truncation offsets") {
  io::ByteWriter w;
  w.u32(7);
  w.f64(1.5);
  io::ByteReader r(w.str());
  CHECK(r.u32("a") == 7);
  CHECK(r.f64("b") == 1.5);
  try {
    r.u8("c");
    FAIL("expected a corruption error");
  } catch (const CorruptionError& e) {
    CHECK(e.offset() == 12);
  }
}
