#include "bfscl/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "bfscl/binary_io.hpp"
#include "bfscl/error.hpp"

namespace bfscl {

const TeacherRecord& TeacherBundle::record(std::uint64_t sample_id) const {
  if (sample_id >= records.size() || records[sample_id].sample_id != sample_id) {
    throw BundleError("teacher record missing for sample " + std::to_string(sample_id));
  }
  return records[sample_id];
}

std::string BundleIssue::to_string() const {
  std::string out;
  if (sample_id) out += "sample " + std::to_string(*sample_id) + ": ";
  out += field + ": " + message;
  return out;
}

std::string encode_bundle(const TeacherBundle& b) {
  io::ByteWriter w;
  w.bytes("BFTB");
  w.u32(b.version);
  w.u64(b.records.size());
  w.u32(static_cast<std::uint32_t>(b.scale_dims.size()));
  for (std::uint32_t d : b.scale_dims) w.u32(d);
  w.u32(b.embed_dim);
  w.u32(static_cast<std::uint32_t>(b.class_names.size()));
  const std::string manifest = join_manifest(b.class_names);
  w.u32(static_cast<std::uint32_t>(manifest.size()));
  w.bytes(manifest);
  for (const auto& r : b.records) {
    if (r.features.size() != b.scale_dims.size()) {
      throw BundleError("write_bundle: sample " + std::to_string(r.sample_id) + " has " +
                        std::to_string(r.features.size()) + " scales, header has " +
                        std::to_string(b.scale_dims.size()));
    }
    w.u64(r.sample_id);
    w.u32(r.label);
    for (std::size_t l = 0; l < r.features.size(); ++l) {
      if (r.features[l].size() != b.scale_dims[l]) {
        throw BundleError("write_bundle: sample " + std::to_string(r.sample_id) + " scale " + std::to_string(l + 1) +
                          " has the wrong length");
      }
      for (float v : r.features[l]) w.f32(v);
    }
    if (r.embedding.size() != b.embed_dim || r.vocab_scores.size() != b.class_names.size()) {
      throw BundleError("write_bundle: sample " + std::to_string(r.sample_id) + " vector lengths do not match header");
    }
    for (float v : r.embedding) w.f32(v);
    for (float v : r.vocab_scores) w.f32(v);
  }
  return w.str();
}

TeacherBundle decode_bundle(std::string_view bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != "BFTB") throw FormatError("bundle: bad magic");
  TeacherBundle b;
  b.version = r.u32("version");
  if (b.version != kBundleVersion) throw FormatError("bundle: unsupported version " + std::to_string(b.version));
  const std::uint64_t n = r.u64("n_samples");
  const std::uint32_t scales = r.u32("n_scales");
  for (std::uint32_t l = 0; l < scales; ++l) b.scale_dims.push_back(r.u32("scale dims"));
  b.embed_dim = r.u32("embed_dim");
  const std::uint32_t vocab = r.u32("vocab_size");
  const std::uint32_t manifest_len = r.u32("manifest_len");
  b.class_names = split_manifest(r.bytes(manifest_len, "manifest"), vocab);

  std::size_t record_bytes = 12;
  for (std::uint32_t d : b.scale_dims) record_bytes += 4 * std::size_t{d};
  record_bytes += 4 * (std::size_t{b.embed_dim} + vocab);
  if (r.remaining() / record_bytes < n) {
    throw CorruptionError("truncated file: " + std::to_string(n) + " records declared", r.offset() +
                                                                                            (r.remaining() / record_bytes) * record_bytes);
  }
  b.records.resize(n);
  for (auto& rec : b.records) {
    rec.sample_id = r.u64("sample_id");
    rec.label = r.u32("label");
    rec.features.resize(scales);
    for (std::uint32_t l = 0; l < scales; ++l) {
      rec.features[l].resize(b.scale_dims[l]);
      for (float& v : rec.features[l]) v = r.f32("features");
    }
    rec.embedding.resize(b.embed_dim);
    for (float& v : rec.embedding) v = r.f32("embedding");
    rec.vocab_scores.resize(vocab);
    for (float& v : rec.vocab_scores) v = r.f32("vocab_scores");
  }
  if (!r.done()) throw CorruptionError("trailing bytes after last record", r.offset());

  const auto issues = validate_bundle(b);
  if (!issues.empty()) {
    std::string msg = "bundle failed validation:";
    for (const auto& i : issues) msg += "\n  " + i.to_string();
    throw BundleError(msg);
  }
  return b;
}

void write_bundle(const TeacherBundle& bundle, const std::string& path) { io::write_file(path, encode_bundle(bundle)); }

TeacherBundle load_bundle(const std::string& path) { return decode_bundle(io::read_file(path)); }

namespace {
bool finite(std::span<const float> v) {
  return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}
}  // namespace

std::vector<BundleIssue> validate_bundle(const TeacherBundle& b, const BundleExpectations& expected) {
  std::vector<BundleIssue> issues;
  auto header = [&](std::string field, std::string msg) { issues.push_back({std::nullopt, std::move(field), std::move(msg)}); };
  auto sample = [&](std::uint64_t id, std::string field, std::string msg) {
    issues.push_back({id, std::move(field), std::move(msg)});
  };

  if (expected.n_scales && b.num_scales() != *expected.n_scales) {
    header("n_scales", "bundle has " + std::to_string(b.num_scales()) + " scales, student expects " +
                           std::to_string(*expected.n_scales));
  }
  if (!expected.scale_dims.empty()) {
    const std::size_t n = std::min(expected.scale_dims.size(), b.scale_dims.size());
    for (std::size_t l = 0; l < n; ++l) {
      if (b.scale_dims[l] != expected.scale_dims[l]) {
        header("scale " + std::to_string(l + 1), "dim " + std::to_string(b.scale_dims[l]) + ", expected " +
                                                      std::to_string(expected.scale_dims[l]));
      }
    }
    if (expected.scale_dims.size() != b.scale_dims.size() && !expected.n_scales) {
      header("n_scales", "bundle has " + std::to_string(b.num_scales()) + " scales, expected " +
                             std::to_string(expected.scale_dims.size()));
    }
  }
  if (expected.embed_dim && b.embed_dim != *expected.embed_dim) {
    header("embed_dim", std::to_string(b.embed_dim) + ", expected " + std::to_string(*expected.embed_dim));
  }
  {
    std::set<std::string> names;
    for (const auto& n : b.class_names) {
      if (!names.insert(n).second) header("vocabulary", "duplicate class name '" + n + "'");
    }
    for (const auto& c : expected.class_universe) {
      if (!names.count(c)) header("vocabulary-coverage", "dataset class '" + c + "' is missing from the vocabulary");
    }
  }
  if (expected.n_samples && b.records.size() != *expected.n_samples) {
    header("n_samples", std::to_string(b.records.size()) + " records, dataset has " +
                            std::to_string(*expected.n_samples) + " samples");
  }

  for (std::size_t i = 0; i < b.records.size(); ++i) {
    const TeacherRecord& r = b.records[i];
    if (r.sample_id != i) {
      sample(r.sample_id, "sample_id", "found at position " + std::to_string(i) + "; ids must be unique and dense");
    }
    if (!expected.class_universe.empty() && r.label >= expected.class_universe.size()) {
      sample(r.sample_id, "label", std::to_string(r.label) + " outside the dataset's " +
                                       std::to_string(expected.class_universe.size()) + " classes");
    }
    if (r.features.size() != b.scale_dims.size()) {
      sample(r.sample_id, "features", std::to_string(r.features.size()) + " scales, header has " +
                                          std::to_string(b.scale_dims.size()));
    } else {
      for (std::size_t l = 0; l < r.features.size(); ++l) {
        const std::string field = "features[" + std::to_string(l + 1) + "]";
        if (r.features[l].size() != b.scale_dims[l]) {
          sample(r.sample_id, field, "length " + std::to_string(r.features[l].size()) + ", header says " +
                                         std::to_string(b.scale_dims[l]));
        } else if (!finite(r.features[l])) {
          sample(r.sample_id, field, "non-finite value");
        }
      }
    }
    if (r.embedding.size() != b.embed_dim) {
      sample(r.sample_id, "embedding", "length " + std::to_string(r.embedding.size()) + ", header says " +
                                           std::to_string(b.embed_dim));
    } else if (!finite(r.embedding)) {
      sample(r.sample_id, "embedding", "non-finite value");
    }
    if (r.vocab_scores.size() != b.class_names.size()) {
      sample(r.sample_id, "vocab_scores", "length " + std::to_string(r.vocab_scores.size()) + ", vocabulary has " +
                                              std::to_string(b.class_names.size()));
    } else if (!finite(r.vocab_scores)) {
      sample(r.sample_id, "vocab_scores", "non-finite value");
    }
  }
  return issues;
}

VocabularyMap::VocabularyMap(std::span<const std::string> dataset_classes, std::span<const std::string> vocabulary)
    : names_(dataset_classes.begin(), dataset_classes.end()) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < vocabulary.size(); ++i) pos.emplace(vocabulary[i], i);
  for (const auto& n : names_) {
    auto it = pos.find(n);
    index_.push_back(it == pos.end() ? std::nullopt : std::optional<std::size_t>(it->second));
  }
}

std::size_t VocabularyMap::vocab_index(std::uint32_t label) const {
  if (label >= index_.size()) throw VocabularyError("class " + std::to_string(label) + " is not a dataset class");
  if (!index_[label]) {
    throw VocabularyError("class " + std::to_string(label) + " ('" + names_[label] +
                          "') is absent from the teacher vocabulary");
  }
  return *index_[label];
}

TeacherBundle synthetic_teacher(const DatasetIndex& dataset, double quality, const SyntheticTeacherConfig& cfg) {
  if (!(quality >= 0.0 && quality <= 1.0)) throw UsageError("synthetic_teacher: quality must lie in [0, 1]");
  const std::size_t classes = dataset.num_classes();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  TeacherBundle b;
  for (std::size_t d : cfg.scale_dims) b.scale_dims.push_back(static_cast<std::uint32_t>(d));
  b.embed_dim = static_cast<std::uint32_t>(cfg.embed_dim);
  b.class_names = dataset.class_names;

  // centroids[c][l] for l < L is a feature centroid; index L holds the embedding centroid.
  const std::size_t L = cfg.scale_dims.size();
  std::vector<std::vector<std::vector<double>>> centroids(classes);
  for (auto& per_class : centroids) {
    for (std::size_t l = 0; l <= L; ++l) {
      std::vector<double> c(l < L ? cfg.scale_dims[l] : cfg.embed_dim);
      for (double& v : c) v = normal(rng);
      per_class.push_back(std::move(c));
    }
  }
  const double noise_scale = 1.0 - quality;
  for (const auto& s : dataset.samples) {
    TeacherRecord r;
    r.sample_id = s.id;
    r.label = s.label;
    for (std::size_t l = 0; l <= L; ++l) {
      const auto& centroid = centroids[s.label][l];
      std::vector<float> v(centroid.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(centroid[k] + noise_scale * normal(rng));
      if (l < L) {
        r.features.push_back(std::move(v));
      } else {
        r.embedding = std::move(v);
      }
    }
    r.vocab_scores.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      const double truth = c == s.label ? cfg.margin : 0.0;
      r.vocab_scores[c] = static_cast<float>(quality * truth + noise_scale * cfg.margin * normal(rng));
    }
    b.records.push_back(std::move(r));
  }
  return b;
}

double teacher_accuracy(const TeacherBundle& bundle, const VocabularyMap& vocab) {
  if (bundle.records.empty()) throw UsageError("teacher_accuracy: empty bundle");
  std::size_t correct = 0;
  for (const auto& r : bundle.records) {
    const auto& s = r.vocab_scores;
    const auto best = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
    if (best == vocab.vocab_index(r.label)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(bundle.records.size());
}

}  // namespace bfscl
