#pragma once

// Frozen teacher outputs, one record per dataset sample.
//
// File layout (all little-endian):
//   "BFTB" | version u32 | n_samples u64 | n_scales u32 |
//   per-scale dim u32 x n_scales | embed_dim u32 | vocab_size u32 |
//   manifest_len u32 + newline-separated class names |
//   records [sample_id u64 | label u32 | f32 features per scale |
//            f32 embedding | f32 vocab_scores]
// Scores are stored pre-softmax.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfscl/dataset.hpp"
#include "bfscl/tensor.hpp"

namespace bfscl {

inline constexpr std::uint32_t kBundleVersion = 1;

struct TeacherRecord {
  std::uint64_t sample_id = 0;
  std::uint32_t label = 0;
  std::vector<std::vector<float>> features;  // one vector per scale
  std::vector<float> embedding;
  std::vector<float> vocab_scores;
};

struct TeacherBundle {
  std::uint32_t version = kBundleVersion;
  std::vector<std::uint32_t> scale_dims;
  std::uint32_t embed_dim = 0;
  std::vector<std::string> class_names;  // vocabulary order
  std::vector<TeacherRecord> records;    // records[i].sample_id == i

  std::size_t num_scales() const { return scale_dims.size(); }
  std::size_t vocab_size() const { return class_names.size(); }
  // Throws BundleError naming the sample when no record exists for it.
  const TeacherRecord& record(std::uint64_t sample_id) const;
};

std::string encode_bundle(const TeacherBundle& bundle);
// Parses and runs the self-consistency checks of validate_bundle; throws
// FormatError / CorruptionError / BundleError. Never returns a partial bundle.
TeacherBundle decode_bundle(std::string_view bytes);
void write_bundle(const TeacherBundle& bundle, const std::string& path);
TeacherBundle load_bundle(const std::string& path);

/// What a consumer expects of a bundle. Unset fields are not checked.
struct BundleExpectations {
  std::optional<std::size_t> n_scales;
  std::vector<std::size_t> scale_dims;  // empty: unchecked
  std::optional<std::size_t> embed_dim;
  std::vector<std::string> class_universe;  // dataset class names
  std::optional<std::size_t> n_samples;
};

struct BundleIssue {
  std::optional<std::uint64_t> sample_id;
  std::string field;
  std::string message;
  std::string to_string() const;
};

std::vector<BundleIssue> validate_bundle(const TeacherBundle& bundle, const BundleExpectations& expected = {});

/// Maps dataset labels to vocabulary positions by class name.
class VocabularyMap {
 public:
  VocabularyMap() = default;
  VocabularyMap(std::span<const std::string> dataset_classes, std::span<const std::string> vocabulary);
  // Throws VocabularyError naming the class when it is absent.
  std::size_t vocab_index(std::uint32_t label) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::optional<std::size_t>> index_;
};

struct SyntheticTeacherConfig {
  std::vector<std::size_t> scale_dims{16, 16, 16};
  std::size_t embed_dim = 32;
  double margin = 10.0;
  std::uint64_t seed = 0;
};

// Test double for a frozen big model. For quality q:
//   vocab_scores = q * margin * onehot(label) + (1 - q) * margin * N(0, 1)
//   features/embedding = class centroid + (1 - q) * N(0, 1)
TeacherBundle synthetic_teacher(const DatasetIndex& dataset, double quality, const SyntheticTeacherConfig& cfg);

// Top-1 accuracy (percent) of argmax vocab_scores over the full vocabulary,
// matched against each record's label through `vocab`.
double teacher_accuracy(const TeacherBundle& bundle, const VocabularyMap& vocab);

}  // namespace bfscl
