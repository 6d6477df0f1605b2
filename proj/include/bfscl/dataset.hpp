#pragma once

// Labelled image datasets.
//
// On disk a dataset is a directory holding `index.bin` and one raw
// little-endian f32 file per sample under `images/<sample_id>.f32`
// (H*W*C values, row-major HWC). `index.bin` layout:
//   "BFDS" | version u32 | n_samples u64 | height u32 | width u32 |
//   channels u32 | n_classes u32 | manifest_len u32 + newline-separated
//   class names | records [sample_id u64 | label u32 | split u8]
// where split is 0 for train and 1 for test.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfscl/tensor.hpp"

namespace bfscl {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct SampleMeta {
  std::uint64_t id = 0;
  std::uint32_t label = 0;
  bool test = false;
};

/// Labels and splits only; sample ids are dense, `samples[i].id == i`.
struct DatasetIndex {
  std::vector<std::string> class_names;
  std::vector<SampleMeta> samples;

  std::size_t num_classes() const { return class_names.size(); }
};

struct Dataset {
  std::size_t height = 0, width = 0, channels = 0;
  DatasetIndex index;
  std::vector<std::vector<float>> pixels;  // by sample id

  std::size_t sample_size() const { return height * width * channels; }
  std::size_t size() const { return index.samples.size(); }
  // Stacks samples into [B,H,W,C].
  Tensor batch(std::span<const std::uint64_t> ids) const;
};

struct BlobsConfig {
  std::size_t classes = 10;
  std::size_t train_per_class = 30;
  std::size_t test_per_class = 20;
  std::size_t height = 8, width = 8, channels = 3;
  double noise = 1.0;  // per-pixel std around the class prototype
  std::uint64_t seed = 0;
};

// Gaussian blobs: each class has a random prototype image; samples are the
// prototype plus isotropic noise.
Dataset make_blobs(const BlobsConfig& cfg);

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);
// Reads index.bin only.
DatasetIndex load_dataset_index(const std::string& dir);

// Joins / splits the newline-separated class-name manifest.
std::string join_manifest(std::span<const std::string> names);
std::vector<std::string> split_manifest(std::string_view text, std::size_t expected);

}  // namespace bfscl
