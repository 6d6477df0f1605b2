#pragma once

// Small synthetic setups shared by the unit and acceptance tests.

#include <string>

#include "bfscl/experiment.hpp"

namespace bfscl::testing {

inline DatasetIndex label_index(std::size_t classes, std::size_t train_per_class, std::size_t test_per_class) {
  DatasetIndex idx;
  for (std::size_t c = 0; c < classes; ++c) idx.class_names.push_back("class" + std::to_string(c));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < train_per_class + test_per_class; ++i) {
      idx.samples.push_back({idx.samples.size(), static_cast<std::uint32_t>(c), i >= train_per_class});
    }
  }
  return idx;
}

// Blobs dataset, a synthetic teacher for it and an experiment config sized
// for seconds-scale runs.
struct Desk {
  Dataset dataset;
  TeacherBundle bundle;
  ExperimentConfig cfg;
};

inline Desk make_desk(std::uint64_t seed = 1, double noise = 2.0, double quality = 0.9) {
  Desk d;
  BlobsConfig bc;
  bc.noise = noise;
  bc.seed = seed;
  d.dataset = make_blobs(bc);
  SyntheticTeacherConfig tc;
  tc.scale_dims = {8, 8, 8};
  tc.embed_dim = 8;
  tc.seed = seed;
  d.bundle = synthetic_teacher(d.dataset.index, quality, tc);

  ExperimentConfig& c = d.cfg;
  c.seed = seed;
  c.split = {.base_classes = 4, .n_way = 2, .k_shot = 5, .n_incremental = 3, .seed = seed};
  c.channels = {8, 16, 16};
  c.embed_dim = 16;
  c.d_common = 16;
  c.mine_channels = 4;
  c.alpha_hidden = {32, 16};
  c.train.epochs_base = 60;
  c.train.epochs_incremental = 10;
  c.train.seed = seed;
  return d;
}

}  // namespace bfscl::testing
