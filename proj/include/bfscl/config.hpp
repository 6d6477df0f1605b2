#pragma once

// Flat `key = value` experiment configuration. Lines starting with '#' are
// comments; list values are comma separated. See README.md for every key.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bfscl/protocol.hpp"

namespace bfscl {

struct ExperimentConfig {
  std::string dataset;
  std::string bundle;
  std::string out = "run";
  std::uint64_t seed = 0;

  SplitConfig split;

  std::vector<std::size_t> channels{16, 32, 64};
  std::size_t kernel = 3;
  std::size_t embed_dim = 64;
  std::size_t d_common = 64;
  std::size_t mine_channels = 8;
  double clamp = 20.0;
  std::vector<std::size_t> alpha_hidden{128, 64};

  TrainConfig train;
  std::size_t eval_batch = 64;

  // Optional teacher shape expectations, checked by validate-bundle.
  std::vector<std::size_t> teacher_scale_dims;
  std::optional<std::size_t> teacher_embed_dim;

  std::optional<double> reference_final;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);

// Semantic checks, including that referenced paths exist. Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

}  // namespace bfscl
