#pragma once

// Subcommand bodies of the `bfscl` tool. Each returns the process exit code:
// 0 success, 1 usage/config, 2 data/bundle, 3 runtime.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace bfscl::cli {

struct Streams {
  std::ostream& out;
  std::ostream& err;
  bool quiet = false;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

int cmd_run(const std::string& config_path, const RunOverrides& overrides, Streams io);

struct GenTeacherOptions {
  std::string dataset;
  double quality = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string scale_dims = "16,32,64";
  std::size_t embed_dim = 64;
  double margin = 10.0;
};
int cmd_gen_teacher(const GenTeacherOptions& opts, Streams io);

int cmd_validate_bundle(const std::string& bundle_path, const std::string& config_path, Streams io);

// `reference_dir`, when given, supplies the final accuracy for DeltaFinal;
// otherwise reference_final from the run's config.txt is used if present.
int cmd_report(const std::string& run_dir, const std::optional<std::string>& reference_dir, Streams io);

struct GenBlobsOptions {
  std::string out;
  std::size_t classes = 10;
  std::size_t train_per_class = 30;
  std::size_t test_per_class = 20;
  std::size_t size = 8;
  std::size_t channels = 3;
  double noise = 1.0;
  std::uint64_t seed = 0;
};
int cmd_gen_blobs(const GenBlobsOptions& opts, Streams io);

}  // namespace bfscl::cli
