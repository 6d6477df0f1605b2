// bfscl: run experiments, build synthetic teachers, check bundles, render reports.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bfscl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Few-shot continual learning with a frozen big-model teacher"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
  app.add_option("--seed", seed, "override the experiment / generator seed");
  app.add_option("--out", out, "output directory or file");
  app.add_flag("--quiet", quiet, "suppress progress output");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a full experiment from a config file");
  run->add_option("config", config_path, "config file")->required();

  bfscl::cli::GenTeacherOptions teacher;
  auto* gen_teacher = app.add_subcommand("gen-teacher", "write a synthetic teacher bundle for a dataset");
  gen_teacher->add_option("--dataset", teacher.dataset, "dataset directory")->required();
  gen_teacher->add_option("--quality", teacher.quality, "teacher quality in [0, 1]")->required();
  gen_teacher->add_option("--scale-dims", teacher.scale_dims, "comma separated per-scale feature dims");
  gen_teacher->add_option("--embed-dim", teacher.embed_dim, "embedding dim");
  gen_teacher->add_option("--margin", teacher.margin, "vocabulary score margin");

  std::string bundle_path;
  auto* validate = app.add_subcommand("validate-bundle", "check a teacher bundle against a config");
  validate->add_option("bundle", bundle_path, "bundle file")->required();
  validate->add_option("config", config_path, "config file")->required();

  std::string run_dir;
  std::optional<std::string> reference;
  auto* report = app.add_subcommand("report", "print the session table and write curve.csv");
  report->add_option("run_dir", run_dir, "run directory")->required();
  report->add_option("--reference", reference, "run directory whose final accuracy is the DeltaFinal baseline");

  bfscl::cli::GenBlobsOptions blobs;
  auto* gen_blobs = app.add_subcommand("gen-blobs", "write a synthetic Gaussian-blobs dataset");
  gen_blobs->add_option("--classes", blobs.classes);
  gen_blobs->add_option("--train-per-class", blobs.train_per_class);
  gen_blobs->add_option("--test-per-class", blobs.test_per_class);
  gen_blobs->add_option("--size", blobs.size, "image height and width");
  gen_blobs->add_option("--channels", blobs.channels);
  gen_blobs->add_option("--noise", blobs.noise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  bfscl::cli::Streams io{std::cout, std::cerr, quiet};
  if (*run) return bfscl::cli::cmd_run(config_path, {seed, out}, io);
  if (*gen_teacher) {
    teacher.seed = seed.value_or(0);
    teacher.out = out.value_or("");
    return bfscl::cli::cmd_gen_teacher(teacher, io);
  }
  if (*validate) return bfscl::cli::cmd_validate_bundle(bundle_path, config_path, io);
  if (*report) return bfscl::cli::cmd_report(run_dir, reference, io);
  if (*gen_blobs) {
    blobs.seed = seed.value_or(0);
    blobs.out = out.value_or("");
    return bfscl::cli::cmd_gen_blobs(blobs, io);
  }
  return 1;
}
