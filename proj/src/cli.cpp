#include "bfscl/cli.hpp"

#include <chrono>
#include <filesystem>
#include <sstream>

#include "bfscl/binary_io.hpp"
#include "bfscl/config.hpp"
#include "bfscl/error.hpp"
#include "bfscl/experiment.hpp"

namespace bfscl::cli {

namespace fs = std::filesystem;

namespace {

int fail(Streams io, const std::exception& e) {
  io.err << "error: " << e.what() << '\n';
  if (const auto* be = dynamic_cast<const Error*>(&e)) return be->exit_code();
  return 3;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v == 0) throw UsageError("invalid dimension list '" + text + "'");
    dims.push_back(v);
  }
  if (dims.empty()) throw UsageError("empty dimension list");
  return dims;
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOverrides& overrides, Streams io) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (overrides.seed) {
      cfg.seed = *overrides.seed;
      cfg.split.seed = cfg.seed;
      cfg.train.seed = cfg.seed;
    }
    if (overrides.out) cfg.out = *overrides.out;
    validate_config(cfg);
  } catch (const std::exception& e) {
    return fail(io, e);
  }

  const fs::path out_dir(cfg.out);
  try {
    fs::create_directories(out_dir);
    fs::remove(out_dir / "ERROR");
    io::write_file((out_dir / "config.txt").string(), to_config_text(cfg));
    io::write_file((out_dir / "seed.txt").string(), std::to_string(cfg.seed) + "\n");
  } catch (const std::exception& e) {
    return fail(io, e);
  }

  try {
    const auto start = std::chrono::steady_clock::now();
    const Dataset dataset = load_dataset(cfg.dataset);
    std::optional<TeacherBundle> bundle;
    if (!cfg.bundle.empty()) bundle = load_bundle(cfg.bundle);
    auto progress = [&](const std::string& line) {
      if (!io.quiet) io.out << line << '\n';
    };
    const ExperimentResult result = run_experiment(cfg, dataset, bundle ? &*bundle : nullptr, progress);
    write_run_dir(cfg.out, cfg, result);
    if (!io.quiet) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      io.out << "Avg " << format_fixed(result.metrics.avg, 2) << "  KR " << format_fixed(result.metrics.kr, 2)
             << "  (" << format_fixed(secs, 1) << " s) -> " << cfg.out << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    try {
      io::write_file((out_dir / "ERROR").string(), std::string(e.what()) + "\n");
    } catch (const std::exception&) {
    }
    return fail(io, e);
  }
}

int cmd_gen_teacher(const GenTeacherOptions& opts, Streams io) {
  try {
    if (!(opts.quality >= 0.0 && opts.quality <= 1.0)) {
      throw UsageError("quality must be in [0, 1], got " + std::to_string(opts.quality));
    }
    if (opts.out.empty()) throw UsageError("gen-teacher: --out is required");
    SyntheticTeacherConfig tc;
    tc.scale_dims = parse_dims(opts.scale_dims);
    tc.embed_dim = opts.embed_dim;
    tc.margin = opts.margin;
    tc.seed = opts.seed;
    const DatasetIndex index = load_dataset_index(opts.dataset);
    const TeacherBundle bundle = synthetic_teacher(index, opts.quality, tc);
    write_bundle(bundle, opts.out);
    if (!io.quiet) {
      const VocabularyMap vocab(index.class_names, bundle.class_names);
      io.out << "wrote " << bundle.records.size() << " records to " << opts.out << " (teacher accuracy "
             << format_fixed(teacher_accuracy(bundle, vocab), 2) << "%)\n";
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(io, e);
  }
}

int cmd_validate_bundle(const std::string& bundle_path, const std::string& config_path, Streams io) {
  ExperimentConfig cfg;
  BundleExpectations expect;
  try {
    cfg = load_config(config_path);
    expect.n_scales = cfg.channels.size();
    expect.scale_dims = cfg.teacher_scale_dims;
    expect.embed_dim = cfg.teacher_embed_dim;
    if (!cfg.dataset.empty()) {
      const DatasetIndex index = load_dataset_index(cfg.dataset);
      expect.class_universe = index.class_names;
      expect.n_samples = index.samples.size();
    }
  } catch (const std::exception& e) {
    return fail(io, e);
  }

  std::vector<std::string> lines;
  try {
    const TeacherBundle bundle = load_bundle(bundle_path);
    for (const auto& issue : validate_bundle(bundle, expect)) lines.push_back(issue.to_string());
  } catch (const std::exception& e) {
    std::stringstream ss(e.what());
    std::string line;
    while (std::getline(ss, line)) {
      if (line.find_first_not_of(' ') != std::string::npos) lines.push_back(line.substr(line.find_first_not_of(' ')));
    }
  }
  for (const auto& l : lines) io.out << l << '\n';
  return lines.empty() ? 0 : 1;
}

int cmd_report(const std::string& run_dir, const std::optional<std::string>& reference_dir, Streams io) {
  try {
    const fs::path root(run_dir);
    const auto rows = read_metrics_csv((root / "metrics.csv").string());
    std::optional<double> reference;
    if (reference_dir) {
      reference = read_metrics_csv((fs::path(*reference_dir) / "metrics.csv").string()).back().acc;
    } else if (fs::exists(root / "config.txt")) {
      reference = load_config((root / "config.txt").string()).reference_final;
    }
    std::vector<double> acc;
    for (const auto& r : rows) acc.push_back(r.acc);
    const MetricsReport m = compute_metrics(acc, reference);

    std::string curve = "session,acc\n";
    for (const auto& r : rows) curve += std::to_string(r.session) + "," + format_fixed(r.acc, 6) + "\n";
    io::write_file((root / "curve.csv").string(), curve);
    io.out << render_report(rows, m);
    return 0;
  } catch (const std::exception& e) {
    return fail(io, e);
  }
}

int cmd_gen_blobs(const GenBlobsOptions& opts, Streams io) {
  try {
    if (opts.out.empty()) throw UsageError("gen-blobs: --out is required");
    BlobsConfig bc;
    bc.classes = opts.classes;
    bc.train_per_class = opts.train_per_class;
    bc.test_per_class = opts.test_per_class;
    bc.height = bc.width = opts.size;
    bc.channels = opts.channels;
    bc.noise = opts.noise;
    bc.seed = opts.seed;
    const Dataset ds = make_blobs(bc);
    write_dataset(ds, opts.out);
    if (!io.quiet) io.out << "wrote " << ds.size() << " samples to " << opts.out << '\n';
    return 0;
  } catch (const std::exception& e) {
    return fail(io, e);
  }
}

}  // namespace bfscl::cli
