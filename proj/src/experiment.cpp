#include "bfscl/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bfscl/binary_io.hpp"
#include "bfscl/checkpoint.hpp"
#include "bfscl/error.hpp"

namespace bfscl {

namespace fs = std::filesystem;

TrainState make_state(const ExperimentConfig& cfg, const Dataset& dataset, const TeacherBundle* bundle) {
  StudentConfig sc;
  sc.height = dataset.height;
  sc.width = dataset.width;
  sc.in_channels = dataset.channels;
  sc.channels = cfg.channels;
  sc.kernel = cfg.kernel;
  sc.embed_dim = cfg.embed_dim;
  sc.seed = derive_seed(cfg.seed, 11);

  MineConfig mc;
  mc.student_dims = cfg.channels;
  if (bundle) {
    mc.teacher_dims.assign(bundle->scale_dims.begin(), bundle->scale_dims.end());
  } else {
    mc.teacher_dims = cfg.channels;
  }
  mc.d_common = cfg.d_common;
  mc.channels = cfg.mine_channels;
  mc.clamp = cfg.clamp;
  mc.seed = derive_seed(cfg.seed, 12);

  AlphaConfig ac;
  ac.student_dim = cfg.embed_dim;
  ac.teacher_dim = bundle ? bundle->embed_dim : cfg.embed_dim;
  ac.hidden = cfg.alpha_hidden;
  ac.seed = derive_seed(cfg.seed, 13);

  return TrainState{StudentModel(sc), MineDiscriminator(mc), AlphaNet(ac)};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset, const TeacherBundle* bundle,
                                const std::function<void(const std::string&)>& progress) {
  TeacherView teacher;
  if (bundle) {
    BundleExpectations expect;
    expect.n_scales = cfg.channels.size();
    expect.class_universe = dataset.index.class_names;
    expect.n_samples = dataset.size();
    const auto issues = validate_bundle(*bundle, expect);
    if (!issues.empty()) {
      std::string msg = "bundle does not match the experiment:";
      for (const auto& i : issues) msg += "\n  " + i.to_string();
      throw BundleError(msg);
    }
    teacher.bundle = bundle;
    teacher.vocab = VocabularyMap(dataset.index.class_names, bundle->class_names);
  } else if (cfg.train.enable_bet || cfg.train.enable_iad) {
    throw ConfigError("run: a teacher bundle is required when enable_bet or enable_iad is true");
  }

  ExperimentResult result{build_sessions(dataset.index, cfg.split), {}, {}, {}, make_state(cfg, dataset, bundle)};
  EvalOptions eval_opts{cfg.train.enable_iad, std::nullopt, cfg.eval_batch};
  std::vector<double> acc;
  for (std::size_t t = 1; t <= result.stream.num_sessions(); ++t) {
    const Session& session = result.stream.sessions[t - 1];
    result.state.student.expand_classifier(session.classes);
    auto losses = run_session(result.state, t, session, dataset, teacher, cfg.train);
    result.losses.insert(result.losses.end(), losses.begin(), losses.end());
    const auto seen = result.state.student.class_ids();
    result.evals.push_back(evaluate(result.state, dataset, result.stream.test, seen, teacher, eval_opts));
    acc.push_back(result.evals.back().accuracy);
    if (progress) {
      progress("session " + std::to_string(t) + "/" + std::to_string(result.stream.num_sessions()) + ": acc " +
               format_fixed(acc.back(), 2) + "% over " + std::to_string(seen.size()) + " classes");
    }
  }
  result.metrics = compute_metrics(acc, cfg.reference_final);
  for (const auto& e : result.evals) result.metrics.confusion.push_back(e.confusion);
  return result;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

namespace {
std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string metrics_csv(const MetricsReport& m, const std::vector<std::size_t>& seen_counts) {
  std::string out = "session,acc,seen_classes\n";
  for (std::size_t t = 0; t < m.acc.size(); ++t) {
    out += std::to_string(t + 1) + "," + format_fixed(m.acc[t], 6) + "," +
           std::to_string(t < seen_counts.size() ? seen_counts[t] : 0) + "\n";
  }
  return out;
}

std::string summary_csv(const MetricsReport& m) {
  return "avg,kr,delta_final\n" + format_fixed(m.avg, 6) + "," + format_fixed(m.kr, 6) + "," +
         (m.delta_final ? format_fixed(*m.delta_final, 6) : std::string()) + "\n";
}

std::string confusion_csv(const EvalResult& e) {
  std::string out;
  for (std::size_t i = 0; i < e.classes.size(); ++i) out += (i ? "," : "") + std::to_string(e.classes[i]);
  out += "\n";
  for (const auto& row : e.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + std::to_string(row[j]);
    out += "\n";
  }
  return out;
}

std::string losses_csv(const std::vector<StepLoss>& losses) {
  std::string out = "session,step,total,decision,bet\n";
  for (const auto& l : losses) {
    out += std::to_string(l.session) + "," + std::to_string(l.step) + "," + exact(l.total) + "," + exact(l.decision) +
           "," + exact(l.bet) + "\n";
  }
  return out;
}

void write_run_dir(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& r) {
  fs::create_directories(dir);
  const fs::path root(dir);
  io::write_file((root / "config.txt").string(), to_config_text(cfg));
  io::write_file((root / "seed.txt").string(), std::to_string(cfg.seed) + "\n");

  std::ostringstream manifest;
  manifest << "split = seeded class shuffle, prefix take\n";
  for (std::size_t t = 0; t < r.stream.sessions.size(); ++t) {
    const Session& s = r.stream.sessions[t];
    manifest << "session " << (t + 1) << ": " << s.train.size() << " samples, classes";
    for (std::uint32_t c : s.classes) manifest << ' ' << c;
    manifest << '\n';
  }
  manifest << "test samples: " << r.stream.test.size() << '\n';
  io::write_file((root / "manifest.txt").string(), manifest.str());

  std::vector<std::size_t> seen_counts;
  for (const auto& e : r.evals) seen_counts.push_back(e.classes.size());
  io::write_file((root / "metrics.csv").string(), metrics_csv(r.metrics, seen_counts));
  io::write_file((root / "summary.csv").string(), summary_csv(r.metrics));
  for (std::size_t t = 0; t < r.evals.size(); ++t) {
    io::write_file((root / ("confusion_t" + std::to_string(t + 1) + ".csv")).string(), confusion_csv(r.evals[t]));
  }
  io::write_file((root / "losses.csv").string(), losses_csv(r.losses));

  std::vector<NamedTensor> entries;
  auto add = [&](const std::vector<const Parameter*>& ps) {
    for (const Parameter* p : ps) entries.push_back({p->name(), p->tensor()});
  };
  add(r.state.student.parameters());
  add(r.state.mine.parameters());
  add(r.state.alpha.parameters());
  const auto& ids = r.state.student.class_ids();
  if (!ids.empty()) entries.push_back({"student.class_ids", Tensor({ids.size()}, std::vector<double>(ids.begin(), ids.end()))});
  io::write_file((root / "model.bfsm").string(), encode_checkpoint(entries));
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("session,acc", 0) != 0) throw FormatError(path + ": missing header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',')) {
      throw FormatError(path + ": malformed row '" + line + "'");
    }
    try {
      rows.push_back({std::stoul(a), std::stod(b), std::stoul(c)});
    } catch (const std::exception&) {
      throw FormatError(path + ": malformed row '" + line + "'");
    }
  }
  if (rows.empty()) throw FormatError(path + ": no sessions");
  return rows;
}

std::string render_report(const std::vector<MetricsRow>& rows, const MetricsReport& m) {
  std::ostringstream os;
  os << "session  acc(%)   seen\n";
  for (const auto& r : rows) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%-8zu %-8s %zu\n", r.session, format_fixed(r.acc, 2).c_str(), r.seen);
    os << buf;
  }
  os << "Avg        " << format_fixed(m.avg, 2) << '\n';
  os << "KR         " << format_fixed(m.kr, 2) << '\n';
  os << "DeltaFinal " << (m.delta_final ? format_fixed(*m.delta_final, 2) : std::string("-")) << '\n';
  return os.str();
}

}  // namespace bfscl
