#pragma once

// End-to-end experiment: split, per-session training and evaluation,
// metrics, and the on-disk run directory.
//
// Run directory contents:
//   config.txt            canonical config snapshot
//   seed.txt              seed, verbatim
//   manifest.txt          split record (classes and sample counts per session)
//   metrics.csv           session,acc,seen_classes
//   summary.csv           avg,kr,delta_final
//   confusion_t<t>.csv    header row of class ids, then |seen| x |seen| counts
//   losses.csv            session,step,total,decision,bet
//   model.bfsm            final parameters
//   ERROR                 present only when the run failed

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bfscl/config.hpp"
#include "bfscl/protocol.hpp"

namespace bfscl {

struct ExperimentResult {
  SessionStream stream;
  std::vector<EvalResult> evals;
  MetricsReport metrics;
  std::vector<StepLoss> losses;
  TrainState state;
};

// Builds the three networks for a dataset/bundle pair.
TrainState make_state(const ExperimentConfig& cfg, const Dataset& dataset, const TeacherBundle* bundle);

// `progress` (optional) receives one line per finished session.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset, const TeacherBundle* bundle,
                                const std::function<void(const std::string&)>& progress = {});

void write_run_dir(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result);

std::string format_fixed(double v, int decimals);
std::string metrics_csv(const MetricsReport& m, const std::vector<std::size_t>& seen_counts);
std::string summary_csv(const MetricsReport& m);
std::string confusion_csv(const EvalResult& e);
std::string losses_csv(const std::vector<StepLoss>& losses);

struct MetricsRow {
  std::size_t session = 0;
  double acc = 0.0;
  std::size_t seen = 0;
};
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Session table plus Avg / KR / DeltaFinal, as printed by `report`.
std::string render_report(const std::vector<MetricsRow>& rows, const MetricsReport& m);

}  // namespace bfscl
