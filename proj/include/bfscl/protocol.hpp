#pragma once

// Few-shot continual learning protocol: disjoint session splits, the
// per-session training loop, seen-class evaluation and summary metrics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfscl/bundle.hpp"
#include "bfscl/dataset.hpp"
#include "bfscl/decision.hpp"
#include "bfscl/models.hpp"

namespace bfscl {

struct SplitConfig {
  std::size_t base_classes = 60;
  std::size_t n_way = 5;
  std::size_t k_shot = 5;
  std::size_t n_incremental = 8;
  std::uint64_t seed = 0;
};

struct Session {
  std::vector<std::uint32_t> classes;  // Y_t
  std::vector<std::uint64_t> train;    // X_t
};

struct SessionStream {
  SplitConfig config;
  std::vector<Session> sessions;          // t = 1..T
  std::vector<std::uint32_t> universe;    // union of all Y_t, in session order
  std::vector<std::uint64_t> test;        // Z, only labels from the universe

  std::size_t num_sessions() const { return sessions.size(); }
  // Union of Y_1..Y_t (t is 1-based), in registration order.
  std::vector<std::uint32_t> seen_classes(std::size_t t) const;
};

/// Seeded class shuffle then prefix-take: the first `base_classes` classes
/// form session 1 with all their training samples; each following session
/// takes the next `n_way` classes with `k_shot` shuffled training samples each.
SessionStream build_sessions(const DatasetIndex& dataset, const SplitConfig& cfg);

struct TrainConfig {
  std::size_t epochs_base = 100;
  std::size_t epochs_incremental = 20;
  std::size_t batch_size = 25;
  double lr = 1e-3;
  double incremental_lr_scale = 0.1;
  double lambda_bet = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  bool enable_bet = true;
  bool enable_iad = true;
  std::uint64_t seed = 0;
};

struct TrainState {
  StudentModel student;
  MineDiscriminator mine;
  AlphaNet alpha;
};

/// Per-step loss decomposition: total = decision + lambda_bet * bet.
struct StepLoss {
  std::size_t session = 0;
  std::size_t step = 0;
  double total = 0.0;
  double decision = 0.0;
  double bet = 0.0;
};

struct TeacherView {
  const TeacherBundle* bundle = nullptr;
  VocabularyMap vocab;
};

/// Trains on X_t only. The classifier must already hold a row for every
/// class of the session. Runs epochs * ceil(|X_t| / batch) Adam steps on
/// decision_loss + lambda_bet * bet_loss. `session_index` is 1-based.
std::vector<StepLoss> run_session(TrainState& state, std::size_t session_index, const Session& session,
                                  const Dataset& dataset, const TeacherView& teacher, const TrainConfig& cfg);

struct EvalResult {
  double accuracy = 0.0;  // percent
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::uint32_t> classes;            // confusion axis order
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

// Scores predictions (indices into `seen`) against labels; only samples whose
// label is in `seen` are counted.
EvalResult score_predictions(std::span<const std::uint32_t> labels, std::span<const std::size_t> predictions,
                             std::span<const std::uint32_t> seen);

struct EvalOptions {
  bool enable_iad = true;
  std::optional<double> forced_alpha{};
  std::size_t batch_size = 64;
};

/// Accuracy of argmax of the fused decision over test samples whose label
/// is in `seen`. Throws ProtocolError when no test sample is eligible.
EvalResult evaluate(const TrainState& state, const Dataset& dataset, std::span<const std::uint64_t> test,
                    std::span<const std::uint32_t> seen, const TeacherView& teacher, const EvalOptions& options);

struct MetricsReport {
  std::vector<double> acc;  // Acc_1..Acc_T, percent
  double avg = 0.0;
  double kr = 0.0;
  std::optional<double> delta_final;
  std::vector<std::vector<std::vector<std::size_t>>> confusion;  // per session
};

MetricsReport compute_metrics(std::span<const double> acc, std::optional<double> reference_final = std::nullopt);

}  // namespace bfscl
