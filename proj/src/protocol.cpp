#include "bfscl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "bfscl/error.hpp"
#include "bfscl/transfer.hpp"

namespace bfscl {

std::vector<std::uint32_t> SessionStream::seen_classes(std::size_t t) const {
  if (t == 0 || t > sessions.size()) throw UsageError("seen_classes: session " + std::to_string(t) + " out of range");
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < t; ++i) out.insert(out.end(), sessions[i].classes.begin(), sessions[i].classes.end());
  return out;
}

SessionStream build_sessions(const DatasetIndex& dataset, const SplitConfig& cfg) {
  const std::size_t universe = dataset.num_classes();
  const std::size_t needed = cfg.base_classes + cfg.n_way * cfg.n_incremental;
  if (cfg.base_classes == 0) throw ProtocolError("build_sessions: at least one base class is required");
  if (cfg.n_incremental > 0 && (cfg.n_way == 0 || cfg.k_shot == 0)) {
    throw ProtocolError("build_sessions: incremental sessions need n_way > 0 and k_shot > 0");
  }
  if (needed > universe) {
    throw ProtocolError("build_sessions: split needs " + std::to_string(needed) + " classes (" +
                        std::to_string(cfg.base_classes) + " base + " + std::to_string(cfg.n_incremental) + " x " +
                        std::to_string(cfg.n_way) + "-way), dataset has " + std::to_string(universe));
  }

  std::vector<std::vector<std::uint64_t>> train_by_class(universe);
  for (const auto& s : dataset.samples) {
    if (s.label >= universe) throw ProtocolError("build_sessions: sample " + std::to_string(s.id) + " has unknown label");
    if (!s.test) train_by_class[s.label].push_back(s.id);
  }

  std::vector<std::uint32_t> order(universe);
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  Rng class_rng(derive_seed(cfg.seed, 1));
  std::shuffle(order.begin(), order.end(), class_rng);

  SessionStream stream;
  stream.config = cfg;
  Session base;
  base.classes.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.base_classes));
  for (std::uint32_t c : base.classes) {
    if (train_by_class[c].empty()) {
      throw ProtocolError("build_sessions: base class " + std::to_string(c) + " has no training samples");
    }
    base.train.insert(base.train.end(), train_by_class[c].begin(), train_by_class[c].end());
  }
  stream.sessions.push_back(std::move(base));

  std::size_t next = cfg.base_classes;
  for (std::size_t t = 0; t < cfg.n_incremental; ++t) {
    Session s;
    for (std::size_t i = 0; i < cfg.n_way; ++i) {
      const std::uint32_t c = order[next++];
      std::vector<std::uint64_t> pool = train_by_class[c];
      if (pool.size() < cfg.k_shot) {
        throw ProtocolError("build_sessions: class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                            " training samples, " + std::to_string(cfg.k_shot) + "-shot needs " +
                            std::to_string(cfg.k_shot));
      }
      Rng sample_rng(derive_seed(cfg.seed, 2, c));
      std::shuffle(pool.begin(), pool.end(), sample_rng);
      s.classes.push_back(c);
      s.train.insert(s.train.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cfg.k_shot));
    }
    stream.sessions.push_back(std::move(s));
  }

  stream.universe.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(needed));
  std::set<std::uint32_t> used(stream.universe.begin(), stream.universe.end());
  for (const auto& s : dataset.samples) {
    if (s.test && used.count(s.label)) stream.test.push_back(s.id);
  }
  return stream;
}

namespace {

std::vector<const TeacherRecord*> lookup(const TeacherView& teacher, std::span<const std::uint64_t> ids) {
  std::vector<const TeacherRecord*> out;
  out.reserve(ids.size());
  for (std::uint64_t id : ids) out.push_back(&teacher.bundle->record(id));
  return out;
}

}  // namespace

std::vector<StepLoss> run_session(TrainState& state, std::size_t session_index, const Session& session,
                                  const Dataset& dataset, const TeacherView& teacher, const TrainConfig& cfg) {
  if (session_index == 0) throw UsageError("run_session: sessions are 1-based");
  if (cfg.batch_size == 0) throw ConfigError("run_session: batch_size must be positive");
  const bool first = session_index == 1;
  const std::size_t epochs = first ? cfg.epochs_base : cfg.epochs_incremental;
  AdamConfig adam{first ? cfg.lr : cfg.lr * cfg.incremental_lr_scale, cfg.beta1, cfg.beta2, cfg.adam_eps};

  const std::vector<std::uint32_t> seen = state.student.class_ids();
  std::map<std::uint32_t, std::size_t> row_of;
  for (std::size_t i = 0; i < seen.size(); ++i) row_of[seen[i]] = i;
  for (std::uint32_t c : session.classes) {
    if (!row_of.count(c)) {
      throw ProtocolError("run_session: class " + std::to_string(c) + " has no classifier row; expand first");
    }
  }
  const bool needs_teacher = cfg.enable_bet || cfg.enable_iad;
  if (needs_teacher && teacher.bundle == nullptr) {
    throw ConfigError("run_session: a teacher bundle is required when BET or IAD is enabled");
  }

  std::vector<StepLoss> trace;
  std::size_t step = 0;
  std::vector<std::uint64_t> order = session.train;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    order = session.train;
    Rng shuffle_rng(derive_seed(cfg.seed, session_index, 0x5eed0000ULL + epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::uint64_t> ids(order.data() + start, stop - start);
      std::vector<std::size_t> targets;
      for (std::uint64_t id : ids) {
        const std::uint32_t label = dataset.index.samples.at(id).label;
        auto it = row_of.find(label);
        if (it == row_of.end()) {
          throw ProtocolError("run_session: sample " + std::to_string(id) + " has unseen label " + std::to_string(label));
        }
        targets.push_back(it->second);
      }
      std::vector<const TeacherRecord*> records;
      if (needs_teacher) records = lookup(teacher, ids);

      const StudentOutput out = state.student.forward(constant(dataset.batch(ids)));
      Var p = out.probabilities();
      if (cfg.enable_iad) {
        Var alpha = state.alpha.forward(out.embedding, constant(teacher_embeddings(records)));
        p = fuse(alpha, p, constant(teacher_distribution(records, seen, teacher.vocab)));
      }
      const Var decision = decision_loss(p, targets);

      StepLoss log{session_index, step, 0.0, decision.item(), 0.0};
      Var total = decision;
      const bool bet_active = cfg.enable_bet && ids.size() >= 2;
      if (bet_active) {
        std::vector<Tensor> feats;
        for (std::size_t l = 0; l < state.student.num_scales(); ++l) feats.push_back(teacher_features(records, l));
        const BetTerms bet = bet_terms(out, feats, state.mine,
                                       derive_seed(cfg.seed, session_index, 0xbe700000ULL + step));
        log.bet = bet.loss.item();
        total = ops::add(decision, ops::scale(bet.loss, cfg.lambda_bet));
      }
      log.total = total.item();
      backward(total);

      std::vector<Parameter*> params = state.student.parameters();
      if (cfg.enable_iad) {
        auto a = state.alpha.parameters();
        params.insert(params.end(), a.begin(), a.end());
      }
      if (bet_active) {
        auto m = state.mine.parameters();
        params.insert(params.end(), m.begin(), m.end());
      }
      adam_step(params, adam);
      trace.push_back(log);
      ++step;
    }
  }
  return trace;
}

EvalResult score_predictions(std::span<const std::uint32_t> labels, std::span<const std::size_t> predictions,
                             std::span<const std::uint32_t> seen) {
  if (labels.size() != predictions.size()) throw DimensionError("score_predictions: label/prediction count mismatch");
  std::map<std::uint32_t, std::size_t> pos;
  for (std::size_t i = 0; i < seen.size(); ++i) pos[seen[i]] = i;
  EvalResult r;
  r.classes.assign(seen.begin(), seen.end());
  r.confusion.assign(seen.size(), std::vector<std::size_t>(seen.size(), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = pos.find(labels[i]);
    if (it == pos.end()) continue;
    if (predictions[i] >= seen.size()) throw UsageError("score_predictions: prediction outside the seen classes");
    ++r.total;
    ++r.confusion[it->second][predictions[i]];
    if (predictions[i] == it->second) ++r.correct;
  }
  if (r.total == 0) throw ProtocolError("evaluate: no test samples belong to the seen classes");
  r.accuracy = 100.0 * static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

EvalResult evaluate(const TrainState& state, const Dataset& dataset, std::span<const std::uint64_t> test,
                    std::span<const std::uint32_t> seen, const TeacherView& teacher, const EvalOptions& options) {
  const std::vector<std::uint32_t>& registered = state.student.class_ids();
  if (!std::equal(seen.begin(), seen.end(), registered.begin(), registered.end())) {
    throw ProtocolError("evaluate: seen classes differ from the student's registered classes");
  }
  if (options.batch_size == 0) throw ConfigError("evaluate: batch_size must be positive");
  const std::set<std::uint32_t> seen_set(seen.begin(), seen.end());
  std::vector<std::uint64_t> eligible;
  for (std::uint64_t id : test) {
    if (seen_set.count(dataset.index.samples.at(id).label)) eligible.push_back(id);
  }
  if (eligible.empty()) throw ProtocolError("evaluate: no test samples belong to the seen classes");

  const bool student_only = !options.forced_alpha && !options.enable_iad;
  if (!student_only && teacher.bundle == nullptr) {
    throw ConfigError("evaluate: a teacher bundle is required for fused decisions");
  }
  DecideOptions decide_opts{options.enable_iad, options.forced_alpha};

  NoGradGuard guard;
  std::vector<std::size_t> predictions(eligible.size());
  std::vector<std::uint32_t> labels(eligible.size());
  for (std::size_t start = 0; start < eligible.size(); start += options.batch_size) {
    const std::size_t stop = std::min(eligible.size(), start + options.batch_size);
    const std::span<const std::uint64_t> ids(eligible.data() + start, stop - start);
    const StudentOutput out = state.student.forward(constant(dataset.batch(ids)));
    if (student_only) {
      const Tensor p = out.probabilities().value();
      const std::size_t c = seen.size();
      for (std::size_t b = 0; b < ids.size(); ++b) {
        predictions[start + b] = argmax(std::span<const double>(p.data).subspan(b * c, c));
      }
    } else {
      const auto records = lookup(teacher, ids);
      const auto decisions = decide_batch(out, records, state.alpha, seen, teacher.vocab, decide_opts);
      for (std::size_t b = 0; b < ids.size(); ++b) predictions[start + b] = argmax(decisions[b].p);
    }
    for (std::size_t b = 0; b < ids.size(); ++b) labels[start + b] = dataset.index.samples.at(ids[b]).label;
  }
  return score_predictions(labels, predictions, seen);
}

MetricsReport compute_metrics(std::span<const double> acc, std::optional<double> reference_final) {
  if (acc.empty()) throw UsageError("compute_metrics: no accuracies");
  for (double a : acc) {
    if (!(a >= 0.0 && a <= 100.0)) throw UsageError("compute_metrics: accuracy " + std::to_string(a) + " outside [0, 100]");
  }
  if (acc.front() == 0.0) throw UsageError("compute_metrics: KR undefined because Acc_1 is 0");
  MetricsReport r;
  r.acc.assign(acc.begin(), acc.end());
  double total = 0.0;
  for (double a : acc) total += a;
  r.avg = total / static_cast<double>(acc.size());
  r.kr = 100.0 * acc.back() / acc.front();
  if (reference_final) r.delta_final = acc.back() - *reference_final;
  return r;
}

}  // namespace bfscl
