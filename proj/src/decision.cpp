#include "bfscl/decision.hpp"

#include <algorithm>
#include <cmath>

#include "bfscl/error.hpp"

namespace bfscl {

std::vector<double> fuse(double alpha, std::span<const double> p_ctm, std::span<const double> p_bg) {
  if (p_ctm.size() != p_bg.size()) {
    throw DimensionError("fuse: length mismatch " + std::to_string(p_ctm.size()) + " vs " +
                         std::to_string(p_bg.size()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("fuse: alpha " + std::to_string(alpha) + " outside [0, 1]");
  std::vector<double> p(p_ctm.size());
  const double beta = -alpha + 1.0;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = alpha * p_ctm[i] + beta * p_bg[i];
  return p;
}

Var fuse(const Var& alpha, const Var& p_ctm, const Var& p_bg) {
  if (p_ctm.shape() != p_bg.shape()) {
    throw DimensionError("fuse: shape mismatch " + shape_to_string(p_ctm.shape()) + " vs " +
                         shape_to_string(p_bg.shape()));
  }
  for (double a : alpha.value().data) {
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError("fuse: alpha " + std::to_string(a) + " outside [0, 1]");
  }
  Var beta = ops::add_scalar(ops::scale(alpha, -1.0), 1.0);
  return ops::add(ops::scale_rows(p_ctm, alpha), ops::scale_rows(p_bg, beta));
}

Var decision_loss(const Var& p, std::span<const std::size_t> targets) {
  const Shape& s = p.shape();
  if (s.size() != 2) throw DimensionError("decision_loss: expected [B,C], got " + shape_to_string(s));
  for (std::size_t y : targets) {
    if (y >= s[1]) {
      throw UsageError("decision_loss: class index " + std::to_string(y) + " out of range for " +
                       std::to_string(s[1]) + " classes");
    }
  }
  Var picked = ops::pick(p, targets);
  return ops::scale(ops::mean(ops::log(ops::clamp(picked, kProbabilityFloor, 1.0))), -1.0);
}

std::vector<double> teacher_distribution(const TeacherRecord& record, std::span<const std::uint32_t> seen,
                                         const VocabularyMap& vocab) {
  std::vector<double> scores(seen.size());
  for (std::size_t i = 0; i < seen.size(); ++i) {
    const std::size_t v = vocab.vocab_index(seen[i]);
    if (v >= record.vocab_scores.size()) {
      throw VocabularyError("class " + std::to_string(seen[i]) + " has no score in the record of sample " +
                            std::to_string(record.sample_id));
    }
    scores[i] = record.vocab_scores[v];
  }
  NoGradGuard guard;
  return ops::stable_softmax(constant(Tensor::vector(std::move(scores)))).value().data;
}

Tensor teacher_distribution(std::span<const TeacherRecord* const> records, std::span<const std::uint32_t> seen,
                            const VocabularyMap& vocab) {
  Tensor out({records.size(), seen.size()});
  for (std::size_t b = 0; b < records.size(); ++b) {
    const auto p = teacher_distribution(*records[b], seen, vocab);
    std::copy(p.begin(), p.end(), out.data.begin() + static_cast<std::ptrdiff_t>(b * seen.size()));
  }
  return out;
}

Tensor teacher_embeddings(std::span<const TeacherRecord* const> records) {
  if (records.empty()) throw UsageError("teacher_embeddings: empty batch");
  const std::size_t d = records.front()->embedding.size();
  Tensor out({records.size(), d});
  for (std::size_t b = 0; b < records.size(); ++b) {
    if (records[b]->embedding.size() != d) throw DimensionError("teacher_embeddings: ragged embeddings");
    std::copy(records[b]->embedding.begin(), records[b]->embedding.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  return out;
}

Tensor teacher_features(std::span<const TeacherRecord* const> records, std::size_t scale) {
  if (records.empty()) throw UsageError("teacher_features: empty batch");
  if (scale >= records.front()->features.size()) {
    throw ConfigError("teacher_features: scale " + std::to_string(scale + 1) + " missing from teacher records");
  }
  const std::size_t d = records.front()->features[scale].size();
  Tensor out({records.size(), d});
  for (std::size_t b = 0; b < records.size(); ++b) {
    const auto& f = records[b]->features.at(scale);
    if (f.size() != d) throw DimensionError("teacher_features: ragged features");
    std::copy(f.begin(), f.end(), out.data.begin() + static_cast<std::ptrdiff_t>(b * d));
  }
  return out;
}

std::vector<DecisionOutput> decide_batch(const StudentOutput& student, std::span<const TeacherRecord* const> records,
                                         const AlphaNet& alpha_net, std::span<const std::uint32_t> seen,
                                         const VocabularyMap& vocab, const DecideOptions& options) {
  const std::size_t batch = student.logits.shape().at(0);
  const std::size_t classes = student.logits.shape().at(1);
  if (records.size() != batch) throw DimensionError("decide: student batch and teacher records differ in size");
  if (seen.size() != classes) {
    throw DimensionError("decide: " + std::to_string(seen.size()) + " seen classes but " + std::to_string(classes) +
                         " student logits");
  }
  NoGradGuard guard;
  const Tensor p_ctm = student.probabilities().value();
  const Tensor p_bg = teacher_distribution(records, seen, vocab);
  std::vector<double> alpha(batch, 1.0);
  if (options.forced_alpha) {
    std::fill(alpha.begin(), alpha.end(), *options.forced_alpha);
  } else if (options.use_alpha_net) {
    alpha = alpha_net.forward(student.embedding, constant(teacher_embeddings(records))).value().data;
  }
  std::vector<DecisionOutput> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto row = [&](const Tensor& t) {
      return std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(b * classes),
                                 t.data.begin() + static_cast<std::ptrdiff_t>((b + 1) * classes));
    };
    out[b].alpha = alpha[b];
    out[b].p_ctm = row(p_ctm);
    out[b].p_bg = row(p_bg);
    out[b].p = fuse(alpha[b], out[b].p_ctm, out[b].p_bg);
  }
  return out;
}

DecisionOutput decide(const StudentOutput& student, const TeacherRecord& record, const AlphaNet& alpha_net,
                      std::span<const std::uint32_t> seen, const VocabularyMap& vocab, const DecideOptions& options) {
  const TeacherRecord* recs[] = {&record};
  return decide_batch(student, recs, alpha_net, seen, vocab, options).front();
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw UsageError("argmax: empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace bfscl
