#pragma once

// Instance-level adaptive decision: a per-sample gate alpha mixes the
// student distribution p_ctm with the teacher distribution p_bg,
//   p = alpha * p_ctm + (1 - alpha) * p_bg,
// and training minimises the cross-entropy of the fused distribution.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bfscl/autograd.hpp"
#include "bfscl/bundle.hpp"
#include "bfscl/models.hpp"

namespace bfscl {

inline constexpr double kProbabilityFloor = 1e-12;

struct DecisionOutput {
  double alpha = 0.0;
  std::vector<double> p_ctm;
  std::vector<double> p_bg;
  std::vector<double> p;
};

std::vector<double> fuse(double alpha, std::span<const double> p_ctm, std::span<const double> p_bg);
// alpha [B,1], p_ctm [B,C], p_bg [B,C] -> [B,C]; same arithmetic as above.
Var fuse(const Var& alpha, const Var& p_ctm, const Var& p_bg);

// mean_b -ln(max(p[b, y_b], 1e-12)).
Var decision_loss(const Var& p, std::span<const std::size_t> targets);

// Softmax of teacher scores restricted to `seen` (in that order).
std::vector<double> teacher_distribution(const TeacherRecord& record, std::span<const std::uint32_t> seen,
                                         const VocabularyMap& vocab);
Tensor teacher_distribution(std::span<const TeacherRecord* const> records, std::span<const std::uint32_t> seen,
                            const VocabularyMap& vocab);

struct DecideOptions {
  bool use_alpha_net = true;             // false: alpha == 1 (student only)
  std::optional<double> forced_alpha{};  // overrides everything when set
};

/// Batched decision over a student forward pass. `seen` must equal the
/// student's classifier row order.
std::vector<DecisionOutput> decide_batch(const StudentOutput& student, std::span<const TeacherRecord* const> records,
                                         const AlphaNet& alpha_net, std::span<const std::uint32_t> seen,
                                         const VocabularyMap& vocab, const DecideOptions& options = {});

DecisionOutput decide(const StudentOutput& student, const TeacherRecord& record, const AlphaNet& alpha_net,
                      std::span<const std::uint32_t> seen, const VocabularyMap& vocab,
                      const DecideOptions& options = {});

// Teacher embeddings stacked to [B, embed_dim].
Tensor teacher_embeddings(std::span<const TeacherRecord* const> records);
// Teacher features for one scale stacked to [B, dim_l].
Tensor teacher_features(std::span<const TeacherRecord* const> records, std::size_t scale);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace bfscl
