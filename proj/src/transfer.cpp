#include "bfscl/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bfscl/error.hpp"

namespace bfscl {

std::vector<std::size_t> random_derangement(std::size_t n, Rng& rng) {
  if (n < 2) throw UsageError("derangement: batch too small (" + std::to_string(n) + " < 2)");
  std::vector<std::size_t> perm(n);
  for (;;) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < n && !fixed_point; ++i) fixed_point = perm[i] == i;
    if (!fixed_point) return perm;
  }
}

BatchPairs make_marginal_pairs(std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw UsageError("make_marginal_pairs: batch too small (" + std::to_string(batch_size) + " < 2)");
  Rng rng(seed);
  BatchPairs pairs;
  pairs.joint.resize(batch_size);
  std::iota(pairs.joint.begin(), pairs.joint.end(), std::size_t{0});
  pairs.marginal = random_derangement(batch_size, rng);
  return pairs;
}

double dv_lower_bound(std::span<const double> joint_scores, std::span<const double> marginal_scores) {
  if (joint_scores.empty() || marginal_scores.empty()) throw UsageError("dv_lower_bound: empty score list");
  double joint_sum = 0.0;
  for (double s : joint_scores) joint_sum += s;
  const double m = *std::max_element(marginal_scores.begin(), marginal_scores.end());
  double total = 0.0;
  for (double s : marginal_scores) total += std::exp(s - m);
  const double lse = m + std::log(total);
  return joint_sum / static_cast<double>(joint_scores.size()) -
         (lse - std::log(static_cast<double>(marginal_scores.size())));
}

Var dv_lower_bound(const Var& joint_scores, const Var& marginal_scores) {
  if (joint_scores.numel() == 0 || marginal_scores.numel() == 0) throw UsageError("dv_lower_bound: empty score list");
  const double log_n = std::log(static_cast<double>(marginal_scores.numel()));
  Var lse = ops::log_sum_exp(ops::reshape(marginal_scores, {marginal_scores.numel()}));
  return ops::sub(ops::mean(joint_scores), ops::add_scalar(lse, -log_n));
}

Tensor gather_rows(const Tensor& rows, std::span<const std::size_t> index) {
  if (rows.rank() != 2) throw DimensionError("gather_rows: expected rank 2, got " + shape_to_string(rows.shape));
  const std::size_t width = rows.shape[1];
  Tensor out({index.size(), width});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows.shape[0]) throw UsageError("gather_rows: index out of range");
    std::copy_n(rows.data.begin() + static_cast<std::ptrdiff_t>(index[i] * width), width,
                out.data.begin() + static_cast<std::ptrdiff_t>(i * width));
  }
  return out;
}

Var scale_dv_bound(const MineDiscriminator& disc, std::size_t scale, const Var& student, const Tensor& teacher,
                   const BatchPairs& pairs) {
  if (teacher.rank() != 2 || teacher.shape[0] != pairs.size() || student.shape().at(0) != pairs.size()) {
    throw DimensionError("bet_loss: batch mismatch between student " + shape_to_string(student.shape()) +
                         ", teacher " + shape_to_string(teacher.shape) + " and " + std::to_string(pairs.size()) +
                         " pairs");
  }
  Var joint = disc.score(scale, student, constant(gather_rows(teacher, pairs.joint)));
  Var marginal = disc.score(scale, student, constant(gather_rows(teacher, pairs.marginal)));
  return dv_lower_bound(joint, marginal);
}

BetTerms bet_terms(const StudentOutput& student, std::span<const Tensor> teacher_features,
                   const MineDiscriminator& disc, std::uint64_t seed) {
  const std::size_t scales = student.features.size();
  if (teacher_features.size() != scales || disc.num_scales() != scales) {
    throw ConfigError("bet_loss: scale count mismatch (student " + std::to_string(scales) + ", teacher " +
                      std::to_string(teacher_features.size()) + ", discriminator " +
                      std::to_string(disc.num_scales()) + ")");
  }
  if (scales == 0) throw ConfigError("bet_loss: no scales");
  const std::size_t batch = student.features.front().shape().at(0);
  const BatchPairs pairs = make_marginal_pairs(batch, seed);
  BetTerms out;
  Var total;
  for (std::size_t l = 0; l < scales; ++l) {
    Var pooled = ops::global_average_pool(student.features[l]);
    Var bound = scale_dv_bound(disc, l, pooled, teacher_features[l], pairs);
    out.bounds.push_back(bound.item());
    total = total.defined() ? ops::add(total, bound) : bound;
  }
  out.loss = ops::scale(total, -1.0);
  return out;
}

Var bet_loss(const StudentOutput& student, std::span<const Tensor> teacher_features, const MineDiscriminator& disc,
             std::uint64_t seed) {
  return bet_terms(student, teacher_features, disc, seed).loss;
}

}  // namespace bfscl
