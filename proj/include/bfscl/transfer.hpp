#pragma once

// Embedding transfer: Donsker-Varadhan lower bound on the mutual information
// between student and teacher features at each scale, estimated with in-batch
// derangements as marginal samples.

#include <cstdint>
#include <span>
#include <vector>

#include "bfscl/autograd.hpp"
#include "bfscl/models.hpp"
#include "bfscl/optim.hpp"

namespace bfscl {

/// Joint pairs are (i, i). Marginal pairs are (i, marginal[i]) where
/// `marginal` is a derangement of 0..B-1.
struct BatchPairs {
  std::vector<std::size_t> joint;
  std::vector<std::size_t> marginal;
  std::size_t size() const { return joint.size(); }
};

// Uniformly random derangement of 0..n-1 (rejection over shuffles). n >= 2.
std::vector<std::size_t> random_derangement(std::size_t n, Rng& rng);

// Throws UsageError("batch too small") when batch_size < 2.
BatchPairs make_marginal_pairs(std::size_t batch_size, std::uint64_t seed);

// mean(joint) - [log_sum_exp(marginal) - ln |marginal|]
double dv_lower_bound(std::span<const double> joint_scores, std::span<const double> marginal_scores);
Var dv_lower_bound(const Var& joint_scores, const Var& marginal_scores);

// Gathers rows of a [B,d] tensor: out[i] = rows[index[i]].
Tensor gather_rows(const Tensor& rows, std::span<const std::size_t> index);

// DV bound at one scale. `student` is the pooled student feature [B,ds];
// `teacher` is the frozen teacher feature [B,dt].
Var scale_dv_bound(const MineDiscriminator& disc, std::size_t scale, const Var& student, const Tensor& teacher,
                   const BatchPairs& pairs);

struct BetTerms {
  Var loss;                   // -sum_l DV_l
  std::vector<double> bounds;  // DV_l values
};

/// Multi-scale transfer loss. `teacher_features[l]` is [B, dt_l].
BetTerms bet_terms(const StudentOutput& student, std::span<const Tensor> teacher_features,
                   const MineDiscriminator& disc, std::uint64_t seed);
Var bet_loss(const StudentOutput& student, std::span<const Tensor> teacher_features, const MineDiscriminator& disc,
             std::uint64_t seed);

}  // namespace bfscl
