#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bfscl/autograd.hpp"
#include "bfscl/optim.hpp"

namespace bfscl {

/// Fully connected layer, weight [out,in], bias [out].
struct Dense {
  Parameter weight;
  Parameter bias;

  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var forward(const Var& x) const { return ops::linear(x, weight.var(), bias.var()); }
  std::size_t in() const { return weight.shape()[1]; }
  std::size_t out() const { return weight.shape()[0]; }
};

// ---------------------------------------------------------------------------
// Student (continual) model

struct StudentConfig {
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t in_channels = 3;
  std::vector<std::size_t> channels{16, 32, 64};  // one conv stage per entry
  std::size_t kernel = 3;
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;
};

struct StudentOutput {
  std::vector<Var> features;  // per-stage taps, [B,H_l,W_l,C_l]
  Var embedding;              // [B,embed_dim]
  Var logits;                 // [B,classes]

  Var probabilities() const { return ops::stable_softmax(logits); }
};

/// Conv stages (conv -> relu -> 2x average downsample), a pooled embedding
/// head and an append-only classifier whose rows follow `class_ids()`.
class StudentModel {
 public:
  StudentModel() = default;
  explicit StudentModel(StudentConfig cfg);

  const StudentConfig& config() const { return cfg_; }
  std::size_t num_scales() const { return cfg_.channels.size(); }
  std::size_t num_classes() const { return class_ids_.size(); }
  const std::vector<std::uint32_t>& class_ids() const { return class_ids_; }
  // Shape of tap l for one sample: {H_l, W_l, C_l}.
  Shape feature_shape(std::size_t l) const;

  StudentOutput forward(const Var& x) const;  // x [B,H,W,C_in]

  // Appends freshly initialized classifier rows for `new_classes`. Throws
  // ProtocolError if any label is already registered or repeated.
  void expand_classifier(std::span<const std::uint32_t> new_classes);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  // Encoder parameters only (conv stages).
  std::vector<Parameter*> conv_parameters();

  // Directly replaces the classifier (used by tests and checkpoint loading).
  Parameter& classifier_weight() { return cls_w_; }
  Parameter& classifier_bias() { return cls_b_; }

 private:
  StudentConfig cfg_;
  std::vector<Parameter> conv_w_, conv_b_;
  Dense embed_;
  Parameter cls_w_, cls_b_;
  std::vector<std::uint32_t> class_ids_;
};

// ---------------------------------------------------------------------------
// MINE discriminator T_phi

struct MineConfig {
  std::vector<std::size_t> student_dims;  // pooled student width per scale
  std::vector<std::size_t> teacher_dims;  // teacher feature width per scale
  std::size_t d_common = 64;
  std::size_t channels = 8;
  double clamp = 20.0;
  std::uint64_t seed = 0;
};

/// One independent critic per scale: both sides are projected to d_common,
/// concatenated into a length 2*d_common sequence, run through conv1d layers
/// of kernel 1, 3, 5 (each followed by relu), pooled and scored by a scalar
/// linear head. Scores are clamped to [-clamp, clamp].
class MineDiscriminator {
 public:
  MineDiscriminator() = default;
  explicit MineDiscriminator(MineConfig cfg);

  const MineConfig& config() const { return cfg_; }
  std::size_t num_scales() const { return scales_.size(); }

  // student [B,ds] (already pooled), teacher [B,dt] -> scores [B].
  Var score(std::size_t scale, const Var& student, const Var& teacher) const;
  double score_pair(std::size_t scale, std::span<const double> student, std::span<const double> teacher) const;

  void zero_head();
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  struct ScaleCritic {
    Dense proj_student, proj_teacher;
    std::vector<Parameter> conv_w, conv_b;
    Dense head;
  };
  MineConfig cfg_;
  std::vector<ScaleCritic> scales_;
};

// ---------------------------------------------------------------------------
// Alpha-Net

struct AlphaConfig {
  std::size_t student_dim = 64;
  std::size_t teacher_dim = 64;
  std::vector<std::size_t> hidden{128, 64};
  std::uint64_t seed = 0;
};

/// Three dense layers over [student_embed, teacher_embed]; the scalar output
/// goes through a sigmoid. The pre-activation is clamped to [-30, 30] so the
/// gate stays strictly inside (0, 1) in double precision.
class AlphaNet {
 public:
  static constexpr double kLogitBound = 30.0;

  AlphaNet() = default;
  explicit AlphaNet(AlphaConfig cfg);

  const AlphaConfig& config() const { return cfg_; }
  Var forward(const Var& student_embed, const Var& teacher_embed) const;  // -> [B,1]
  double alpha(std::span<const double> student_embed, std::span<const double> teacher_embed) const;

  void zero();
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  AlphaConfig cfg_;
  std::vector<Dense> layers_;
};

}  // namespace bfscl
