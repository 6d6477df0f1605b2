#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bfscl/autograd.hpp"

namespace bfscl {

using Rng = std::mt19937_64;

// Mixes a base seed with stream coordinates (session, epoch, step, ...) into
// an independent child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// A trainable tensor plus its Adam state. Copying a Parameter deep-copies the
/// value into a fresh graph leaf, so models holding Parameters behave as values.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor init);
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const std::string& name() const { return name_; }
  void rename(std::string name) { name_ = std::move(name); }
  const Var& var() const { return var_; }
  Tensor& tensor() { return var_.value(); }
  const Tensor& tensor() const { return var_.value(); }
  const Shape& shape() const { return var_.shape(); }

  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  std::uint64_t step() const { return step_; }
  void increment_step() { ++step_; }

  void zero_grad() { var_.value().grad.clear(); }

  // Appends rows along axis 0 (the tensor must be rank >= 1 with matching
  // trailing shape). Moment buffers grow with zeros; existing values and
  // moments are untouched.
  void append_rows(const Tensor& rows);

 private:
  std::string name_;
  Var var_;
  std::vector<double> m_, v_;
  std::uint64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update over `params`; clears their grads afterwards.
// Throws UsageError naming the first parameter without a gradient.
void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg);

// Kaiming-uniform (fan-in) sample: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

// Denominator floor of grad_check. Central differences carry roughly
// 1e-16 * |loss| / eps of roundoff, so exactly-zero gradients need a floor
// well above that to stay comparable.
inline constexpr double kGradCheckFloor = 1e-6;

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, kGradCheckFloor)
/// over every element of `leaves`, using central differences of step `eps`.
/// `loss` must rebuild the graph from the current leaf values on each call.
double grad_check(const std::function<Var()>& loss, std::span<const Var> leaves, double eps);

}  // namespace bfscl
