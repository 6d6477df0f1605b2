#include "bfscl/optim.hpp"

#include <algorithm>
#include <cmath>

#include "bfscl/error.hpp"

namespace bfscl {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer applied to each coordinate in turn
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

Parameter::Parameter(std::string name, Tensor init)
    : name_(std::move(name)),
      var_(std::move(init), true),
      m_(var_.numel(), 0.0),
      v_(var_.numel(), 0.0) {}

Parameter::Parameter(const Parameter& other)
    : name_(other.name_), m_(other.m_), v_(other.v_), step_(other.step_) {
  if (other.var_.defined()) var_ = Var(other.var_.value(), true);
}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) {
    Parameter copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Parameter::append_rows(const Tensor& rows) {
  Tensor& t = var_.value();
  if (rows.rank() != t.rank() || !std::equal(t.shape.begin() + 1, t.shape.end(), rows.shape.begin() + 1)) {
    throw DimensionError("append_rows(" + name_ + "): shape mismatch " + shape_to_string(t.shape) + " vs " +
                         shape_to_string(rows.shape));
  }
  Shape grown = t.shape;
  grown[0] += rows.shape[0];
  std::vector<double> data = t.data;
  data.insert(data.end(), rows.data.begin(), rows.data.end());
  // A new leaf: any graph built before the expansion keeps the old node.
  var_ = Var(Tensor(std::move(grown), std::move(data)), true);
  m_.resize(var_.numel(), 0.0);
  v_.resize(var_.numel(), 0.0);
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0) || !(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0) ||
      !(cfg.eps > 0.0)) {
    throw UsageError("adam_step: hyperparameters out of range");
  }
  for (const Parameter* p : params) {
    if (!p->tensor().has_grad()) throw UsageError("adam_step: parameter '" + p->name() + "' has no gradient");
  }
  for (Parameter* p : params) {
    p->increment_step();
    const double t = static_cast<double>(p->step());
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    Tensor& value = p->tensor();
    auto& m = p->first_moment();
    auto& v = p->second_moment();
    for (std::size_t i = 0; i < value.data.size(); ++i) {
      const double g = value.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    p->zero_grad();
  }
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data) v = dist(rng);
  return t;
}

double grad_check(const std::function<Var()>& loss, std::span<const Var> leaves, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw UsageError("grad_check: eps must lie in (0, 1e-2]");
  std::vector<Var> handles(leaves.begin(), leaves.end());
  for (auto& h : handles) h.value().grad.clear();
  backward(loss());
  std::vector<std::vector<double>> analytic;
  for (auto& h : handles) {
    analytic.push_back(h.value().has_grad() ? h.value().grad : std::vector<double>(h.numel(), 0.0));
    h.value().grad.clear();
  }

  NoGradGuard no_grad;
  double worst = 0.0;
  for (std::size_t k = 0; k < handles.size(); ++k) {
    auto& data = handles[k].value().data;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double up = loss().item();
      data[i] = saved - eps;
      const double down = loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace bfscl
