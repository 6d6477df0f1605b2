#pragma once

// Trains a one-scale discriminator on bivariate Gaussian pairs with
// correlation rho and reports the DV bound on a fresh held-out sample.

#include <cmath>
#include <random>

#include "bfscl/transfer.hpp"

namespace bfscl::testing {

struct GaussianMiRun {
  double rho = 0.9;
  std::size_t batch = 256;
  std::size_t steps = 2000;
  std::size_t eval_batch = 4096;
  std::size_t eval_rounds = 8;
  std::size_t d_common = 8;
  std::size_t channels = 8;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

inline void gaussian_pairs(double rho, std::size_t n, Rng& rng, Tensor& x, Tensor& y) {
  std::normal_distribution<double> d;
  x = Tensor({n, 1});
  y = Tensor({n, 1});
  const double s = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = d(rng);
    y[i] = rho * x[i] + s * d(rng);
  }
}

inline double train_gaussian_mi(const GaussianMiRun& run) {
  MineConfig cfg;
  cfg.student_dims = {1};
  cfg.teacher_dims = {1};
  cfg.d_common = run.d_common;
  cfg.channels = run.channels;
  cfg.seed = run.seed;
  MineDiscriminator disc(cfg);
  auto params = disc.parameters();
  Rng rng(derive_seed(run.seed, 77));
  Tensor x, y;
  for (std::size_t step = 0; step < run.steps; ++step) {
    gaussian_pairs(run.rho, run.batch, rng, x, y);
    const auto pairs = make_marginal_pairs(run.batch, derive_seed(run.seed, 78, step));
    Var bound = scale_dv_bound(disc, 0, constant(x), y, pairs);
    backward(ops::scale(bound, -1.0));
    adam_step(params, {.lr = run.lr});
  }
  NoGradGuard guard;
  double total = 0.0;
  for (std::size_t r = 0; r < run.eval_rounds; ++r) {
    gaussian_pairs(run.rho, run.eval_batch, rng, x, y);
    const auto pairs = make_marginal_pairs(run.eval_batch, derive_seed(run.seed, 79, r));
    total += scale_dv_bound(disc, 0, constant(x), y, pairs).item();
  }
  return total / static_cast<double>(run.eval_rounds);
}

}  // namespace bfscl::testing
