#include <cstring>
#include <random>
#include <vector>

#include "bfscl/kernels.hpp"
#include "doctest.h"

using namespace bfscl::kernels;

namespace {

std::vector<double> rnd(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

TEST_CASE("parallel matmul and linear kernels are bitwise equal to serial") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    MatmulGeom g{pick(rng, 1, 40), pick(rng, 1, 40), pick(rng, 1, 40)};
    auto a = rnd(g.m * g.k, rng), b = rnd(g.k * g.n, rng), d = rnd(g.m * g.n, rng);
    std::vector<double> s(g.m * g.n), p(s.size());
    serial::matmul(a, b, s, g);
    parallel::matmul(a, b, p, g);
    CHECK(same_bits(s, p));
    std::vector<double> sa(a.size()), pa(a.size()), sb(b.size()), pb(b.size());
    serial::matmul_grad_a(d, b, sa, g);
    parallel::matmul_grad_a(d, b, pa, g);
    serial::matmul_grad_b(a, d, sb, g);
    parallel::matmul_grad_b(a, d, pb, g);
    CHECK(same_bits(sa, pa));
    CHECK(same_bits(sb, pb));

    LinearGeom lg{g.m, g.k, g.n};
    auto w = rnd(g.n * g.k, rng), bias = rnd(g.n, rng);
    std::vector<double> ls(g.m * g.n), lp(ls.size());
    serial::linear(a, w, bias, ls, lg);
    parallel::linear(a, w, bias, lp, lg);
    CHECK(same_bits(ls, lp));
    std::vector<double> gx(a.size()), gxp(a.size()), gw(w.size()), gwp(w.size());
    serial::linear_grad_x(d, w, gx, lg);
    parallel::linear_grad_x(d, w, gxp, lg);
    serial::linear_grad_w(a, d, gw, lg);
    parallel::linear_grad_w(a, d, gwp, lg);
    CHECK(same_bits(gx, gxp));
    CHECK(same_bits(gw, gwp));
  }
}

TEST_CASE("parallel conv kernels are bitwise equal to serial") {
  std::mt19937_64 rng(7);
  const std::size_t kernels[] = {1, 3, 5};
  for (int trial = 0; trial < 20; ++trial) {
    Conv2dGeom g{pick(rng, 1, 3), pick(rng, 1, 9), pick(rng, 1, 9), pick(rng, 1, 4), pick(rng, 1, 5),
                 kernels[pick(rng, 0, 2)]};
    auto x = rnd(g.batch * g.height * g.width * g.in_ch, rng);
    auto w = rnd(g.kernel * g.kernel * g.in_ch * g.out_ch, rng);
    auto b = rnd(g.out_ch, rng);
    auto dy = rnd(g.batch * g.height * g.width * g.out_ch, rng);
    std::vector<double> ys(dy.size()), yp(dy.size()), dxs(x.size()), dxp(x.size()), dws(w.size()), dwp(w.size());
    serial::conv2d(x, w, b, ys, g);
    parallel::conv2d(x, w, b, yp, g);
    serial::conv2d_grad_input(dy, w, dxs, g);
    parallel::conv2d_grad_input(dy, w, dxp, g);
    serial::conv2d_grad_weight(x, dy, dws, g);
    parallel::conv2d_grad_weight(x, dy, dwp, g);
    CHECK(same_bits(ys, yp));
    CHECK(same_bits(dxs, dxp));
    CHECK(same_bits(dws, dwp));

    Conv1dGeom h{g.batch, pick(rng, 1, 17), g.in_ch, g.out_ch, g.kernel};
    auto x1 = rnd(h.batch * h.length * h.in_ch, rng);
    auto w1 = rnd(h.kernel * h.in_ch * h.out_ch, rng);
    auto dy1 = rnd(h.batch * h.length * h.out_ch, rng);
    std::vector<double> y1s(dy1.size()), y1p(dy1.size()), dx1s(x1.size()), dx1p(x1.size()), dw1s(w1.size()),
        dw1p(w1.size());
    serial::conv1d(x1, w1, b, y1s, h);
    parallel::conv1d(x1, w1, b, y1p, h);
    serial::conv1d_grad_input(dy1, w1, dx1s, h);
    parallel::conv1d_grad_input(dy1, w1, dx1p, h);
    serial::conv1d_grad_weight(x1, dy1, dw1s, h);
    parallel::conv1d_grad_weight(x1, dy1, dw1p, h);
    CHECK(same_bits(y1s, y1p));
    CHECK(same_bits(dx1s, dx1p));
    CHECK(same_bits(dw1s, dw1p));
  }
}

TEST_CASE("conv2d adjoint identity: <conv(x), y> == <x, conv_grad_input(y)>") {
  std::mt19937_64 rng(3);
  Conv2dGeom g{2, 5, 6, 3, 4, 3};
  auto x = rnd(g.batch * g.height * g.width * g.in_ch, rng);
  auto w = rnd(g.kernel * g.kernel * g.in_ch * g.out_ch, rng);
  std::vector<double> zero(g.out_ch, 0.0);
  auto y = rnd(g.batch * g.height * g.width * g.out_ch, rng);
  std::vector<double> cx(y.size()), gy(x.size());
  serial::conv2d(x, w, zero, cx, g);
  serial::conv2d_grad_input(y, w, gy, g);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += cx[i] * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * gy[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("backend switch") {
  const Backend before = backend();
  set_backend(Backend::serial);
  CHECK(backend() == Backend::serial);
  set_backend(Backend::parallel);
  CHECK(backend() == Backend::parallel);
  set_backend(before);
}
