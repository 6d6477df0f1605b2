#include <algorithm>
#include <vector>

#include "bfscl/kernels.hpp"

// Loop nests are reordered for locality and split across threads at the
// outermost independent axis. Each output element still accumulates its terms
// in the same order as the serial reference.

namespace bfscl::kernels::parallel {

namespace {
using idx = long;
}

void matmul(In a, In b, Out out, const MatmulGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < static_cast<idx>(g.m); ++i) {
    double* row = out.data() + i * g.n;
    for (std::size_t j = 0; j < g.n; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < g.k; ++p) {
      const double av = a[i * g.k + p];
      const double* brow = b.data() + p * g.n;
      for (std::size_t j = 0; j < g.n; ++j) row[j] += av * brow[j];
    }
  }
}

void matmul_grad_a(In dout, In b, Out da, const MatmulGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx i = 0; i < static_cast<idx>(g.m); ++i) {
    const double* drow = dout.data() + i * g.n;
    for (std::size_t p = 0; p < g.k; ++p) {
      const double* brow = b.data() + p * g.n;
      double acc = 0.0;
      for (std::size_t j = 0; j < g.n; ++j) acc += drow[j] * brow[j];
      da[i * g.k + p] = acc;
    }
  }
}

void matmul_grad_b(In a, In dout, Out db, const MatmulGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx p = 0; p < static_cast<idx>(g.k); ++p) {
    double* row = db.data() + p * g.n;
    for (std::size_t j = 0; j < g.n; ++j) row[j] = 0.0;
    for (std::size_t i = 0; i < g.m; ++i) {
      const double av = a[i * g.k + p];
      const double* drow = dout.data() + i * g.n;
      for (std::size_t j = 0; j < g.n; ++j) row[j] += av * drow[j];
    }
  }
}

void linear(In x, In w, In bias, Out out, const LinearGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx b = 0; b < static_cast<idx>(g.batch); ++b) {
    const double* xrow = x.data() + b * g.in;
    for (std::size_t o = 0; o < g.out; ++o) {
      const double* wrow = w.data() + o * g.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < g.in; ++i) acc += xrow[i] * wrow[i];
      out[b * g.out + o] = bias.empty() ? acc : acc + bias[o];
    }
  }
}

void linear_grad_x(In dout, In w, Out dx, const LinearGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx b = 0; b < static_cast<idx>(g.batch); ++b) {
    double* row = dx.data() + b * g.in;
    for (std::size_t i = 0; i < g.in; ++i) row[i] = 0.0;
    for (std::size_t o = 0; o < g.out; ++o) {
      const double d = dout[b * g.out + o];
      const double* wrow = w.data() + o * g.in;
      for (std::size_t i = 0; i < g.in; ++i) row[i] += d * wrow[i];
    }
  }
}

void linear_grad_w(In x, In dout, Out dw, const LinearGeom& g) {
#pragma omp parallel for schedule(static)
  for (idx o = 0; o < static_cast<idx>(g.out); ++o) {
    double* row = dw.data() + o * g.in;
    for (std::size_t i = 0; i < g.in; ++i) row[i] = 0.0;
    for (std::size_t b = 0; b < g.batch; ++b) {
      const double d = dout[b * g.out + o];
      const double* xrow = x.data() + b * g.in;
      for (std::size_t i = 0; i < g.in; ++i) row[i] += d * xrow[i];
    }
  }
}

void conv2d(In x, In w, In bias, Out out, const Conv2dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx H = static_cast<idx>(g.height), W = static_cast<idx>(g.width);
  const idx rows = static_cast<idx>(g.batch) * H;
#pragma omp parallel
  {
    std::vector<double> acc(g.out_ch);
#pragma omp for schedule(static)
    for (idx r = 0; r < rows; ++r) {
      const idx b = r / H, h = r % H;
      for (idx c = 0; c < W; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t kh = 0; kh < g.kernel; ++kh) {
          const idx ih = h + static_cast<idx>(kh) - pad;
          if (ih < 0 || ih >= H) continue;
          for (std::size_t kw = 0; kw < g.kernel; ++kw) {
            const idx iw = c + static_cast<idx>(kw) - pad;
            if (iw < 0 || iw >= W) continue;
            const double* xp = x.data() + ((b * H + ih) * W + iw) * g.in_ch;
            const double* wp = w.data() + (kh * g.kernel + kw) * g.in_ch * g.out_ch;
            for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
              const double xv = xp[ci];
              const double* wrow = wp + ci * g.out_ch;
              for (std::size_t co = 0; co < g.out_ch; ++co) acc[co] += xv * wrow[co];
            }
          }
        }
        double* op = out.data() + ((b * H + h) * W + c) * g.out_ch;
        for (std::size_t co = 0; co < g.out_ch; ++co) op[co] = bias.empty() ? acc[co] : acc[co] + bias[co];
      }
    }
  }
}

void conv2d_grad_input(In dout, In w, Out dx, const Conv2dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx H = static_cast<idx>(g.height), W = static_cast<idx>(g.width);
  const idx rows = static_cast<idx>(g.batch) * H;
#pragma omp parallel for schedule(static)
  for (idx r = 0; r < rows; ++r) {
    const idx b = r / H, ih = r % H;
    for (idx iw = 0; iw < W; ++iw) {
      double* dp = dx.data() + ((b * H + ih) * W + iw) * g.in_ch;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) dp[ci] = 0.0;
      for (std::size_t kh = 0; kh < g.kernel; ++kh) {
        const idx h = ih - static_cast<idx>(kh) + pad;
        if (h < 0 || h >= H) continue;
        for (std::size_t kw = 0; kw < g.kernel; ++kw) {
          const idx c = iw - static_cast<idx>(kw) + pad;
          if (c < 0 || c >= W) continue;
          const double* gp = dout.data() + ((b * H + h) * W + c) * g.out_ch;
          const double* wp = w.data() + (kh * g.kernel + kw) * g.in_ch * g.out_ch;
          for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
            const double* wrow = wp + ci * g.out_ch;
            double acc = dp[ci];
            for (std::size_t co = 0; co < g.out_ch; ++co) acc += gp[co] * wrow[co];
            dp[ci] = acc;
          }
        }
      }
    }
  }
}

void conv2d_grad_weight(In x, In dout, Out dw, const Conv2dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx H = static_cast<idx>(g.height), W = static_cast<idx>(g.width);
  const idx taps = static_cast<idx>(g.kernel * g.kernel * g.in_ch);
#pragma omp parallel for schedule(static)
  for (idx t = 0; t < taps; ++t) {
    const std::size_t kh = static_cast<std::size_t>(t) / (g.kernel * g.in_ch);
    const std::size_t kw = (static_cast<std::size_t>(t) / g.in_ch) % g.kernel;
    const std::size_t ci = static_cast<std::size_t>(t) % g.in_ch;
    double* row = dw.data() + static_cast<std::size_t>(t) * g.out_ch;
    for (std::size_t co = 0; co < g.out_ch; ++co) row[co] = 0.0;
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (idx h = 0; h < H; ++h) {
        const idx ih = h + static_cast<idx>(kh) - pad;
        if (ih < 0 || ih >= H) continue;
        for (idx c = 0; c < W; ++c) {
          const idx iw = c + static_cast<idx>(kw) - pad;
          if (iw < 0 || iw >= W) continue;
          const double xv = x[((b * H + ih) * W + iw) * g.in_ch + ci];
          const double* gp = dout.data() + ((b * H + h) * W + c) * g.out_ch;
          for (std::size_t co = 0; co < g.out_ch; ++co) row[co] += gp[co] * xv;
        }
      }
    }
  }
}

void conv1d(In x, In w, In bias, Out out, const Conv1dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx L = static_cast<idx>(g.length);
  const idx rows = static_cast<idx>(g.batch) * L;
#pragma omp parallel
  {
    std::vector<double> acc(g.out_ch);
#pragma omp for schedule(static)
    for (idx r = 0; r < rows; ++r) {
      const idx b = r / L, l = r % L;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const idx il = l + static_cast<idx>(k) - pad;
        if (il < 0 || il >= L) continue;
        const double* xp = x.data() + (b * L + il) * g.in_ch;
        const double* wp = w.data() + k * g.in_ch * g.out_ch;
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          const double xv = xp[ci];
          const double* wrow = wp + ci * g.out_ch;
          for (std::size_t co = 0; co < g.out_ch; ++co) acc[co] += xv * wrow[co];
        }
      }
      double* op = out.data() + r * g.out_ch;
      for (std::size_t co = 0; co < g.out_ch; ++co) op[co] = bias.empty() ? acc[co] : acc[co] + bias[co];
    }
  }
}

void conv1d_grad_input(In dout, In w, Out dx, const Conv1dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx L = static_cast<idx>(g.length);
  const idx rows = static_cast<idx>(g.batch) * L;
#pragma omp parallel for schedule(static)
  for (idx r = 0; r < rows; ++r) {
    const idx b = r / L, il = r % L;
    double* dp = dx.data() + r * g.in_ch;
    for (std::size_t ci = 0; ci < g.in_ch; ++ci) dp[ci] = 0.0;
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const idx l = il - static_cast<idx>(k) + pad;
      if (l < 0 || l >= L) continue;
      const double* gp = dout.data() + (b * L + l) * g.out_ch;
      const double* wp = w.data() + k * g.in_ch * g.out_ch;
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        const double* wrow = wp + ci * g.out_ch;
        double acc = dp[ci];
        for (std::size_t co = 0; co < g.out_ch; ++co) acc += gp[co] * wrow[co];
        dp[ci] = acc;
      }
    }
  }
}

void conv1d_grad_weight(In x, In dout, Out dw, const Conv1dGeom& g) {
  const idx pad = static_cast<idx>(g.kernel / 2);
  const idx L = static_cast<idx>(g.length);
  const idx taps = static_cast<idx>(g.kernel * g.in_ch);
#pragma omp parallel for schedule(static)
  for (idx t = 0; t < taps; ++t) {
    const std::size_t k = static_cast<std::size_t>(t) / g.in_ch;
    const std::size_t ci = static_cast<std::size_t>(t) % g.in_ch;
    double* row = dw.data() + static_cast<std::size_t>(t) * g.out_ch;
    for (std::size_t co = 0; co < g.out_ch; ++co) row[co] = 0.0;
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (idx l = 0; l < L; ++l) {
        const idx il = l + static_cast<idx>(k) - pad;
        if (il < 0 || il >= L) continue;
        const double xv = x[(b * L + il) * g.in_ch + ci];
        const double* gp = dout.data() + (b * L + l) * g.out_ch;
        for (std::size_t co = 0; co < g.out_ch; ++co) row[co] += gp[co] * xv;
      }
    }
  }
}

}  // namespace bfscl::kernels::parallel
