#include "bfscl/kernels.hpp"

namespace bfscl::kernels::serial {

void matmul(In a, In b, Out out, const MatmulGeom& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < g.k; ++p) acc += a[i * g.k + p] * b[p * g.n + j];
      out[i * g.n + j] = acc;
    }
  }
}

void matmul_grad_a(In dout, In b, Out da, const MatmulGeom& g) {
  for (std::size_t i = 0; i < g.m; ++i) {
    for (std::size_t p = 0; p < g.k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < g.n; ++j) acc += dout[i * g.n + j] * b[p * g.n + j];
      da[i * g.k + p] = acc;
    }
  }
}

void matmul_grad_b(In a, In dout, Out db, const MatmulGeom& g) {
  for (std::size_t p = 0; p < g.k; ++p) {
    for (std::size_t j = 0; j < g.n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.m; ++i) acc += a[i * g.k + p] * dout[i * g.n + j];
      db[p * g.n + j] = acc;
    }
  }
}

void linear(In x, In w, In bias, Out out, const LinearGeom& g) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < g.out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.in; ++i) acc += x[b * g.in + i] * w[o * g.in + i];
      out[b * g.out + o] = bias.empty() ? acc : acc + bias[o];
    }
  }
}

void linear_grad_x(In dout, In w, Out dx, const LinearGeom& g) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t i = 0; i < g.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < g.out; ++o) acc += dout[b * g.out + o] * w[o * g.in + i];
      dx[b * g.in + i] = acc;
    }
  }
}

void linear_grad_w(In x, In dout, Out dw, const LinearGeom& g) {
  for (std::size_t o = 0; o < g.out; ++o) {
    for (std::size_t i = 0; i < g.in; ++i) {
      double acc = 0.0;
      for (std::size_t b = 0; b < g.batch; ++b) acc += dout[b * g.out + o] * x[b * g.in + i];
      dw[o * g.in + i] = acc;
    }
  }
}

// Layouts: x[b,h,w,ci], w[kh,kw,ci,co], out[b,h,w,co].
void conv2d(In x, In w, In bias, Out out, const Conv2dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (long h = 0; h < H; ++h) {
      for (long c = 0; c < W; ++c) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
          double acc = 0.0;
          for (std::size_t kh = 0; kh < g.kernel; ++kh) {
            const long ih = h + static_cast<long>(kh) - pad;
            if (ih < 0 || ih >= H) continue;
            for (std::size_t kw = 0; kw < g.kernel; ++kw) {
              const long iw = c + static_cast<long>(kw) - pad;
              if (iw < 0 || iw >= W) continue;
              for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
                const double xv = x[((b * g.height + ih) * g.width + iw) * g.in_ch + ci];
                const double wv = w[((kh * g.kernel + kw) * g.in_ch + ci) * g.out_ch + co];
                acc += xv * wv;
              }
            }
          }
          out[((b * g.height + h) * g.width + c) * g.out_ch + co] =
              bias.empty() ? acc : acc + bias[co];
        }
      }
    }
  }
}

void conv2d_grad_input(In dout, In w, Out dx, const Conv2dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (long ih = 0; ih < H; ++ih) {
      for (long iw = 0; iw < W; ++iw) {
        for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
          double acc = 0.0;
          for (std::size_t kh = 0; kh < g.kernel; ++kh) {
            const long h = ih - static_cast<long>(kh) + pad;
            if (h < 0 || h >= H) continue;
            for (std::size_t kw = 0; kw < g.kernel; ++kw) {
              const long c = iw - static_cast<long>(kw) + pad;
              if (c < 0 || c >= W) continue;
              for (std::size_t co = 0; co < g.out_ch; ++co) {
                acc += dout[((b * g.height + h) * g.width + c) * g.out_ch + co] *
                       w[((kh * g.kernel + kw) * g.in_ch + ci) * g.out_ch + co];
              }
            }
          }
          dx[((b * g.height + ih) * g.width + iw) * g.in_ch + ci] = acc;
        }
      }
    }
  }
}

void conv2d_grad_weight(In x, In dout, Out dw, const Conv2dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long H = static_cast<long>(g.height), W = static_cast<long>(g.width);
  for (std::size_t kh = 0; kh < g.kernel; ++kh) {
    for (std::size_t kw = 0; kw < g.kernel; ++kw) {
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        for (std::size_t co = 0; co < g.out_ch; ++co) {
          double acc = 0.0;
          for (std::size_t b = 0; b < g.batch; ++b) {
            for (long h = 0; h < H; ++h) {
              const long ih = h + static_cast<long>(kh) - pad;
              if (ih < 0 || ih >= H) continue;
              for (long c = 0; c < W; ++c) {
                const long iw = c + static_cast<long>(kw) - pad;
                if (iw < 0 || iw >= W) continue;
                acc += dout[((b * g.height + h) * g.width + c) * g.out_ch + co] *
                       x[((b * g.height + ih) * g.width + iw) * g.in_ch + ci];
              }
            }
          }
          dw[((kh * g.kernel + kw) * g.in_ch + ci) * g.out_ch + co] = acc;
        }
      }
    }
  }
}

// Layouts: x[b,l,ci], w[k,ci,co], out[b,l,co].
void conv1d(In x, In w, In bias, Out out, const Conv1dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long L = static_cast<long>(g.length);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (long l = 0; l < L; ++l) {
      for (std::size_t co = 0; co < g.out_ch; ++co) {
        double acc = 0.0;
        for (std::size_t k = 0; k < g.kernel; ++k) {
          const long il = l + static_cast<long>(k) - pad;
          if (il < 0 || il >= L) continue;
          for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
            acc += x[(b * g.length + il) * g.in_ch + ci] * w[(k * g.in_ch + ci) * g.out_ch + co];
          }
        }
        out[(b * g.length + l) * g.out_ch + co] = bias.empty() ? acc : acc + bias[co];
      }
    }
  }
}

void conv1d_grad_input(In dout, In w, Out dx, const Conv1dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long L = static_cast<long>(g.length);
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (long il = 0; il < L; ++il) {
      for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
        double acc = 0.0;
        for (std::size_t k = 0; k < g.kernel; ++k) {
          const long l = il - static_cast<long>(k) + pad;
          if (l < 0 || l >= L) continue;
          for (std::size_t co = 0; co < g.out_ch; ++co) {
            acc += dout[(b * g.length + l) * g.out_ch + co] * w[(k * g.in_ch + ci) * g.out_ch + co];
          }
        }
        dx[(b * g.length + il) * g.in_ch + ci] = acc;
      }
    }
  }
}

void conv1d_grad_weight(In x, In dout, Out dw, const Conv1dGeom& g) {
  const long pad = static_cast<long>(g.kernel / 2);
  const long L = static_cast<long>(g.length);
  for (std::size_t k = 0; k < g.kernel; ++k) {
    for (std::size_t ci = 0; ci < g.in_ch; ++ci) {
      for (std::size_t co = 0; co < g.out_ch; ++co) {
        double acc = 0.0;
        for (std::size_t b = 0; b < g.batch; ++b) {
          for (long l = 0; l < L; ++l) {
            const long il = l + static_cast<long>(k) - pad;
            if (il < 0 || il >= L) continue;
            acc += dout[(b * g.length + l) * g.out_ch + co] * x[(b * g.length + il) * g.in_ch + ci];
          }
        }
        dw[(k * g.in_ch + ci) * g.out_ch + co] = acc;
      }
    }
  }
}

}  // namespace bfscl::kernels::serial
