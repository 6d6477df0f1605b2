#pragma once

// Dense inner loops of the tensor engine. Every kernel exists twice: a serial
// reference in `serial::` and an OpenMP version in `parallel::`. Both compute
// each output element with the same accumulation order, so results are
// bitwise identical regardless of backend or thread count.

#include <cstddef>
#include <span>

namespace bfscl::kernels {

struct MatmulGeom {
  std::size_t m, k, n;  // [m,k] x [k,n]
};

// Dense layer geometry: x[batch,in] . w[out,in]^T + b[out].
struct LinearGeom {
  std::size_t batch, in, out;
};

// Stride 1, zero "same" padding of kernel/2 on each side; kernel is odd.
struct Conv2dGeom {
  std::size_t batch, height, width, in_ch, out_ch, kernel;
};

struct Conv1dGeom {
  std::size_t batch, length, in_ch, out_ch, kernel;
};

using In = std::span<const double>;
using Out = std::span<double>;

#define BFSCL_KERNEL_DECLS                                                     \
  void matmul(In a, In b, Out out, const MatmulGeom& g);                       \
  void matmul_grad_a(In dout, In b, Out da, const MatmulGeom& g);              \
  void matmul_grad_b(In a, In dout, Out db, const MatmulGeom& g);              \
  void linear(In x, In w, In bias, Out out, const LinearGeom& g);              \
  void linear_grad_x(In dout, In w, Out dx, const LinearGeom& g);              \
  void linear_grad_w(In x, In dout, Out dw, const LinearGeom& g);              \
  void conv2d(In x, In w, In bias, Out out, const Conv2dGeom& g);              \
  void conv2d_grad_input(In dout, In w, Out dx, const Conv2dGeom& g);          \
  void conv2d_grad_weight(In x, In dout, Out dw, const Conv2dGeom& g);         \
  void conv1d(In x, In w, In bias, Out out, const Conv1dGeom& g);              \
  void conv1d_grad_input(In dout, In w, Out dx, const Conv1dGeom& g);          \
  void conv1d_grad_weight(In x, In dout, Out dw, const Conv1dGeom& g);

namespace serial {
BFSCL_KERNEL_DECLS
}
namespace parallel {
BFSCL_KERNEL_DECLS
}

enum class Backend { serial, parallel };

// Process-wide backend used by the autograd ops. Defaults to `parallel` when
// built with OpenMP.
void set_backend(Backend b);
Backend backend();
bool openmp_enabled();

// Dispatching entry points.
BFSCL_KERNEL_DECLS

#undef BFSCL_KERNEL_DECLS

}  // namespace bfscl::kernels
