#include <atomic>

#include "bfscl/kernels.hpp"

namespace bfscl::kernels {

namespace {
#ifdef _OPENMP
std::atomic<Backend> g_backend{Backend::parallel};
#else
std::atomic<Backend> g_backend{Backend::serial};
#endif
}  // namespace

void set_backend(Backend b) { g_backend.store(b); }
Backend backend() { return g_backend.load(); }

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

#define BFSCL_DISPATCH(name, G)                                  \
  void name(In a0, In a1, Out out, const G& g) {                 \
    if (backend() == Backend::parallel) {                        \
      parallel::name(a0, a1, out, g);                            \
    } else {                                                     \
      serial::name(a0, a1, out, g);                              \
    }                                                            \
  }
#define BFSCL_DISPATCH_BIAS(name, G)                             \
  void name(In a0, In a1, In bias, Out out, const G& g) {        \
    if (backend() == Backend::parallel) {                        \
      parallel::name(a0, a1, bias, out, g);                      \
    } else {                                                     \
      serial::name(a0, a1, bias, out, g);                        \
    }                                                            \
  }

BFSCL_DISPATCH(matmul, MatmulGeom)
BFSCL_DISPATCH(matmul_grad_a, MatmulGeom)
BFSCL_DISPATCH(matmul_grad_b, MatmulGeom)
BFSCL_DISPATCH_BIAS(linear, LinearGeom)
BFSCL_DISPATCH(linear_grad_x, LinearGeom)
BFSCL_DISPATCH(linear_grad_w, LinearGeom)
BFSCL_DISPATCH_BIAS(conv2d, Conv2dGeom)
BFSCL_DISPATCH(conv2d_grad_input, Conv2dGeom)
BFSCL_DISPATCH(conv2d_grad_weight, Conv2dGeom)
BFSCL_DISPATCH_BIAS(conv1d, Conv1dGeom)
BFSCL_DISPATCH(conv1d_grad_input, Conv1dGeom)
BFSCL_DISPATCH(conv1d_grad_weight, Conv1dGeom)

#undef BFSCL_DISPATCH
#undef BFSCL_DISPATCH_BIAS

}  // namespace bfscl::kernels
