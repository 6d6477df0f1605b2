#pragma once

// Reverse-mode automatic differentiation over `Tensor` values.
//
// A `Var` is a handle to a graph node. Ops record their parents and a
// backward closure only when some input requires a gradient and no
// `NoGradGuard` is active. `backward(loss)` walks the recorded graph in
// reverse topological order and accumulates into every reachable node's
// `value.grad`.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "bfscl/tensor.hpp"

namespace bfscl {

struct Node {
  Tensor value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  std::size_t numel() const { return node_->value.numel(); }
  double item() const { return node_->value.item(); }
  const std::vector<double>& grad() const { return node_->value.grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

inline Var constant(Tensor t) { return Var(std::move(t), false); }

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// Fills grad slots of every node reachable from `loss`. Leaf grads
// accumulate across calls; intermediate grads are reset first.
void backward(const Var& loss);

namespace ops {

// --- linear algebra -------------------------------------------------------
Var matmul(const Var& a, const Var& b);                      // [m,k]x[k,n]
Var linear(const Var& x, const Var& w, const Var& bias);     // x[B,in], w[out,in], bias[out]
Var conv2d(const Var& x, const Var& w, const Var& bias);     // x[B,H,W,Ci], w[k,k,Ci,Co], bias[Co]
Var conv1d(const Var& x, const Var& w, const Var& bias);     // x[B,L,Ci], w[k,Ci,Co], bias[Co]

// --- elementwise ----------------------------------------------------------
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var log(const Var& x);
Var clamp(const Var& x, double lo, double hi);  // zero gradient outside [lo,hi]
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& x, double c);
Var scale(const Var& x, double c);
Var scale_rows(const Var& x, const Var& s);  // x[B,C] * s[B,1]

// --- reductions and shape -------------------------------------------------
Var stable_softmax(const Var& x);        // over the last axis
Var log_sum_exp(const Var& x);           // over the last axis; rank-1 input gives [1]
Var global_average_pool(const Var& x);   // [B,...,C] -> [B,C]
Var avg_pool2(const Var& x);             // [B,H,W,C] -> [B,H/2,W/2,C]
Var concat(std::span<const Var> parts);  // along the last axis
Var reshape(const Var& x, Shape shape);
Var sum(const Var& x);                   // -> [1]
Var mean(const Var& x);                  // -> [1]
Var pick(const Var& x, std::span<const std::size_t> index);  // x[B,C] -> [B], x[b, index[b]]

}  // namespace ops

}  // namespace bfscl
