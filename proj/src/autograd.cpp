#include "bfscl/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "bfscl/error.hpp"
#include "bfscl/kernels.hpp"

namespace bfscl {

namespace {

thread_local bool t_grad_enabled = true;

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw DimensionError(op + ": shape mismatch " + shape_to_string(a) + " vs " + shape_to_string(b));
}

[[noreturn]] void rank_error(const std::string& op, const Shape& a, std::size_t want) {
  throw DimensionError(op + ": expected rank " + std::to_string(want) + ", got " + shape_to_string(a));
}

Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& v : inputs) needs = needs || v.requires_grad();
  }
  Var out(std::move(value), false);
  if (needs) {
    Node& n = *out.node();
    n.requires_grad = true;
    for (auto& v : inputs) n.parents.push_back(v.node());
    n.backward_fn = std::move(fn);
  }
  return out;
}

std::vector<double>& grad_slot(Node& n) {
  if (n.value.grad.empty()) n.value.grad.assign(n.value.data.size(), 0.0);
  return n.value.grad;
}

void accumulate(Node& n, std::span<const double> g) {
  if (!n.requires_grad) return;
  auto& slot = grad_slot(n);
  for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

void backward(const Var& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined loss");
  if (loss.numel() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS; parents are visited in recorded order so the
  // resulting schedule is deterministic.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward_fn) n->value.grad.assign(n->value.data.size(), 0.0);
  }
  grad_slot(*loss.node())[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

namespace ops {

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) shape_error("matmul", sa, sb);
  const kernels::MatmulGeom g{sa[0], sa[1], sb[1]};
  Tensor out({g.m, g.n});
  kernels::matmul(a.value().data, b.value().data, out.data, g);
  return make_result(std::move(out), {a, b}, [g](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      std::vector<double> da(g.m * g.k);
      kernels::matmul_grad_a(self.value.grad, pb.value.data, da, g);
      accumulate(pa, da);
    }
    if (pb.requires_grad) {
      std::vector<double> db(g.k * g.n);
      kernels::matmul_grad_b(pa.value.data, self.value.grad, db, g);
      accumulate(pb, db);
    }
  });
}

Var linear(const Var& x, const Var& w, const Var& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 2 || sw.size() != 2 || sx[1] != sw[1]) shape_error("linear", sx, sw);
  const kernels::LinearGeom g{sx[0], sx[1], sw[0]};
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{g.out}) shape_error("linear(bias)", bias.shape(), Shape{g.out});
  Tensor out({g.batch, g.out});
  std::span<const double> bspan;
  if (has_bias) bspan = bias.value().data;
  kernels::linear(x.value().data, w.value().data, bspan, out.data, g);
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, has_bias](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    const auto& dy = self.value.grad;
    if (px.requires_grad) {
      std::vector<double> dx(g.batch * g.in);
      kernels::linear_grad_x(dy, pw.value.data, dx, g);
      accumulate(px, dx);
    }
    if (pw.requires_grad) {
      std::vector<double> dw(g.out * g.in);
      kernels::linear_grad_w(px.value.data, dy, dw, g);
      accumulate(pw, dw);
    }
    if (has_bias && parent(self, 2).requires_grad) {
      std::vector<double> db(g.out, 0.0);
      for (std::size_t b = 0; b < g.batch; ++b) {
        for (std::size_t o = 0; o < g.out; ++o) db[o] += dy[b * g.out + o];
      }
      accumulate(parent(self, 2), db);
    }
  });
}

namespace {

std::vector<double> bias_grad(const std::vector<double>& dy, std::size_t out_ch) {
  std::vector<double> db(out_ch, 0.0);
  const std::size_t positions = dy.size() / out_ch;
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t c = 0; c < out_ch; ++c) db[c] += dy[p * out_ch + c];
  }
  return db;
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 4) rank_error("conv2d", sx, 4);
  if (sw.size() != 4) rank_error("conv2d(weight)", sw, 4);
  if (sw[0] != sw[1] || sw[0] % 2 == 0 || sw[2] != sx[3]) shape_error("conv2d", sx, sw);
  const kernels::Conv2dGeom g{sx[0], sx[1], sx[2], sx[3], sw[3], sw[0]};
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{g.out_ch}) shape_error("conv2d(bias)", bias.shape(), Shape{g.out_ch});
  Tensor out({g.batch, g.height, g.width, g.out_ch});
  std::span<const double> bspan;
  if (has_bias) bspan = bias.value().data;
  kernels::conv2d(x.value().data, w.value().data, bspan, out.data, g);
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, has_bias](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    const auto& dy = self.value.grad;
    if (px.requires_grad) {
      std::vector<double> dx(px.value.data.size());
      kernels::conv2d_grad_input(dy, pw.value.data, dx, g);
      accumulate(px, dx);
    }
    if (pw.requires_grad) {
      std::vector<double> dw(pw.value.data.size());
      kernels::conv2d_grad_weight(px.value.data, dy, dw, g);
      accumulate(pw, dw);
    }
    if (has_bias && parent(self, 2).requires_grad) {
      accumulate(parent(self, 2), bias_grad(dy, g.out_ch));
    }
  });
}

Var conv1d(const Var& x, const Var& w, const Var& bias) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  if (sx.size() != 3) rank_error("conv1d", sx, 3);
  if (sw.size() != 3) rank_error("conv1d(weight)", sw, 3);
  if (sw[0] % 2 == 0 || sw[1] != sx[2]) shape_error("conv1d", sx, sw);
  const kernels::Conv1dGeom g{sx[0], sx[1], sx[2], sw[2], sw[0]};
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{g.out_ch}) shape_error("conv1d(bias)", bias.shape(), Shape{g.out_ch});
  Tensor out({g.batch, g.length, g.out_ch});
  std::span<const double> bspan;
  if (has_bias) bspan = bias.value().data;
  kernels::conv1d(x.value().data, w.value().data, bspan, out.data, g);
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(bias);
  return make_result(std::move(out), std::move(inputs), [g, has_bias](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    const auto& dy = self.value.grad;
    if (px.requires_grad) {
      std::vector<double> dx(px.value.data.size());
      kernels::conv1d_grad_input(dy, pw.value.data, dx, g);
      accumulate(px, dx);
    }
    if (pw.requires_grad) {
      std::vector<double> dw(pw.value.data.size());
      kernels::conv1d_grad_weight(px.value.data, dy, dw, g);
      accumulate(pw, dw);
    }
    if (has_bias && parent(self, 2).requires_grad) {
      accumulate(parent(self, 2), bias_grad(dy, g.out_ch));
    }
  });
}

Var relu(const Var& x) {
  Tensor out(x.shape());
  const auto& xd = x.value().data;
  for (std::size_t i = 0; i < xd.size(); ++i) out.data[i] = xd[i] > 0.0 ? xd[i] : 0.0;
  return make_result(std::move(out), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    std::vector<double> dx(self.value.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = px.value.data[i] > 0.0 ? self.value.grad[i] : 0.0;
    accumulate(px, dx);
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x.shape());
  const auto& xd = x.value().data;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const double v = xd[i];
    if (v >= 0.0) {
      out.data[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out.data[i] = e / (1.0 + e);
    }
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    std::vector<double> dx(self.value.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double y = self.value.data[i];
      dx[i] = self.value.grad[i] * y * (1.0 - y);
    }
    accumulate(parent(self, 0), dx);
  });
}

Var log(const Var& x) {
  Tensor out(x.shape());
  const auto& xd = x.value().data;
  for (std::size_t i = 0; i < xd.size(); ++i) {
    if (!(xd[i] > 0.0)) throw UsageError("log: non-positive input " + std::to_string(xd[i]));
    out.data[i] = std::log(xd[i]);
  }
  return make_result(std::move(out), {x}, [](Node& self) {
    Node& px = parent(self, 0);
    std::vector<double> dx(self.value.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = self.value.grad[i] / px.value.data[i];
    accumulate(px, dx);
  });
}

Var clamp(const Var& x, double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("clamp: lo > hi");
  Tensor out(x.shape());
  const auto& xd = x.value().data;
  for (std::size_t i = 0; i < xd.size(); ++i) out.data[i] = std::clamp(xd[i], lo, hi);
  return make_result(std::move(out), {x}, [lo, hi](Node& self) {
    Node& px = parent(self, 0);
    std::vector<double> dx(self.value.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double v = px.value.data[i];
      dx[i] = (v >= lo && v <= hi) ? self.value.grad[i] : 0.0;
    }
    accumulate(px, dx);
  });
}

namespace {

template <typename F, typename Da, typename Db>
Var binary(const std::string& name, const Var& a, const Var& b, F f, Da da, Db db) {
  if (a.shape() != b.shape()) shape_error(name, a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = f(a.value().data[i], b.value().data[i]);
  return make_result(std::move(out), {a, b}, [da, db](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const std::size_t n = self.value.grad.size();
    std::vector<double> g(n);
    if (pa.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) g[i] = da(self.value.grad[i], pa.value.data[i], pb.value.data[i]);
      accumulate(pa, g);
    }
    if (pb.requires_grad) {
      for (std::size_t i = 0; i < n; ++i) g[i] = db(self.value.grad[i], pa.value.data[i], pb.value.data[i]);
      accumulate(pb, g);
    }
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; }, [](double g, double x, double) { return g * x; });
}

Var add_scalar(const Var& x, double c) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.value().data[i] + c;
  return make_result(std::move(out), {x}, [](Node& self) { accumulate(parent(self, 0), self.value.grad); });
}

Var scale(const Var& x, double c) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = x.value().data[i] * c;
  return make_result(std::move(out), {x}, [c](Node& self) {
    std::vector<double> dx(self.value.grad.size());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = self.value.grad[i] * c;
    accumulate(parent(self, 0), dx);
  });
}

Var scale_rows(const Var& x, const Var& s) {
  const Shape& sx = x.shape();
  if (sx.size() != 2) rank_error("scale_rows", sx, 2);
  if (s.numel() != sx[0]) shape_error("scale_rows", sx, s.shape());
  const std::size_t rows = sx[0], cols = sx[1];
  Tensor out(sx);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.data[r * cols + c] = s.value().data[r] * x.value().data[r * cols + c];
  }
  return make_result(std::move(out), {x, s}, [rows, cols](Node& self) {
    Node& px = parent(self, 0);
    Node& ps = parent(self, 1);
    const auto& dy = self.value.grad;
    if (px.requires_grad) {
      std::vector<double> dx(rows * cols);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] = dy[r * cols + c] * ps.value.data[r];
      }
      accumulate(px, dx);
    }
    if (ps.requires_grad) {
      std::vector<double> ds(rows, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) ds[r] += dy[r * cols + c] * px.value.data[r * cols + c];
      }
      accumulate(ps, ds);
    }
  });
}

Var stable_softmax(const Var& x) {
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.numel() / cols;
  Tensor out(x.shape());
  const auto& xd = x.value().data;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * cols;
    double* o = out.data.data() + r * cols;
    const double m = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - m);
      total += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  return make_result(std::move(out), {x}, [rows, cols](Node& self) {
    const auto& y = self.value.data;
    const auto& dy = self.value.grad;
    std::vector<double> dx(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += dy[r * cols + c] * y[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] = y[r * cols + c] * (dy[r * cols + c] - dot);
    }
    accumulate(parent(self, 0), dx);
  });
}

Var log_sum_exp(const Var& x) {
  const Shape& sx = x.shape();
  const std::size_t cols = sx.back();
  const std::size_t rows = x.numel() / cols;
  Shape out_shape(sx.begin(), sx.end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Tensor out(out_shape);
  const auto& xd = x.value().data;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * cols;
    const double m = *std::max_element(in, in + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(in[c] - m);
    out.data[r] = m + std::log(total);
  }
  return make_result(std::move(out), {x}, [rows, cols](Node& self) {
    Node& px = parent(self, 0);
    std::vector<double> dx(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const double lse = self.value.data[r];
      for (std::size_t c = 0; c < cols; ++c) {
        dx[r * cols + c] = self.value.grad[r] * std::exp(px.value.data[r * cols + c] - lse);
      }
    }
    accumulate(px, dx);
  });
}

Var global_average_pool(const Var& x) {
  const Shape& sx = x.shape();
  if (sx.size() < 2) rank_error("global_average_pool", sx, 2);
  const std::size_t batch = sx.front(), ch = sx.back();
  const std::size_t positions = x.numel() / (batch * ch);
  Tensor out({batch, ch});
  const auto& xd = x.value().data;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < positions; ++p) {
      for (std::size_t c = 0; c < ch; ++c) out.data[b * ch + c] += xd[(b * positions + p) * ch + c];
    }
    for (std::size_t c = 0; c < ch; ++c) out.data[b * ch + c] /= static_cast<double>(positions);
  }
  return make_result(std::move(out), {x}, [batch, positions, ch](Node& self) {
    std::vector<double> dx(batch * positions * ch);
    const double inv = 1.0 / static_cast<double>(positions);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t c = 0; c < ch; ++c) dx[(b * positions + p) * ch + c] = self.value.grad[b * ch + c] * inv;
      }
    }
    accumulate(parent(self, 0), dx);
  });
}

Var avg_pool2(const Var& x) {
  const Shape& sx = x.shape();
  if (sx.size() != 4) rank_error("avg_pool2", sx, 4);
  if (sx[1] % 2 != 0 || sx[2] % 2 != 0) {
    throw DimensionError("avg_pool2: spatial dims must be even, got " + shape_to_string(sx));
  }
  const std::size_t B = sx[0], H = sx[1], W = sx[2], C = sx[3];
  const std::size_t oh = H / 2, ow = W / 2;
  Tensor out({B, oh, ow, C});
  const auto& xd = x.value().data;
  auto at = [&](std::size_t b, std::size_t h, std::size_t w, std::size_t c) { return ((b * H + h) * W + w) * C + c; };
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t h = 0; h < oh; ++h) {
      for (std::size_t w = 0; w < ow; ++w) {
        for (std::size_t c = 0; c < C; ++c) {
          const double s = xd[at(b, 2 * h, 2 * w, c)] + xd[at(b, 2 * h, 2 * w + 1, c)] +
                           xd[at(b, 2 * h + 1, 2 * w, c)] + xd[at(b, 2 * h + 1, 2 * w + 1, c)];
          out.data[((b * oh + h) * ow + w) * C + c] = 0.25 * s;
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [B, H, W, C](Node& self) {
    const std::size_t oh = H / 2, ow = W / 2;
    std::vector<double> dx(B * H * W * C);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) {
          for (std::size_t c = 0; c < C; ++c) {
            dx[((b * H + h) * W + w) * C + c] = 0.25 * self.value.grad[((b * oh + h / 2) * ow + w / 2) * C + c];
          }
        }
      }
    }
    accumulate(parent(self, 0), dx);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  const Shape& first = parts.front().shape();
  const Shape lead(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) shape_error("concat", first, s);
    widths.push_back(s.back());
    total += s.back();
  }
  const std::size_t rows = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& src = parts[k].value().data;
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(src.data() + r * widths[k], widths[k], out.data.data() + r * total + offset);
    }
    offset += widths[k];
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return make_result(std::move(out), std::move(inputs), [rows, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        std::vector<double> g(rows * widths[k]);
        for (std::size_t r = 0; r < rows; ++r) {
          std::copy_n(self.value.grad.data() + r * total + offset, widths[k], g.data() + r * widths[k]);
        }
        accumulate(p, g);
      }
      offset += widths[k];
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) shape_error("reshape", x.shape(), shape);
  Tensor out(std::move(shape), x.value().data);
  return make_result(std::move(out), {x}, [](Node& self) { accumulate(parent(self, 0), self.value.grad); });
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data) total += v;
  return make_result(Tensor::scalar(total), {x}, [](Node& self) {
    std::vector<double> dx(parent(self, 0).value.data.size(), self.value.grad[0]);
    accumulate(parent(self, 0), dx);
  });
}

Var mean(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data) total += v;
  const double n = static_cast<double>(x.numel());
  return make_result(Tensor::scalar(total / n), {x}, [n](Node& self) {
    std::vector<double> dx(parent(self, 0).value.data.size(), self.value.grad[0] / n);
    accumulate(parent(self, 0), dx);
  });
}

Var pick(const Var& x, std::span<const std::size_t> index) {
  const Shape& sx = x.shape();
  if (sx.size() != 2) rank_error("pick", sx, 2);
  if (index.size() != sx[0]) shape_error("pick", sx, Shape{index.size()});
  const std::size_t rows = sx[0], cols = sx[1];
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out({rows});
  for (std::size_t r = 0; r < rows; ++r) {
    if (idx[r] >= cols) {
      throw UsageError("pick: index " + std::to_string(idx[r]) + " out of range for " + std::to_string(cols) + " columns");
    }
    out.data[r] = x.value().data[r * cols + idx[r]];
  }
  return make_result(std::move(out), {x}, [rows, cols, idx](Node& self) {
    std::vector<double> dx(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) dx[r * cols + idx[r]] = self.value.grad[r];
    accumulate(parent(self, 0), dx);
  });
}

}  // namespace ops

}  // namespace bfscl
