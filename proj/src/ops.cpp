#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jointgt/errors.hpp"
#include "jointgt/kernels.hpp"
#include "jointgt/tensor.hpp"

namespace jointgt {
namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

const kernels::KernelTable& K() { return kernels::active(); }

// Builds the output node; history is kept only when it is needed.
Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_enabled()) {
    for (const Tensor& t : inputs) {
      if (t.requires_grad()) node->requires_grad = true;
    }
  }
  if (node->requires_grad) {
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor make_result_n(Shape shape, std::vector<double> value, std::span<const Tensor> inputs,
                     std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (grad_enabled()) {
    for (const Tensor& t : inputs) {
      if (t.requires_grad()) node->requires_grad = true;
    }
  }
  if (node->requires_grad) {
    for (const Tensor& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

// Parent slot i if it takes gradients, else nullptr.
std::vector<double>* grad_of(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

void require_matrix(const Tensor& t, const char* op) {
  if (!t.defined() || t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " +
                     (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " differ");
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  const auto& kt = K();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) kt.axpy(av[i * k + p], bv + p * n, out.data() + i * n, n);
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->value.data();
    const double* bv = self.parents[1]->value.data();
    const auto& kt = K();
    if (auto* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) (*ga)[i * k + p] += kt.dot(g + i * n, bv + p * n, n);
      }
    }
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) kt.axpy(av[i * k + p], g + i * n, gb->data() + p * n, n);
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k) {
    throw ShapeError("matmul_nt: " + shape_string(a.shape()) + " x " + shape_string(b.shape()) +
                     "^T");
  }
  std::vector<double> out(m * n);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  const auto& kt = K();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = kt.dot(av + i * k, bv + j * k, k);
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->value.data();
    const double* bv = self.parents[1]->value.data();
    const auto& kt = K();
    if (auto* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) kt.axpy(g[i * n + j], bv + j * k, ga->data() + i * k, k);
      }
    }
    if (auto* gb = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) kt.axpy(g[i * n + j], av + i * k, gb->data() + j * k, k);
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.values()[i * c + j];
  }
  return make_result({c, r}, std::move(out), {a}, [r, c](Node& self) {
    auto& ga = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.values().begin(), a.values().end());
  K().add(b.values().data(), out.data(), out.size());
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& kt = K();
    for (std::size_t i = 0; i < 2; ++i) {
      if (auto* g = grad_of(self, i)) kt.add(self.grad.data(), g->data(), g->size());
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& kt = K();
    if (auto* g = grad_of(self, 0)) kt.add(self.grad.data(), g->data(), g->size());
    if (auto* g = grad_of(self, 1)) kt.axpy(-1.0, self.grad.data(), g->data(), g->size());
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->value;
    const auto& bv = self.parents[1]->value;
    if (auto* g = grad_of(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    }
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.values().begin(), a.values().end());
  K().scale(c, out.data(), out.size());
  return make_result(a.shape(), std::move(out), {a}, [c](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    K().axpy(c, self.grad.data(), g.data(), g.size());
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_matrix(a, "add_row");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (row.rank() != 1 || row.dim(0) != n) {
    throw ShapeError("add_row: row " + shape_string(row.shape()) + " vs " + shape_string(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i) K().add(row.values().data(), out.data() + i * n, n);
  return make_result({m, n}, std::move(out), {a, row}, [m, n](Node& self) {
    const auto& kt = K();
    if (auto* g = grad_of(self, 0)) kt.add(self.grad.data(), g->data(), g->size());
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) kt.add(self.grad.data() + i * n, g->data(), n);
    }
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.values()[i];
    out[i] = 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x)));
  }
  return make_result(a.shape(), std::move(out), {a}, [](Node& self) {
    const auto& xv = self.parents[0]->value;
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = xv[i];
      const double t = std::tanh(kC * (x + kA * x * x * x));
      const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * x * x);
      g[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * x * dt);
    }
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({1}, {total}, {a}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const Tensor& p : parts) require_matrix(p, "concat");
  const std::size_t fixed = parts[0].dim(1 - axis);
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.dim(1 - axis) != fixed) {
      throw ShapeError("concat: " + shape_string(p.shape()) + " does not match " +
                       shape_string(parts[0].shape()) + " on axis " + std::to_string(axis));
    }
    total += p.dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    offsets.push_back(offset);
    const std::size_t pr = p.dim(0), pc = p.dim(1);
    for (std::size_t i = 0; i < pr; ++i) {
      for (std::size_t j = 0; j < pc; ++j) {
        const std::size_t r = axis == 0 ? offset + i : i;
        const std::size_t c = axis == 0 ? j : offset + j;
        out[r * cols + c] = p.values()[i * pc + j];
      }
    }
    offset += p.dim(axis);
  }
  return make_result_n({rows, cols}, std::move(out), parts, [axis, cols, offsets](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      auto* g = grad_of(self, k);
      if (g == nullptr) continue;
      const std::size_t pr = self.parents[k]->shape[0], pc = self.parents[k]->shape[1];
      for (std::size_t i = 0; i < pr; ++i) {
        for (std::size_t j = 0; j < pc; ++j) {
          const std::size_t r = axis == 0 ? offsets[k] + i : i;
          const std::size_t c = axis == 0 ? j : offsets[k] + j;
          (*g)[i * pc + j] += self.grad[r * cols + c];
        }
      }
    }
  });
}

Tensor stack(std::span<const Tensor> rows) {
  if (rows.empty()) throw ShapeError("stack: no inputs");
  const std::size_t d = rows[0].numel();
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const Tensor& r : rows) {
    if (r.rank() != 1 || r.numel() != d) {
      throw ShapeError("stack: expected vectors of length " + std::to_string(d) + ", got " +
                       shape_string(r.shape()));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return make_result_n({rows.size(), d}, std::move(out), rows, [d](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (auto* g = grad_of(self, k)) K().add(self.grad.data() + k * d, g->data(), d);
    }
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  if (begin > end || end > a.dim(0)) {
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of " + shape_string(a.shape()));
  }
  const std::size_t n = a.dim(1);
  std::vector<double> out(a.values().begin() + begin * n, a.values().begin() + end * n);
  return make_result({end - begin, n}, std::move(out), {a}, [begin, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    K().add(self.grad.data(), g.data() + begin * n, self.grad.size());
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  if (begin > end || end > a.dim(1)) {
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of " + shape_string(a.shape()));
  }
  const std::size_t m = a.dim(0), n = a.dim(1), w = end - begin;
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.values().begin() + i * n + begin, w, out.begin() + i * w);
  }
  return make_result({m, w}, std::move(out), {a}, [m, n, w, begin](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) K().add(self.grad.data() + i * w, g.data() + i * n + begin, w);
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_matrix(a, "gather_rows");
  const std::size_t n = a.dim(1);
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (std::size_t r : rows) {
    if (r >= a.dim(0)) throw IndexError("gather_rows: row " + std::to_string(r) + " out of range");
    out.insert(out.end(), a.values().begin() + r * n, a.values().begin() + (r + 1) * n);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_result({idx.size(), n}, std::move(out), {a}, [idx, n](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k) K().add(self.grad.data() + k * n, g.data() + idx[k] * n, n);
  });
}

Tensor scatter_add_rows(const Tensor& base, const Tensor& src, std::span<const int> src_row) {
  require_matrix(base, "scatter_add_rows");
  require_matrix(src, "scatter_add_rows");
  const std::size_t rows = base.dim(0), n = base.dim(1);
  if (src.dim(1) != n || src_row.size() != rows) {
    throw ShapeError("scatter_add_rows: base " + shape_string(base.shape()) + ", src " +
                     shape_string(src.shape()) + ", map of " + std::to_string(src_row.size()));
  }
  std::vector<double> out(base.values().begin(), base.values().end());
  for (std::size_t r = 0; r < rows; ++r) {
    if (src_row[r] < 0) continue;
    if (static_cast<std::size_t>(src_row[r]) >= src.dim(0)) {
      throw IndexError("scatter_add_rows: source row " + std::to_string(src_row[r]) + " out of range");
    }
    K().add(src.values().data() + src_row[r] * n, out.data() + r * n, n);
  }
  std::vector<int> map(src_row.begin(), src_row.end());
  return make_result({rows, n}, std::move(out), {base, src}, [map, n](Node& self) {
    const auto& kt = K();
    if (auto* g = grad_of(self, 0)) kt.add(self.grad.data(), g->data(), g->size());
    if (auto* g = grad_of(self, 1)) {
      for (std::size_t r = 0; r < map.size(); ++r) {
        if (map[r] >= 0) kt.add(self.grad.data() + r * n, g->data() + map[r] * n, n);
      }
    }
  });
}

namespace {

// Lanes along which a normalization runs: `count` lanes of `length` entries,
// lane l starting at start(l) with stride `stride`.
struct Lanes {
  std::size_t count;
  std::size_t length;
  std::size_t stride;
  std::size_t outer_step;
  std::size_t start(std::size_t l) const { return l * outer_step; }
};

Lanes lanes_for(const Tensor& x, std::size_t axis, const char* op) {
  if (x.rank() == 1 && axis == 0) return {1, x.dim(0), 1, 0};
  if (x.rank() == 2 && axis == 1) return {x.dim(0), x.dim(1), 1, x.dim(1)};
  if (x.rank() == 2 && axis == 0) return {x.dim(1), x.dim(0), x.dim(1), 1};
  throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for " +
                   shape_string(x.shape()));
}

}  // namespace

Tensor softmax(const Tensor& x, std::size_t axis) {
  const Lanes lanes = lanes_for(x, axis, "softmax");
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  for (std::size_t l = 0; l < lanes.count; ++l) {
    const std::size_t s = lanes.start(l);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lanes.length; ++i) mx = std::max(mx, xv[s + i * lanes.stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < lanes.length; ++i) {
      const double e = std::exp(xv[s + i * lanes.stride] - mx);
      out[s + i * lanes.stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < lanes.length; ++i) out[s + i * lanes.stride] /= total;
  }
  return make_result(x.shape(), std::move(out), {x}, [lanes](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const auto& y = self.value;
    for (std::size_t l = 0; l < lanes.count; ++l) {
      const std::size_t s = lanes.start(l);
      double inner = 0.0;
      for (std::size_t i = 0; i < lanes.length; ++i) {
        const std::size_t k = s + i * lanes.stride;
        inner += self.grad[k] * y[k];
      }
      for (std::size_t i = 0; i < lanes.length; ++i) {
        const std::size_t k = s + i * lanes.stride;
        g[k] += y[k] * (self.grad[k] - inner);
      }
    }
  });
}

Tensor log_softmax(const Tensor& x, std::size_t axis) {
  const Lanes lanes = lanes_for(x, axis, "log_softmax");
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  for (std::size_t l = 0; l < lanes.count; ++l) {
    const std::size_t s = lanes.start(l);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lanes.length; ++i) mx = std::max(mx, xv[s + i * lanes.stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < lanes.length; ++i) total += std::exp(xv[s + i * lanes.stride] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t i = 0; i < lanes.length; ++i) {
      out[s + i * lanes.stride] = xv[s + i * lanes.stride] - lse;
    }
  }
  return make_result(x.shape(), std::move(out), {x}, [lanes](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const auto& y = self.value;
    for (std::size_t l = 0; l < lanes.count; ++l) {
      const std::size_t s = lanes.start(l);
      double total = 0.0;
      for (std::size_t i = 0; i < lanes.length; ++i) total += self.grad[s + i * lanes.stride];
      for (std::size_t i = 0; i < lanes.length; ++i) {
        const std::size_t k = s + i * lanes.stride;
        g[k] += self.grad[k] - std::exp(y[k]) * total;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (gain.rank() != 1 || gain.dim(0) != n || bias.rank() != 1 || bias.dim(0) != n) {
    throw ShapeError("layer_norm: gain/bias must have length " + std::to_string(n));
  }
  std::vector<double> out(m * n);
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  const auto xv = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xv[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xv[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xv[i * n + j] - mean) * inv_std[i];
      out[i * n + j] = gain.values()[j] * xhat[i * n + j] + bias.values()[j];
    }
  }
  return make_result({m, n}, std::move(out), {x, gain, bias},
                     [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& gv = self.parents[1]->value;
                       const double* dy = self.grad.data();
                       if (auto* gx = grad_of(self, 0)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           double mean_d = 0.0;
                           double mean_dx = 0.0;
                           for (std::size_t j = 0; j < n; ++j) {
                             const double d = dy[i * n + j] * gv[j];
                             mean_d += d;
                             mean_dx += d * xhat[i * n + j];
                           }
                           mean_d /= static_cast<double>(n);
                           mean_dx /= static_cast<double>(n);
                           for (std::size_t j = 0; j < n; ++j) {
                             const double d = dy[i * n + j] * gv[j];
                             (*gx)[i * n + j] += inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
                           }
                         }
                       }
                       if (auto* gg = grad_of(self, 1)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < n; ++j) (*gg)[j] += dy[i * n + j] * xhat[i * n + j];
                         }
                       }
                       if (auto* gb = grad_of(self, 2)) {
                         for (std::size_t i = 0; i < m; ++i) K().add(dy + i * n, gb->data(), n);
                       }
                     });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_matrix(table, "embedding_lookup");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<double> out;
  out.reserve(ids.size() * d);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw IndexError("embedding_lookup: id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    out.insert(out.end(), table.values().begin() + id * d, table.values().begin() + (id + 1) * d);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make_result({idx.size(), d}, std::move(out), {table}, [idx, d](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t k = 0; k < idx.size(); ++k) K().add(self.grad.data() + k * d, g.data() + idx[k] * d, d);
  });
}

Tensor masked_fill(const Tensor& x, const std::vector<bool>& mask, double value) {
  if (mask.size() != x.numel()) {
    throw ShapeError("masked_fill: mask of " + std::to_string(mask.size()) + " for " +
                     shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] = value;
  }
  return make_result(x.shape(), std::move(out), {x}, [mask](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask[i]) g[i] += self.grad[i];
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_id) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(n) + " rows");
  }
  std::vector<double> probs(n * vocab, 0.0);
  std::vector<int> tgt(targets.begin(), targets.end());
  double total = 0.0;
  std::size_t counted = 0;
  const auto lv = logits.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (tgt[i] == ignore_id) continue;
    if (tgt[i] < 0 || static_cast<std::size_t>(tgt[i]) >= vocab) {
      throw IndexError("cross_entropy: target " + std::to_string(tgt[i]) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    const double* row = lv.data() + i * vocab;
    const double mx = *std::max_element(row, row + vocab);
    double z = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) {
      probs[i * vocab + j] = std::exp(row[j] - mx);
      z += probs[i * vocab + j];
    }
    for (std::size_t j = 0; j < vocab; ++j) probs[i * vocab + j] /= z;
    total -= row[tgt[i]] - mx - std::log(z);
    ++counted;
  }
  const double loss = counted > 0 ? total / static_cast<double>(counted) : 0.0;
  return make_result({1}, {loss}, {logits},
                     [n, vocab, counted, ignore_id, tgt = std::move(tgt),
                      probs = std::move(probs)](Node& self) {
                       if (counted == 0) return;
                       auto& g = self.parents[0]->ensure_grad();
                       const double w = self.grad[0] / static_cast<double>(counted);
                       for (std::size_t i = 0; i < n; ++i) {
                         if (tgt[i] == ignore_id) continue;
                         for (std::size_t j = 0; j < vocab; ++j) g[i * vocab + j] += w * probs[i * vocab + j];
                         g[i * vocab + tgt[i]] -= w;
                       }
                     });
}

Tensor index_mean_pool(const Tensor& h, std::span<const std::size_t> positions) {
  require_matrix(h, "index_mean_pool");
  if (positions.empty()) throw EmptyPoolError("index_mean_pool: empty position set");
  const std::size_t len = h.dim(0), d = h.dim(1);
  for (std::size_t p : positions) {
    if (p >= len) {
      throw IndexError("index_mean_pool: position " + std::to_string(p) + " outside " +
                       std::to_string(len) + " rows");
    }
  }
  std::vector<double> out(h.values().begin() + positions[0] * d,
                          h.values().begin() + (positions[0] + 1) * d);
  for (std::size_t k = 1; k < positions.size(); ++k) {
    K().add(h.values().data() + positions[k] * d, out.data(), d);
  }
  const double inv = 1.0 / static_cast<double>(positions.size());
  if (positions.size() > 1) K().scale(inv, out.data(), d);
  std::vector<std::size_t> pos(positions.begin(), positions.end());
  return make_result({d}, std::move(out), {h}, [pos, d, inv](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t p : pos) K().axpy(inv, self.grad.data(), g.data() + p * d, d);
  });
}

Tensor cosine_cost(const Tensor& a, const Tensor& b) {
  require_matrix(a, "cosine_cost");
  require_matrix(b, "cosine_cost");
  const std::size_t p = a.dim(0), q = b.dim(0), d = a.dim(1);
  if (b.dim(1) != d) {
    throw ShapeError("cosine_cost: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  constexpr double kEps = 1e-12;
  const auto& kt = K();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  std::vector<double> na(p), nb(q);
  for (std::size_t i = 0; i < p; ++i) na[i] = std::sqrt(kt.dot(av + i * d, av + i * d, d));
  for (std::size_t j = 0; j < q; ++j) nb[j] = std::sqrt(kt.dot(bv + j * d, bv + j * d, d));
  std::vector<double> cosine(p * q);
  std::vector<double> out(p * q);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double den = std::max(na[i] * nb[j], kEps);
      cosine[i * q + j] = kt.dot(av + i * d, bv + j * d, d) / den;
      out[i * q + j] = 1.0 - cosine[i * q + j];
    }
  }
  return make_result({p, q}, std::move(out), {a, b},
                     [p, q, d, na = std::move(na), nb = std::move(nb),
                      cosine = std::move(cosine)](Node& self) {
                       const auto& kt = K();
                       const double* av = self.parents[0]->value.data();
                       const double* bv = self.parents[1]->value.data();
                       auto* ga = grad_of(self, 0);
                       auto* gb = grad_of(self, 1);
                       for (std::size_t i = 0; i < p; ++i) {
                         for (std::size_t j = 0; j < q; ++j) {
                           const double g = -self.grad[i * q + j];  // d(1 - cos) = -d cos
                           if (g == 0.0) continue;
                           const double den = na[i] * nb[j];
                           const double c = cosine[i * q + j];
                           if (den < kEps) {
                             if (ga) kt.axpy(g / kEps, bv + j * d, ga->data() + i * d, d);
                             if (gb) kt.axpy(g / kEps, av + i * d, gb->data() + j * d, d);
                             continue;
                           }
                           // d cos / d a = b / (|a||b|) - cos * a / |a|^2
                           if (ga) {
                             kt.axpy(g / den, bv + j * d, ga->data() + i * d, d);
                             kt.axpy(-g * c / (na[i] * na[i]), av + i * d, ga->data() + i * d, d);
                           }
                           if (gb) {
                             kt.axpy(g / den, av + i * d, gb->data() + j * d, d);
                             kt.axpy(-g * c / (nb[j] * nb[j]), bv + j * d, gb->data() + j * d, d);
                           }
                         }
                       }
                     });
}

}  // namespace jointgt
