#pragma once

// Dense double-precision tensors with reverse-mode differentiation.
//
// A Tensor is a cheap handle to a shared node. Operations record their
// parents and a backward rule when any input requires a gradient and grad
// mode is on (see NoGradGuard). Storage is row-major and flat; shapes are
// rank 1 or rank 2 except for scalars, which have shape {1}.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jointgt {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool backward_done = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  // Trainable leaf.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  double item() const;
  double at(std::size_t i) const { return node_->value.at(i); }
  double at(std::size_t r, std::size_t c) const;

  bool has_grad() const { return !node_->grad.empty(); }
  // Empty span when no gradient has been accumulated.
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  // Allocates (if needed) and clears the gradient buffer.
  void zero_grad();
  void drop_grad() { node_->grad.clear(); }

  // Same values, no history.
  Tensor detach() const;

  // Reverse sweep from this scalar. Calling it twice on the same graph is a
  // UsageError; parameter gradients accumulate until zero_grad().
  void backward();

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Disables graph recording on this thread for its lifetime.
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

// ---------------------------------------------------------------------------
// Operations. Rank-2 operands unless stated otherwise; mismatches throw
// ShapeError.

Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)(k,n) -> (m,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)(n,k)^T -> (m,n)
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);  // equal shapes, any rank
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_row(const Tensor& a, const Tensor& row);  // (m,n) + (n) on every row
Tensor gelu(const Tensor& a);
Tensor sum(const Tensor& a);  // -> scalar

// Joins along axis 0 or 1; all other extents must agree.
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
// Stacks rank-1 vectors of equal length into a (k, d) matrix.
Tensor stack(std::span<const Tensor> rows);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
// out = base; out[r] += src[src_row[r]] wherever src_row[r] >= 0.
Tensor scatter_add_rows(const Tensor& base, const Tensor& src, std::span<const int> src_row);

// Normalizes along `axis` (0 or 1 for matrices, 0 for vectors).
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
// Replaces entries where mask is true; their gradient is cut.
Tensor masked_fill(const Tensor& x, const std::vector<bool>& mask, double value);
// Mean negative log-likelihood over rows whose target differs from ignore_id.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_id);
// Mean of the selected rows of h, as a rank-1 tensor of length h.dim(1).
Tensor index_mean_pool(const Tensor& h, std::span<const std::size_t> positions);
// C_ij = 1 - <a_i, b_j> / (|a_i| |b_j|), denominator clamped at 1e-12.
Tensor cosine_cost(const Tensor& a, const Tensor& b);

// ---------------------------------------------------------------------------

class ParamStore {
 public:
  using Entry = std::pair<std::string, Tensor>;

  Tensor& add(std::string name, Shape shape, std::vector<double> values);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grads();
  // Independent copy of every value; gradients are not copied.
  ParamStore clone() const;

 private:
  std::vector<Entry> entries_;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  // Denominator floor for the relative error, so that gradients that are
  // zero up to rounding compare on an absolute scale.
  double denom_floor = 1e-5;
};

struct ParamGradError {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::vector<ParamGradError> params;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compares backward() gradients of f with central differences, one element
// at a time. f must be deterministic in the store's values.
GradCheckReport grad_check(const std::function<Tensor(const ParamStore&)>& f, ParamStore& store,
                           const GradCheckOptions& options = {});

}  // namespace jointgt
