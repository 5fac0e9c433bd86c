#include "jointgt/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "jointgt/errors.hpp"

namespace jointgt {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << ')';
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::vector<double>& detail::Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  auto node = std::make_shared<detail::Node>();
  node->value.assign(shape_numel(shape), value);
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  if (rank() != 2) throw ShapeError("at(r, c) needs a matrix");
  return node_->value.at(r * node_->shape[1] + c);
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(node_->shape, node_->value); }

void Tensor::backward() {
  if (numel() != 1) throw ShapeError("backward() needs a scalar, got " + shape_string(shape()));
  if (node_->backward_done) {
    throw UsageError("backward() already ran on this graph; rebuild it after zero_grads()");
  }
  node_->backward_done = true;
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

// ---------------------------------------------------------------------------

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const auto& [name, t] : entries_) {
    copy.add(name, t.shape(), std::vector<double>(t.values().begin(), t.values().end()));
  }
  return copy;
}

Tensor& ParamStore::add(std::string name, Shape shape, std::vector<double> values) {
  if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  entries_.emplace_back(std::move(name), Tensor::parameter(std::move(shape), std::move(values)));
  return entries_.back().second;
}

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.first == name; });
}

const Tensor& ParamStore::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw IndexError("no parameter named '" + std::string(name) + "'");
}

Tensor& ParamStore::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParamStore&>(*this).get(name));
}

std::size_t ParamStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& e : entries_) e.second.zero_grad();
}

// ---------------------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(const ParamStore&)>& f, ParamStore& store,
                           const GradCheckOptions& options) {
  store.zero_grads();
  Tensor loss = f(store);
  loss.backward();

  GradCheckReport report;
  for (auto& [name, param] : store) {
    ParamGradError err;
    err.name = name;
    std::vector<double> analytic(param.grad().begin(), param.grad().end());
    auto values = param.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double plus = 0.0;
      double minus = 0.0;
      {
        NoGradGuard no_grad;
        values[i] = saved + options.eps;
        plus = f(store).item();
        values[i] = saved - options.eps;
        minus = f(store).item();
      }
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), options.denom_floor});
      const double rel_err = abs_err / denom;
      if (rel_err > err.max_rel_error) {
        err.max_rel_error = rel_err;
        err.worst_index = i;
      }
      err.max_abs_error = std::max(err.max_abs_error, abs_err);
    }
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.params.push_back(std::move(err));
  }
  report.passed = report.max_rel_error < options.tol;
  store.zero_grads();
  return report;
}

}  // namespace jointgt
