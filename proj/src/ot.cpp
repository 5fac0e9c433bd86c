#include "jointgt/ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jointgt/errors.hpp"
#include "jointgt/kernels.hpp"

namespace jointgt {

double TransportPlan::cost(std::span<const double> cost_matrix) const {
  if (cost_matrix.size() != plan.size()) throw ShapeError("transport cost: size mismatch");
  return kernels::active().dot(plan.data(), cost_matrix.data(), plan.size());
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> sums(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) sums[i] += plan[i * cols + j];
  }
  return sums;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> sums(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) sums[j] += plan[i * cols + j];
  }
  return sums;
}

double TransportPlan::row_violation() const {
  const auto sums = row_sums();
  double worst = 0.0;
  for (std::size_t i = 0; i < rows; ++i) worst = std::max(worst, std::abs(sums[i] - a[i]));
  return worst;
}

double TransportPlan::col_violation() const {
  const auto sums = col_sums();
  double worst = 0.0;
  for (std::size_t j = 0; j < cols; ++j) worst = std::max(worst, std::abs(sums[j] - b[j]));
  return worst;
}

namespace {

void check_marginal(std::span<const double> m, std::size_t expected, const char* which) {
  if (m.size() != expected) {
    throw MarginalError(std::string("marginal ") + which + " has " + std::to_string(m.size()) +
                        " entries, expected " + std::to_string(expected));
  }
  double total = 0.0;
  for (double v : m) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw MarginalError(std::string("marginal ") + which + " must be strictly positive");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw MarginalError(std::string("marginal ") + which + " must sum to 1");
  }
}

}  // namespace

TransportPlan ipot(std::span<const double> cost, std::size_t rows, std::size_t cols,
                   std::span<const double> a, std::span<const double> b, const OTConfig& config) {
  if (rows == 0 || cols == 0 || cost.size() != rows * cols) {
    throw ShapeError("ipot: cost matrix does not match " + std::to_string(rows) + " x " +
                     std::to_string(cols));
  }
  if (!(config.beta > 0.0) || config.inner_k == 0 || config.outer_n == 0) {
    throw UsageError("ipot: beta must be positive and K, N at least 1");
  }
  for (double c : cost) {
    if (!std::isfinite(c)) throw NumericError("ipot: non-finite cost entry");
  }
  check_marginal(a, rows, "a");
  check_marginal(b, cols, "b");

  const auto& kt = kernels::active();
  std::vector<double> kernel(rows * cols);  // A = exp(-C / beta)
  for (std::size_t k = 0; k < kernel.size(); ++k) kernel[k] = std::exp(-cost[k] / config.beta);

  TransportPlan result;
  result.rows = rows;
  result.cols = cols;
  result.a.assign(a.begin(), a.end());
  result.b.assign(b.begin(), b.end());
  result.plan.assign(rows * cols, 1.0);

  std::vector<double> sigma(cols, 1.0 / static_cast<double>(cols));
  std::vector<double> delta(rows, 0.0);
  std::vector<double> q(rows * cols);
  std::vector<double> qt_delta(cols);

  for (std::size_t t = 0; t < config.outer_n; ++t) {
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = kernel[k] * result.plan[k];
    for (std::size_t inner = 0; inner < config.inner_k; ++inner) {
      for (std::size_t i = 0; i < rows; ++i) delta[i] = a[i] / kt.dot(q.data() + i * cols, sigma.data(), cols);
      std::fill(qt_delta.begin(), qt_delta.end(), 0.0);
      for (std::size_t i = 0; i < rows; ++i) kt.axpy(delta[i], q.data() + i * cols, qt_delta.data(), cols);
      for (std::size_t j = 0; j < cols; ++j) sigma[j] = b[j] / qt_delta[j];
    }
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        result.plan[i * cols + j] = delta[i] * q[i * cols + j] * sigma[j];
      }
    }
  }
  for (double v : result.plan) {
    if (!std::isfinite(v)) throw NumericError("ipot: transport plan became non-finite");
  }
  return result;
}

TransportPlan ipot_uniform(std::span<const double> cost, std::size_t rows, std::size_t cols,
                           const OTConfig& config) {
  const std::vector<double> a(rows, 1.0 / static_cast<double>(rows));
  const std::vector<double> b(cols, 1.0 / static_cast<double>(cols));
  return ipot(cost, rows, cols, a, b, config);
}

}  // namespace jointgt
