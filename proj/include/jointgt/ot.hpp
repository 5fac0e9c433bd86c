#pragma once

// Inexact proximal point solver for discrete optimal transport.

#include <cstddef>
#include <span>
#include <vector>

namespace jointgt {

struct OTConfig {
  double beta = 1.0;         // proximal step is 1 / beta
  std::size_t inner_k = 1;   // scaling sweeps per proximal step
  std::size_t outer_n = 10;  // proximal steps
};

struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> plan;  // row-major, rows x cols
  std::vector<double> a;     // row marginal target
  std::vector<double> b;     // column marginal target

  double at(std::size_t i, std::size_t j) const { return plan[i * cols + j]; }
  // sum_ij T_ij C_ij
  double cost(std::span<const double> cost_matrix) const;
  std::vector<double> row_sums() const;
  std::vector<double> col_sums() const;
  // max_i |(T 1)_i - a_i| and max_j |(T^T 1)_j - b_j|
  double row_violation() const;
  double col_violation() const;
};

// Throws MarginalError for non-positive or mismatched marginals and
// NumericError for non-finite costs or a breakdown in the scaling.
TransportPlan ipot(std::span<const double> cost, std::size_t rows, std::size_t cols,
                   std::span<const double> a, std::span<const double> b, const OTConfig& config = {});

// Uniform marginals 1/rows and 1/cols.
TransportPlan ipot_uniform(std::span<const double> cost, std::size_t rows, std::size_t cols,
                           const OTConfig& config = {});

}  // namespace jointgt
