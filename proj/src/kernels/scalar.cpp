#include "jointgt/kernels.hpp"

namespace jointgt::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_scalar(double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

constexpr KernelTable kScalarTable{Isa::kScalar, dot_scalar, axpy_scalar, add_scalar,
                                   scale_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace jointgt::kernels
