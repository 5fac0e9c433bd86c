#include "jointgt/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace jointgt::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double result = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) result += x[i] * y[i];
  return result;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_neon(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += x[i];
}

void scale_neon(double a, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(vld1q_f64(y + i), va));
  for (; i < n; ++i) y[i] *= a;
}

constexpr KernelTable kNeonTable{Isa::kNeon, dot_neon, axpy_neon, add_neon, scale_neon};

}  // namespace

// Advanced SIMD is mandatory on AArch64.
const KernelTable* neon_table() { return &kNeonTable; }

}  // namespace jointgt::kernels

#else

namespace jointgt::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace jointgt::kernels

#endif
