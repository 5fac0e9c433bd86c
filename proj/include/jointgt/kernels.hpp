#pragma once

// Inner-loop arithmetic used by the tensor library. Every routine has a
// portable scalar reference and, where the CPU supports it, a vectorized
// variant. The variant is picked once at startup; JOINTGT_KERNELS=scalar in
// the environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace jointgt::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y[i] += x[i]
  void (*add)(const double* x, double* y, std::size_t n);
  // y[i] *= a
  void (*scale)(double a, double* y, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks the instruction set.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Currently selected table.
const KernelTable& active();

// Overrides the selection (tests use this to compare variants).
void select(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace jointgt::kernels
