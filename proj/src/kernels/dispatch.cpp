#include <atomic>
#include <cstdlib>
#include <string_view>

#include "jointgt/errors.hpp"
#include "jointgt/kernels.hpp"

namespace jointgt::kernels {
namespace {

const KernelTable* detect() {
  if (const char* env = std::getenv("JOINTGT_KERNELS"); env != nullptr) {
    if (std::string_view(env) == "scalar") return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void select(Isa isa) {
  const KernelTable* table = nullptr;
  switch (isa) {
    case Isa::kScalar: table = &scalar_table(); break;
    case Isa::kAvx2: table = avx2_table(); break;
    case Isa::kNeon: table = neon_table(); break;
  }
  if (table == nullptr) throw UsageError("kernel variant not available on this machine");
  slot().store(table, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

}  // namespace jointgt::kernels
