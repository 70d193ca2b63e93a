#include "fcl/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"

namespace fcl::kernels {
namespace {

constexpr KernelTable kScalar{Isa::scalar,        scalar::gemm_nt,       scalar::gemm_nn,
                              scalar::gemm_tn,    scalar::pair_relu_dot, scalar::pair_relu_dot_backward};

#if defined(FCL_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2,        avx2::gemm_nt,       avx2::gemm_nn,
                            avx2::gemm_tn,    avx2::pair_relu_dot, avx2::pair_relu_dot_backward};
#endif

const KernelTable* detect() noexcept {
  Isa want = isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
  if (const char* env = std::getenv("FCL_ISA")) {
    const std::string s(env);
    if (s == "scalar") want = Isa::scalar;
    if (s == "avx2" && isa_supported(Isa::avx2)) want = Isa::avx2;
  }
  return &table_for(want);
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() noexcept { return kScalar; }

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(FCL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table_for(Isa isa) noexcept {
#if defined(FCL_HAVE_AVX2)
  if (isa == Isa::avx2 && isa_supported(Isa::avx2)) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

void set_active(Isa isa) { current().store(&table_for(isa), std::memory_order_relaxed); }

}  // namespace fcl::kernels
