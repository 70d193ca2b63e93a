#pragma once

// Dense inner loops behind Matrix and MlpNet. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant selected at
// runtime. All kernels accumulate into their output (C += ...).

#include <cstddef>
#include <string_view>

namespace fcl::kernels {

enum class Isa { scalar, avx2 };

[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // C (m×n) += A (m×k) · Bᵀ, B stored n×k
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C (m×n) += A (m×k) · B (k×n)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C (m×n) += Aᵀ · B, A stored k×m, B stored k×n
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // Pairwise concat-critic scores:
  //   s[i*n2 + j] += Σ_k v[k] · relu(a[i*h + k] + b[j*h + k])
  void (*pair_relu_dot)(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                        const double* b, const double* v, double* s);
  // Reverse of pair_relu_dot for upstream gradient g (n1×n2):
  //   mask_a[i*h+k] += Σ_j g_ij · 1[a_ik + b_jk > 0]
  //   mask_b[j*h+k] += Σ_i g_ij · 1[a_ik + b_jk > 0]
  //   dv[k]         += Σ_ij g_ij · relu(a_ik + b_jk)
  // The caller multiplies mask_a / mask_b by v to get dA / dB.
  void (*pair_relu_dot_backward)(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                                 const double* b, const double* g, double* mask_a, double* mask_b,
                                 double* dv);
};

[[nodiscard]] const KernelTable& scalar_table() noexcept;
/// True when the binary was built with the variant and the CPU supports it.
[[nodiscard]] bool isa_supported(Isa isa) noexcept;
/// Table for a specific ISA; falls back to scalar when unsupported.
[[nodiscard]] const KernelTable& table_for(Isa isa) noexcept;

/// Kernels used by Matrix/MlpNet. Chosen once from the CPU features, or from
/// FCL_ISA=scalar|avx2 in the environment.
[[nodiscard]] const KernelTable& active() noexcept;
void set_active(Isa isa);

}  // namespace fcl::kernels
