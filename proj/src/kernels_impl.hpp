#pragma once

#include <cstddef>

namespace fcl::kernels {

namespace scalar {
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void pair_relu_dot(std::size_t n1, std::size_t n2, std::size_t h, const double* a, const double* b,
                   const double* v, double* s);
void pair_relu_dot_backward(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                            const double* b, const double* g, double* mask_a, double* mask_b,
                            double* dv);
}  // namespace scalar

#if defined(FCL_HAVE_AVX2)
namespace avx2 {
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c);
void pair_relu_dot(std::size_t n1, std::size_t n2, std::size_t h, const double* a, const double* b,
                   const double* v, double* s);
void pair_relu_dot_backward(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                            const double* b, const double* g, double* mask_a, double* mask_b,
                            double* dv);
}  // namespace avx2
#endif

}  // namespace fcl::kernels
