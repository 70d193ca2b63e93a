#include "kernels_impl.hpp"

namespace fcl::kernels::scalar {

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* ap = a + p * m;
    const double* bp = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void pair_relu_dot(std::size_t n1, std::size_t n2, std::size_t h, const double* a, const double* b,
                   const double* v, double* s) {
  for (std::size_t i = 0; i < n1; ++i) {
    const double* ai = a + i * h;
    for (std::size_t j = 0; j < n2; ++j) {
      const double* bj = b + j * h;
      double acc = 0.0;
      for (std::size_t k = 0; k < h; ++k) {
        const double pre = ai[k] + bj[k];
        if (pre > 0.0) acc += v[k] * pre;
      }
      s[i * n2 + j] += acc;
    }
  }
}

void pair_relu_dot_backward(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                            const double* b, const double* g, double* mask_a, double* mask_b,
                            double* dv) {
  for (std::size_t i = 0; i < n1; ++i) {
    const double* ai = a + i * h;
    double* mai = mask_a + i * h;
    for (std::size_t j = 0; j < n2; ++j) {
      const double gij = g[i * n2 + j];
      if (gij == 0.0) continue;
      const double* bj = b + j * h;
      double* mbj = mask_b + j * h;
      for (std::size_t k = 0; k < h; ++k) {
        const double pre = ai[k] + bj[k];
        if (pre > 0.0) {
          mai[k] += gij;
          mbj[k] += gij;
          dv[k] += gij * pre;
        }
      }
    }
  }
}

}  // namespace fcl::kernels::scalar
