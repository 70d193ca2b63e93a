// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma and
// only ever called after a runtime CPU check.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace fcl::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double dot(const double* x, const double* y, std::size_t k) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 8 <= k; p += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 4), _mm256_loadu_pd(y + p + 4), acc1);
  }
  for (; p + 4 <= k; p += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; p < k; ++p) acc += x[p] * y[p];
  return acc;
}

// C (m×n) += A·B with A(i,p) = a[i*ars + p*acs], B row-major k×n.
void gemm_strided(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t ars,
                  std::size_t acs, const double* b, double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const double* bp = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        const double* ap = a + i * ars + p * acs;
        __m256d av = _mm256_broadcast_sd(ap);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(ap + ars);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(ap + 2 * ars);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(ap + 3 * ars);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      double* ci = c + i * n + j;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c00));
      _mm256_storeu_pd(ci + 4, _mm256_add_pd(_mm256_loadu_pd(ci + 4), c01));
      ci += n;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c10));
      _mm256_storeu_pd(ci + 4, _mm256_add_pd(_mm256_loadu_pd(ci + 4), c11));
      ci += n;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c20));
      _mm256_storeu_pd(ci + 4, _mm256_add_pd(_mm256_loadu_pd(ci + 4), c21));
      ci += n;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c30));
      _mm256_storeu_pd(ci + 4, _mm256_add_pd(_mm256_loadu_pd(ci + 4), c31));
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd(), c3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        const double* ap = a + i * ars + p * acs;
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(ap), b0, c0);
        c1 = _mm256_fmadd_pd(_mm256_broadcast_sd(ap + ars), b0, c1);
        c2 = _mm256_fmadd_pd(_mm256_broadcast_sd(ap + 2 * ars), b0, c2);
        c3 = _mm256_fmadd_pd(_mm256_broadcast_sd(ap + 3 * ars), b0, c3);
      }
      double* ci = c + i * n + j;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c0));
      _mm256_storeu_pd(ci + n, _mm256_add_pd(_mm256_loadu_pd(ci + n), c1));
      _mm256_storeu_pd(ci + 2 * n, _mm256_add_pd(_mm256_loadu_pd(ci + 2 * n), c2));
      _mm256_storeu_pd(ci + 3 * n, _mm256_add_pd(_mm256_loadu_pd(ci + 3 * n), c3));
    }
    for (; j < n; ++j) {
      for (std::size_t r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += a[(i + r) * ars + p * acs] * b[p * n + j];
        c[(i + r) * n + j] += acc;
      }
    }
  }
  for (; i < m; ++i) {
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < k; ++p) {
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + i * ars + p * acs),
                             _mm256_loadu_pd(b + p * n + j), c0);
      }
      double* ci = c + i * n + j;
      _mm256_storeu_pd(ci, _mm256_add_pd(_mm256_loadu_pd(ci), c0));
    }
    for (; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * ars + p * acs] * b[p * n + j];
      c[i * n + j] += acc;
    }
  }
}

}  // namespace

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  std::size_t i = 0;
  for (; i + 2 <= m; i += 2) {
    const double* a0 = a + i * k;
    const double* a1 = a0 + k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd();
      __m256d s02 = _mm256_setzero_pd(), s03 = _mm256_setzero_pd();
      __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd();
      __m256d s12 = _mm256_setzero_pd(), s13 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d x0 = _mm256_loadu_pd(a0 + p);
        const __m256d x1 = _mm256_loadu_pd(a1 + p);
        __m256d y = _mm256_loadu_pd(b0 + p);
        s00 = _mm256_fmadd_pd(x0, y, s00);
        s10 = _mm256_fmadd_pd(x1, y, s10);
        y = _mm256_loadu_pd(b1 + p);
        s01 = _mm256_fmadd_pd(x0, y, s01);
        s11 = _mm256_fmadd_pd(x1, y, s11);
        y = _mm256_loadu_pd(b2 + p);
        s02 = _mm256_fmadd_pd(x0, y, s02);
        s12 = _mm256_fmadd_pd(x1, y, s12);
        y = _mm256_loadu_pd(b3 + p);
        s03 = _mm256_fmadd_pd(x0, y, s03);
        s13 = _mm256_fmadd_pd(x1, y, s13);
      }
      double r[2][4] = {{hsum(s00), hsum(s01), hsum(s02), hsum(s03)},
                        {hsum(s10), hsum(s11), hsum(s12), hsum(s13)}};
      for (; p < k; ++p) {
        r[0][0] += a0[p] * b0[p];
        r[0][1] += a0[p] * b1[p];
        r[0][2] += a0[p] * b2[p];
        r[0][3] += a0[p] * b3[p];
        r[1][0] += a1[p] * b0[p];
        r[1][1] += a1[p] * b1[p];
        r[1][2] += a1[p] * b2[p];
        r[1][3] += a1[p] * b3[p];
      }
      for (std::size_t q = 0; q < 4; ++q) {
        c[i * n + j + q] += r[0][q];
        c[(i + 1) * n + j + q] += r[1][q];
      }
    }
    for (; j < n; ++j) {
      c[i * n + j] += dot(a0, b + j * k, k);
      c[(i + 1) * n + j] += dot(a1, b + j * k, k);
    }
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  gemm_strided(m, n, k, a, k, 1, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
             double* c) {
  gemm_strided(m, n, k, a, 1, m, b, c);
}

void pair_relu_dot(std::size_t n1, std::size_t n2, std::size_t h, const double* a, const double* b,
                   const double* v, double* s) {
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t hv = h - h % 4;
  for (std::size_t i = 0; i < n1; ++i) {
    const double* ai = a + i * h;
    std::size_t j = 0;
    for (; j + 4 <= n2; j += 4) {
      const double* b0 = b + j * h;
      const double* b1 = b0 + h;
      const double* b2 = b1 + h;
      const double* b3 = b2 + h;
      __m256d s0 = zero, s1 = zero, s2 = zero, s3 = zero;
      for (std::size_t k = 0; k < hv; k += 4) {
        const __m256d x = _mm256_loadu_pd(ai + k);
        const __m256d w = _mm256_loadu_pd(v + k);
        s0 = _mm256_fmadd_pd(w, _mm256_max_pd(_mm256_add_pd(x, _mm256_loadu_pd(b0 + k)), zero), s0);
        s1 = _mm256_fmadd_pd(w, _mm256_max_pd(_mm256_add_pd(x, _mm256_loadu_pd(b1 + k)), zero), s1);
        s2 = _mm256_fmadd_pd(w, _mm256_max_pd(_mm256_add_pd(x, _mm256_loadu_pd(b2 + k)), zero), s2);
        s3 = _mm256_fmadd_pd(w, _mm256_max_pd(_mm256_add_pd(x, _mm256_loadu_pd(b3 + k)), zero), s3);
      }
      double r[4] = {hsum(s0), hsum(s1), hsum(s2), hsum(s3)};
      const double* bs[4] = {b0, b1, b2, b3};
      for (std::size_t k = hv; k < h; ++k) {
        for (std::size_t q = 0; q < 4; ++q) {
          const double pre = ai[k] + bs[q][k];
          if (pre > 0.0) r[q] += v[k] * pre;
        }
      }
      for (std::size_t q = 0; q < 4; ++q) s[i * n2 + j + q] += r[q];
    }
    for (; j < n2; ++j) {
      const double* bj = b + j * h;
      __m256d s0 = zero;
      for (std::size_t k = 0; k < hv; k += 4) {
        const __m256d pre = _mm256_add_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bj + k));
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(v + k), _mm256_max_pd(pre, zero), s0);
      }
      double r = hsum(s0);
      for (std::size_t k = hv; k < h; ++k) {
        const double pre = ai[k] + bj[k];
        if (pre > 0.0) r += v[k] * pre;
      }
      s[i * n2 + j] += r;
    }
  }
}

void pair_relu_dot_backward(std::size_t n1, std::size_t n2, std::size_t h, const double* a,
                            const double* b, const double* g, double* mask_a, double* mask_b,
                            double* dv) {
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t h8 = h - h % 8;
  const std::size_t h4 = h - h % 4;
  for (std::size_t i = 0; i < n1; ++i) {
    const double* ai = a + i * h;
    const double* gi = g + i * n2;
    double* mai = mask_a + i * h;
    for (std::size_t k = 0; k < h8; k += 8) {
      const __m256d x0 = _mm256_loadu_pd(ai + k);
      const __m256d x1 = _mm256_loadu_pd(ai + k + 4);
      __m256d ma0 = zero, ma1 = zero, dv0 = zero, dv1 = zero;
      for (std::size_t j = 0; j < n2; ++j) {
        if (gi[j] == 0.0) continue;
        const __m256d gv = _mm256_broadcast_sd(gi + j);
        const double* bj = b + j * h + k;
        double* mbj = mask_b + j * h + k;
        const __m256d p0 = _mm256_add_pd(x0, _mm256_loadu_pd(bj));
        const __m256d p1 = _mm256_add_pd(x1, _mm256_loadu_pd(bj + 4));
        const __m256d g0 = _mm256_and_pd(_mm256_cmp_pd(p0, zero, _CMP_GT_OQ), gv);
        const __m256d g1 = _mm256_and_pd(_mm256_cmp_pd(p1, zero, _CMP_GT_OQ), gv);
        ma0 = _mm256_add_pd(ma0, g0);
        ma1 = _mm256_add_pd(ma1, g1);
        _mm256_storeu_pd(mbj, _mm256_add_pd(_mm256_loadu_pd(mbj), g0));
        _mm256_storeu_pd(mbj + 4, _mm256_add_pd(_mm256_loadu_pd(mbj + 4), g1));
        dv0 = _mm256_fmadd_pd(gv, _mm256_max_pd(p0, zero), dv0);
        dv1 = _mm256_fmadd_pd(gv, _mm256_max_pd(p1, zero), dv1);
      }
      _mm256_storeu_pd(mai + k, _mm256_add_pd(_mm256_loadu_pd(mai + k), ma0));
      _mm256_storeu_pd(mai + k + 4, _mm256_add_pd(_mm256_loadu_pd(mai + k + 4), ma1));
      _mm256_storeu_pd(dv + k, _mm256_add_pd(_mm256_loadu_pd(dv + k), dv0));
      _mm256_storeu_pd(dv + k + 4, _mm256_add_pd(_mm256_loadu_pd(dv + k + 4), dv1));
    }
    for (std::size_t k = h8; k < h4; k += 4) {
      const __m256d x0 = _mm256_loadu_pd(ai + k);
      __m256d ma0 = zero, dv0 = zero;
      for (std::size_t j = 0; j < n2; ++j) {
        if (gi[j] == 0.0) continue;
        const __m256d gv = _mm256_broadcast_sd(gi + j);
        double* mbj = mask_b + j * h + k;
        const __m256d p0 = _mm256_add_pd(x0, _mm256_loadu_pd(b + j * h + k));
        const __m256d g0 = _mm256_and_pd(_mm256_cmp_pd(p0, zero, _CMP_GT_OQ), gv);
        ma0 = _mm256_add_pd(ma0, g0);
        _mm256_storeu_pd(mbj, _mm256_add_pd(_mm256_loadu_pd(mbj), g0));
        dv0 = _mm256_fmadd_pd(gv, _mm256_max_pd(p0, zero), dv0);
      }
      _mm256_storeu_pd(mai + k, _mm256_add_pd(_mm256_loadu_pd(mai + k), ma0));
      _mm256_storeu_pd(dv + k, _mm256_add_pd(_mm256_loadu_pd(dv + k), dv0));
    }
    for (std::size_t k = h4; k < h; ++k) {
      for (std::size_t j = 0; j < n2; ++j) {
        const double gij = gi[j];
        if (gij == 0.0) continue;
        const double pre = ai[k] + b[j * h + k];
        if (pre > 0.0) {
          mai[k] += gij;
          mask_b[j * h + k] += gij;
          dv[k] += gij * pre;
        }
      }
    }
  }
}

}  // namespace fcl::kernels::avx2
