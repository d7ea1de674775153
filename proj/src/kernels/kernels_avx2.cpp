// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "essr/kernels.hpp"

namespace essr::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void symv_avx2(const double* s, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_avx2(s + r * n, x, n);
}

void increment_avx2(const double* z, const double* e, const double* const* c, const double* coef, std::size_t k,
                    double eta, double w, double* out, std::size_t n) {
  const __m256d vw = _mm256_set1_pd(w);
  const __m256d veta = _mm256_set1_pd(eta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_mul_pd(vw, _mm256_loadu_pd(e + i));
    for (std::size_t j = 0; j < k; ++j) {
      acc = _mm256_fnmadd_pd(_mm256_set1_pd(coef[j]), _mm256_loadu_pd(c[j] + i), acc);
    }
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(veta, acc, _mm256_loadu_pd(z + i)));
  }
  for (; i < n; ++i) {
    double acc = w * e[i];
    for (std::size_t j = 0; j < k; ++j) acc -= coef[j] * c[j][i];
    out[i] = z[i] + eta * acc;
  }
}

void scale_avx2(double* x, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vs));
  for (; i < n; ++i) x[i] *= s;
}

constexpr KernelTable kAvx2{"avx2", dot_avx2, symv_avx2, increment_avx2, scale_avx2};

}  // namespace

const KernelTable& avx2_table() noexcept { return kAvx2; }

}  // namespace essr::kernels::detail
