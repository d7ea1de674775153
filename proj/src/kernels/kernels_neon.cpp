#include <arm_neon.h>

#include "essr/kernels.hpp"

namespace essr::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void symv_neon(const double* s, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_neon(s + r * n, x, n);
}

void increment_neon(const double* z, const double* e, const double* const* c, const double* coef, std::size_t k,
                    double eta, double w, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vmulq_n_f64(vld1q_f64(e + i), w);
    for (std::size_t j = 0; j < k; ++j) acc = vfmsq_n_f64(acc, vld1q_f64(c[j] + i), coef[j]);
    vst1q_f64(out + i, vfmaq_n_f64(vld1q_f64(z + i), acc, eta));
  }
  for (; i < n; ++i) {
    double acc = w * e[i];
    for (std::size_t j = 0; j < k; ++j) acc -= coef[j] * c[j][i];
    out[i] = z[i] + eta * acc;
  }
}

void scale_neon(double* x, double s, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), s));
  for (; i < n; ++i) x[i] *= s;
}

constexpr KernelTable kNeon{"neon", dot_neon, symv_neon, increment_neon, scale_neon};

}  // namespace

const KernelTable& neon_table() noexcept { return kNeon; }

}  // namespace essr::kernels::detail
