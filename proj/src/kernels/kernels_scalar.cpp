#include "essr/kernels.hpp"

namespace essr::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void symv_scalar(const double* s, const double* x, double* y, std::size_t n) {
  for (std::size_t r = 0; r < n; ++r) y[r] = dot_scalar(s + r * n, x, n);
}

void increment_scalar(const double* z, const double* e, const double* const* c, const double* coef, std::size_t k,
                      double eta, double w, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = w * e[i];
    for (std::size_t j = 0; j < k; ++j) acc -= coef[j] * c[j][i];
    out[i] = z[i] + eta * acc;
  }
}

void scale_scalar(double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

constexpr KernelTable kScalar{"scalar", dot_scalar, symv_scalar, increment_scalar, scale_scalar};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace essr::kernels::detail
