#pragma once

// Data-parallel inner loops of the layer transform. Each kernel has a scalar
// reference implementation and, where the target supports it, an AVX2+FMA
// (x86-64) or NEON (aarch64) variant. The active backend is chosen once at
// first use from CPU features, or forced with ESSR_SIMD=scalar|avx2|neon.

#include <cstddef>
#include <span>
#include <string_view>

namespace essr::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = S x for a symmetric column-major n x n S (row r computed as <S[:,r], x>).
  void (*symv)(const double* s, const double* x, double* y, std::size_t n);
  // out = z + eta * (w * e - sum_j coef[j] * c[j])
  void (*increment)(const double* z, const double* e, const double* const* c, const double* coef, std::size_t k,
                    double eta, double w, double* out, std::size_t n);
  void (*scale)(double* x, double s, std::size_t n);
};

bool available(Backend b) noexcept;
const KernelTable& table(Backend b);  // throws ConfigInvalid if unavailable
Backend active_backend() noexcept;
const KernelTable& active() noexcept;
void set_active(Backend b);           // throws ConfigInvalid if unavailable
std::string_view backend_name(Backend b) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline double norm_sq(std::span<const double> a) noexcept { return active().dot(a.data(), a.data(), a.size()); }

inline void symv(std::span<const double> s, std::span<const double> x, std::span<double> y) noexcept {
  active().symv(s.data(), x.data(), y.data(), x.size());
}

inline void scale(std::span<double> x, double s) noexcept { active().scale(x.data(), s, x.size()); }

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(ESSR_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(ESSR_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace essr::kernels
