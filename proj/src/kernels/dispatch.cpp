#include <atomic>
#include <cstdlib>
#include <string>

#include "essr/error.hpp"
#include "essr/kernels.hpp"

namespace essr::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(ESSR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() noexcept {
  if (const char* env = std::getenv("ESSR_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return Backend::Scalar;
    if (want == "avx2" && available(Backend::Avx2)) return Backend::Avx2;
    if (want == "neon" && available(Backend::Neon)) return Backend::Neon;
  }
  if (available(Backend::Avx2)) return Backend::Avx2;
  if (available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Backend> g_backend{Backend::Scalar};

}  // namespace

bool available(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2: return cpu_has_avx2();
    case Backend::Neon:
#if defined(ESSR_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::string_view backend_name(Backend b) noexcept {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable& table(Backend b) {
  if (!available(b)) throw Error(ErrorKind::ConfigInvalid, "SIMD backend " + std::string(backend_name(b)) + " unavailable");
  switch (b) {
#if defined(ESSR_HAVE_AVX2)
    case Backend::Avx2: return detail::avx2_table();
#endif
#if defined(ESSR_HAVE_NEON)
    case Backend::Neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

void set_active(Backend b) {
  const KernelTable& t = table(b);
  g_backend.store(b);
  g_active.store(&t);
}

const KernelTable& active() noexcept {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const Backend b = detect();
    g_backend.store(b);
    t = &table(b);
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

Backend active_backend() noexcept {
  (void)active();
  return g_backend.load();
}

}  // namespace essr::kernels
