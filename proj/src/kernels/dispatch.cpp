#include "kernels_internal.hpp"

#include "gips/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>

namespace gips::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if GIPS_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

SimdLevel initial_level() noexcept {
  SimdLevel level = detected_simd_level();
  if (const char* env = std::getenv("GIPS_SIMD")) {
    if (auto requested = parse_simd_level(env)) {
      if (*requested == SimdLevel::scalar || level == SimdLevel::avx2) level = *requested;
    }
  }
  return level;
}

std::atomic<SimdLevel>& level_slot() noexcept {
  static std::atomic<SimdLevel> slot{initial_level()};
  return slot;
}

void check_pair(std::span<const float> a, std::span<const float> b) {
  require(a.size() == b.size(), Errc::shape_mismatch,
          "kernel operands differ in length");
}

}  // namespace

std::string_view to_string(SimdLevel level) noexcept {
  switch (level) {
    case SimdLevel::scalar: return "scalar";
    case SimdLevel::avx2: return "avx2";
  }
  return "unknown";
}

std::optional<SimdLevel> parse_simd_level(std::string_view name) noexcept {
  if (name == "scalar") return SimdLevel::scalar;
  if (name == "avx2") return SimdLevel::avx2;
  return std::nullopt;
}

SimdLevel detected_simd_level() noexcept {
  static const SimdLevel detected = cpu_has_avx2() ? SimdLevel::avx2 : SimdLevel::scalar;
  return detected;
}

SimdLevel active_simd_level() noexcept { return level_slot().load(); }

bool set_simd_level(SimdLevel level) noexcept {
  if (level == SimdLevel::avx2 && detected_simd_level() != SimdLevel::avx2) return false;
  level_slot().store(level);
  return true;
}

const KernelTable* avx2_kernels() noexcept {
#if GIPS_HAVE_AVX2_KERNELS
  if (detected_simd_level() == SimdLevel::avx2) return &avx2_kernel_table();
#endif
  return nullptr;
}

const KernelTable& active_kernels() noexcept {
  if (active_simd_level() == SimdLevel::avx2) {
    if (const KernelTable* t = avx2_kernels()) return *t;
  }
  return scalar_kernels();
}

std::array<int, 2> march_z_extent(const MarchGrid& grid,
                                  const MarchSegment& seg) noexcept {
  if (seg.samples <= 0) return {0, -1};
  const float first = seg.start[2];
  const float last = seg.start[2] + static_cast<float>(seg.samples - 1) * seg.delta[2];
  // One plane of margin on each side absorbs fma/non-fma rounding differences
  // between the estimate here and the kernels' own position arithmetic.
  const float lo = std::floor(std::min(first, last)) - 1.0f;
  const float hi = std::floor(std::max(first, last)) + 2.0f;
  const float top = static_cast<float>(grid.nz - 1);
  return {static_cast<int>(std::clamp(lo, 0.0f, top)),
          static_cast<int>(std::clamp(hi, 0.0f, top))};
}

double sum_abs_diff(std::span<const float> a, std::span<const float> b) {
  check_pair(a, b);
  return active_kernels().sum_abs_diff(a.data(), b.data(), a.size());
}

double sum_sq_diff(std::span<const float> a, std::span<const float> b) {
  check_pair(a, b);
  return active_kernels().sum_sq_diff(a.data(), b.data(), a.size());
}

double dot(std::span<const float> a, std::span<const float> b) {
  check_pair(a, b);
  return active_kernels().dot(a.data(), b.data(), a.size());
}

void add_inplace(std::span<float> dst, std::span<const float> src) {
  require(dst.size() == src.size(), Errc::shape_mismatch,
          "kernel operands differ in length");
  active_kernels().add_inplace(dst.data(), src.data(), dst.size());
}

}  // namespace gips::kernels
