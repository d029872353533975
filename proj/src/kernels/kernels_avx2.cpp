#include "kernels_internal.hpp"

#if GIPS_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cstdint>

#define GIPS_AVX2 __attribute__((target("avx2,fma")))

namespace gips::kernels {
namespace {

constexpr std::size_t kMaxGatherElements = std::size_t{1} << 31;

struct AxisVec {
  __m256i i0;
  __m256i i1;
  __m256 g0;  // 1 - frac
  __m256 g1;  // frac
};

GIPS_AVX2 inline AxisVec axis_vec(__m256 c, int n) {
  const __m256 hi = _mm256_set1_ps(static_cast<float>(n - 1));
  const __m256i hi_i = _mm256_set1_epi32(n - 1);
  c = _mm256_min_ps(_mm256_max_ps(c, _mm256_setzero_ps()), hi);
  __m256i i = _mm256_cvttps_epi32(c);
  i = _mm256_min_epi32(i, hi_i);
  const __m256 frac = _mm256_sub_ps(c, _mm256_cvtepi32_ps(i));
  AxisVec a;
  a.i0 = i;
  a.i1 = _mm256_min_epi32(_mm256_add_epi32(i, _mm256_set1_epi32(1)), hi_i);
  a.g0 = _mm256_sub_ps(_mm256_set1_ps(1.0f), frac);
  a.g1 = frac;
  return a;
}

// Eight lanes = eight consecutive samples; corner order matches the scalar
// stencil, (z, y, x) with x fastest. Lanes at or beyond `samples` get zero
// weight (their clamped indices stay in range).
struct StencilVec {
  __m256i index[8];
  __m256 weight[8];
};

GIPS_AVX2 inline StencilVec stencil_vec(const MarchGrid& g,
                                        const MarchSegment& seg, int k0) {
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256 kf = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(k0)), lane);
  const __m256 valid = _mm256_cmp_ps(
      kf, _mm256_set1_ps(static_cast<float>(seg.samples)), _CMP_LT_OQ);

  const __m256 px = _mm256_fmadd_ps(kf, _mm256_set1_ps(seg.delta[0]),
                                    _mm256_set1_ps(seg.start[0]));
  const __m256 py = _mm256_fmadd_ps(kf, _mm256_set1_ps(seg.delta[1]),
                                    _mm256_set1_ps(seg.start[1]));
  const __m256 pz = _mm256_fmadd_ps(kf, _mm256_set1_ps(seg.delta[2]),
                                    _mm256_set1_ps(seg.start[2]));
  AxisVec ax = axis_vec(px, g.nx);
  const AxisVec ay = axis_vec(py, g.ny);
  const AxisVec az = axis_vec(pz, g.nz);
  ax.g0 = _mm256_and_ps(ax.g0, valid);
  ax.g1 = _mm256_and_ps(ax.g1, valid);

  const __m256i nx = _mm256_set1_epi32(g.nx);
  const __m256i nxy = _mm256_set1_epi32(g.nx * g.ny);
  const __m256i zs[2] = {_mm256_mullo_epi32(az.i0, nxy), _mm256_mullo_epi32(az.i1, nxy)};
  const __m256i ys[2] = {_mm256_mullo_epi32(ay.i0, nx), _mm256_mullo_epi32(ay.i1, nx)};
  const __m256i xs[2] = {ax.i0, ax.i1};
  const __m256 gz[2] = {az.g0, az.g1};
  const __m256 gy[2] = {ay.g0, ay.g1};
  const __m256 gx[2] = {ax.g0, ax.g1};

  StencilVec s;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx, ++k) {
        s.index[k] = _mm256_add_epi32(_mm256_add_epi32(zs[dz], ys[dy]), xs[dx]);
        s.weight[k] = _mm256_mul_ps(_mm256_mul_ps(gz[dz], gy[dy]), gx[dx]);
      }
  return s;
}

GIPS_AVX2 inline float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

GIPS_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  return _mm_cvtsd_f64(s);
}

bool fits_int32(const MarchGrid& g) {
  return static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny) *
             static_cast<std::size_t>(g.nz) < kMaxGatherElements;
}

GIPS_AVX2 void march_gather(const float* volume, const MarchGrid& grid,
                            int channels, const MarchSegment& seg, float* sums) {
  if (!fits_int32(grid)) {
    scalar_kernels().march_gather(volume, grid, channels, seg, sums);
    return;
  }
  for (int c = 0; c < channels; ++c) {
    const float* plane = volume + static_cast<std::size_t>(c) * grid.channel_stride;
    __m256 acc = _mm256_setzero_ps();
    for (int k0 = 0; k0 < seg.samples; k0 += 8) {
      const StencilVec s = stencil_vec(grid, seg, k0);
      __m256 v = _mm256_mul_ps(s.weight[0], _mm256_i32gather_ps(plane, s.index[0], 4));
      for (int i = 1; i < 8; ++i)
        v = _mm256_fmadd_ps(s.weight[i], _mm256_i32gather_ps(plane, s.index[i], 4), v);
      acc = _mm256_add_ps(acc, v);
    }
    sums[c] = hsum(acc);
  }
}

GIPS_AVX2 void march_scatter(float* slab, const MarchGrid& grid, int z_lo,
                             int slab_nz, int channels, const MarchSegment& seg,
                             const float* values) {
  if (!fits_int32(grid)) {
    scalar_kernels().march_scatter(slab, grid, z_lo, slab_nz, channels, seg, values);
    return;
  }
  const std::size_t nxy =
      static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  const __m256i offset = _mm256_set1_epi32(static_cast<int>(static_cast<std::size_t>(z_lo) * nxy));
  const std::size_t slab_stride = static_cast<std::size_t>(slab_nz) * nxy;
  alignas(32) std::int32_t index[8][8];
  alignas(32) float weight[8][8];
  for (int k0 = 0; k0 < seg.samples; k0 += 8) {
    const StencilVec s = stencil_vec(grid, seg, k0);
    for (int i = 0; i < 8; ++i) {
      _mm256_store_si256(reinterpret_cast<__m256i*>(index[i]),
                         _mm256_sub_epi32(s.index[i], offset));
      _mm256_store_ps(weight[i], s.weight[i]);
    }
    const int lanes = seg.samples - k0 < 8 ? seg.samples - k0 : 8;
    for (int c = 0; c < channels; ++c) {
      float* plane = slab + static_cast<std::size_t>(c) * slab_stride;
      const float value = values[c];
      for (int j = 0; j < lanes; ++j)
        for (int i = 0; i < 8; ++i) plane[index[i][j]] += weight[i][j] * value;
    }
  }
}

template <typename Op>
GIPS_AVX2 inline double reduce_pairs(const float* a, const float* b,
                                     std::size_t n, Op op) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 va = _mm256_loadu_ps(a + i);
    const __m256 vb = _mm256_loadu_ps(b + i);
    acc0 = op(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(va)),
              _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    acc1 = op(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
              _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  // Tail through the same lane op on a zero-padded vector.
  if (i < n) {
    alignas(32) float ta[8] = {};
    alignas(32) float tb[8] = {};
    for (std::size_t j = 0; i + j < n; ++j) {
      ta[j] = a[i + j];
      tb[j] = b[i + j];
    }
    const __m256 va = _mm256_load_ps(ta);
    const __m256 vb = _mm256_load_ps(tb);
    __m256d t = op(_mm256_setzero_pd(), _mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                   _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
    t = op(t, _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
           _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
    acc += hsum(t);
  }
  return acc;
}

struct AbsDiffOp {
  GIPS_AVX2 __m256d operator()(__m256d acc, __m256d a, __m256d b) const {
    const __m256d sign = _mm256_set1_pd(-0.0);
    return _mm256_add_pd(acc, _mm256_andnot_pd(sign, _mm256_sub_pd(a, b)));
  }
};

struct SqDiffOp {
  GIPS_AVX2 __m256d operator()(__m256d acc, __m256d a, __m256d b) const {
    const __m256d d = _mm256_sub_pd(a, b);
    return _mm256_fmadd_pd(d, d, acc);
  }
};

struct DotOp {
  GIPS_AVX2 __m256d operator()(__m256d acc, __m256d a, __m256d b) const {
    return _mm256_fmadd_pd(a, b, acc);
  }
};

GIPS_AVX2 double sum_abs_diff(const float* a, const float* b, std::size_t n) {
  return reduce_pairs(a, b, n, AbsDiffOp{});
}

GIPS_AVX2 double sum_sq_diff(const float* a, const float* b, std::size_t n) {
  return reduce_pairs(a, b, n, SqDiffOp{});
}

GIPS_AVX2 double dot(const float* a, const float* b, std::size_t n) {
  return reduce_pairs(a, b, n, DotOp{});
}

GIPS_AVX2 void add_inplace(float* dst, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_add_ps(_mm256_loadu_ps(dst + i),
                                            _mm256_loadu_ps(src + i)));
  for (; i < n; ++i) dst[i] += src[i];
}

}  // namespace

const KernelTable& avx2_kernel_table() noexcept {
  static const KernelTable table{march_gather, march_scatter, sum_abs_diff,
                                 sum_sq_diff,  dot,           add_inplace};
  return table;
}

}  // namespace gips::kernels

#endif  // GIPS_HAVE_AVX2_KERNELS
