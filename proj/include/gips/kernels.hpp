#pragma once

// Data-parallel inner loops shared by the projector and the metrics.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant is picked once at startup from the CPU features and
// can be overridden (set_simd_level, or GIPS_SIMD=scalar|avx2 in the
// environment). The scalar and AVX2 variants agree to float rounding, not
// bit-for-bit; within one process the choice is fixed, so outputs stay
// deterministic.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace gips::kernels {

enum class SimdLevel { scalar, avx2 };

std::string_view to_string(SimdLevel level) noexcept;
std::optional<SimdLevel> parse_simd_level(std::string_view name) noexcept;

// Best level the running CPU supports.
SimdLevel detected_simd_level() noexcept;
SimdLevel active_simd_level() noexcept;
// Returns false (and leaves the level unchanged) if the CPU lacks support.
bool set_simd_level(SimdLevel level) noexcept;

// Dense channel-planar grid, x fastest. Sample coordinates are continuous
// voxel indices (x, y, z); they are clamped to [0, n-1] per axis before
// trilinear interpolation, so every sample reads in-range voxels.
struct MarchGrid {
  int nx = 1;
  int ny = 1;
  int nz = 1;
  std::size_t channel_stride = 1;  // elements between channel planes
};

// Samples start + k * delta for k in [0, samples).
struct MarchSegment {
  std::array<float, 3> start{};  // (x, y, z) voxel index coordinates
  std::array<float, 3> delta{};
  int samples = 0;
};

// sums[c] = sum over samples of the trilinear interpolant of channel c.
using MarchGatherFn = void (*)(const float* volume, const MarchGrid& grid,
                               int channels, const MarchSegment& seg,
                               float* sums);

// Transpose of MarchGatherFn: every sample scatters values[c] with its
// trilinear weights. Writes go to a z-slab [z_lo, z_lo + slab_nz) of the
// grid whose planes are slab_nz * ny * nx elements apart; the caller sizes the
// slab to cover every sample (see march_z_extent).
using MarchScatterFn = void (*)(float* slab, const MarchGrid& grid, int z_lo,
                                int slab_nz, int channels,
                                const MarchSegment& seg, const float* values);

using PairReduceFn = double (*)(const float* a, const float* b, std::size_t n);
using AddInplaceFn = void (*)(float* dst, const float* src, std::size_t n);

struct KernelTable {
  MarchGatherFn march_gather;
  MarchScatterFn march_scatter;
  PairReduceFn sum_abs_diff;  // sum |a - b|, double accumulation
  PairReduceFn sum_sq_diff;   // sum (a - b)^2
  PairReduceFn dot;           // sum a * b
  AddInplaceFn add_inplace;   // dst += src
};

const KernelTable& scalar_kernels() noexcept;
// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels() noexcept;
const KernelTable& active_kernels() noexcept;

// Inclusive range of z planes a segment can touch, clamped to the grid.
std::array<int, 2> march_z_extent(const MarchGrid& grid,
                                  const MarchSegment& seg) noexcept;

// Convenience wrappers over active_kernels().
double sum_abs_diff(std::span<const float> a, std::span<const float> b);
double sum_sq_diff(std::span<const float> a, std::span<const float> b);
double dot(std::span<const float> a, std::span<const float> b);
void add_inplace(std::span<float> dst, std::span<const float> src);

}  // namespace gips::kernels
