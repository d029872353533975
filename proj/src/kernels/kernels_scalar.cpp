#include "kernels_internal.hpp"

#include <algorithm>
#include <cmath>

namespace gips::kernels {
namespace {

struct AxisSample {
  int i0;
  int i1;
  float frac;
};

inline AxisSample axis_sample(float c, int n) {
  const float hi = static_cast<float>(n - 1);
  c = std::min(std::max(c, 0.0f), hi);
  int i = static_cast<int>(c);  // c >= 0: truncation is floor
  if (i > n - 1) i = n - 1;
  return {i, std::min(i + 1, n - 1), c - static_cast<float>(i)};
}

// Flat indices (relative to plane z = 0) and weights of the 8 trilinear
// corners, ordered (z, y, x) with x fastest.
struct Stencil {
  std::size_t index[8];
  float weight[8];
};

inline Stencil stencil(const MarchGrid& g, float x, float y, float z) {
  const AxisSample ax = axis_sample(x, g.nx);
  const AxisSample ay = axis_sample(y, g.ny);
  const AxisSample az = axis_sample(z, g.nz);
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  const std::size_t nxy = nx * static_cast<std::size_t>(g.ny);
  const std::size_t zs[2] = {static_cast<std::size_t>(az.i0) * nxy,
                             static_cast<std::size_t>(az.i1) * nxy};
  const std::size_t ys[2] = {static_cast<std::size_t>(ay.i0) * nx,
                             static_cast<std::size_t>(ay.i1) * nx};
  const std::size_t xs[2] = {static_cast<std::size_t>(ax.i0),
                             static_cast<std::size_t>(ax.i1)};
  const float gz[2] = {1.0f - az.frac, az.frac};
  const float gy[2] = {1.0f - ay.frac, ay.frac};
  const float gx[2] = {1.0f - ax.frac, ax.frac};
  Stencil s;
  int k = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx, ++k) {
        s.index[k] = zs[dz] + ys[dy] + xs[dx];
        s.weight[k] = (gz[dz] * gy[dy]) * gx[dx];
      }
  return s;
}

void march_gather(const float* volume, const MarchGrid& grid, int channels,
                  const MarchSegment& seg, float* sums) {
  for (int c = 0; c < channels; ++c) sums[c] = 0.0f;
  for (int k = 0; k < seg.samples; ++k) {
    const float kf = static_cast<float>(k);
    const Stencil s = stencil(grid, seg.start[0] + kf * seg.delta[0],
                              seg.start[1] + kf * seg.delta[1],
                              seg.start[2] + kf * seg.delta[2]);
    for (int c = 0; c < channels; ++c) {
      const float* plane = volume + static_cast<std::size_t>(c) * grid.channel_stride;
      float v = 0.0f;
      for (int i = 0; i < 8; ++i) v += s.weight[i] * plane[s.index[i]];
      sums[c] += v;
    }
  }
}

void march_scatter(float* slab, const MarchGrid& grid, int z_lo, int slab_nz,
                   int channels, const MarchSegment& seg, const float* values) {
  const std::size_t nxy =
      static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.ny);
  const std::size_t offset = static_cast<std::size_t>(z_lo) * nxy;
  const std::size_t slab_stride = static_cast<std::size_t>(slab_nz) * nxy;
  for (int k = 0; k < seg.samples; ++k) {
    const float kf = static_cast<float>(k);
    const Stencil s = stencil(grid, seg.start[0] + kf * seg.delta[0],
                              seg.start[1] + kf * seg.delta[1],
                              seg.start[2] + kf * seg.delta[2]);
    for (int c = 0; c < channels; ++c) {
      float* plane = slab + static_cast<std::size_t>(c) * slab_stride;
      for (int i = 0; i < 8; ++i) plane[s.index[i] - offset] += s.weight[i] * values[c];
    }
  }
}

double sum_abs_diff(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return acc;
}

double sum_sq_diff(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

double dot(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

void add_inplace(float* dst, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{march_gather, march_scatter, sum_abs_diff,
                                 sum_sq_diff,  dot,           add_inplace};
  return table;
}

}  // namespace gips::kernels
