#include "gips/projector.hpp"

#include "gips/error.hpp"
#include "gips/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace gips {
namespace {

// Back-projection accumulates per row band into private z-slabs which are
// merged in band order. The band count is fixed so the summation order, and
// hence every output bit, is independent of the thread count.
constexpr int kBackProjectBands = 8;

void check_step(double step) {
  require(std::isfinite(step) && step > 0.0, Errc::invalid_argument,
          "projector step must be finite and > 0");
}

kernels::MarchGrid march_grid(const GridSpec& grid) {
  return {grid.dims[2], grid.dims[1], grid.dims[0], grid.voxel_count()};
}

}  // namespace

double default_step(const GridSpec& grid) { return 0.5 * grid.min_spacing(); }

kernels::MarchSegment ray_segment(const Ray& ray, const GridSpec& grid, double step) {
  kernels::MarchSegment seg;
  if (!ray.hits()) return seg;
  const double length = ray.t_far - ray.t_near;
  const double count = std::ceil(length / step);
  if (!(count >= 1.0)) return seg;
  seg.samples = static_cast<int>(count);

  const Vec3 p = ray.at(ray.t_near + 0.5 * step);
  const Vec3 d = step * ray.direction;
  // World (x, y, z) -> voxel index (i, j, k); grid triples are (z, y, x).
  seg.start = {static_cast<float>((p.x - grid.origin[2]) / grid.spacing[2]),
               static_cast<float>((p.y - grid.origin[1]) / grid.spacing[1]),
               static_cast<float>((p.z - grid.origin[0]) / grid.spacing[0])};
  seg.delta = {static_cast<float>(d.x / grid.spacing[2]),
               static_cast<float>(d.y / grid.spacing[1]),
               static_cast<float>(d.z / grid.spacing[0])};
  return seg;
}

FeatureProjection forward_project(const FeatureVolume& volume, const ConeBeamGeometry& geom,
                                  double angle_deg, double step) {
  check_step(step);
  geom.validate();
  volume.validate();
  require(std::isfinite(angle_deg), Errc::invalid_argument, "angle must be finite");

  const DetectorFrame frame = detector_frame(geom, angle_deg);
  const kernels::MarchGrid mg = march_grid(volume.grid);
  const auto& k = kernels::active_kernels();
  FeatureProjection out(geom.det_rows, geom.det_cols, volume.channels, angle_deg);
  const float fstep = static_cast<float>(step);

  parallel_for(static_cast<std::size_t>(geom.det_rows), [&](std::size_t r) {
    const int row = static_cast<int>(r);
    std::vector<float> sums(static_cast<std::size_t>(volume.channels));
    for (int col = 0; col < geom.det_cols; ++col) {
      const Ray ray = make_ray(frame.source, frame.pixel_center(row, col), volume.grid);
      const kernels::MarchSegment seg = ray_segment(ray, volume.grid, step);
      if (seg.samples == 0) continue;
      k.march_gather(volume.data.data(), mg, volume.channels, seg, sums.data());
      for (int c = 0; c < volume.channels; ++c) out.at(c, row, col) = sums[c] * fstep;
    }
  });
  return out;
}

Projection forward_project(const Volume& volume, const ConeBeamGeometry& geom,
                           double angle_deg, double step) {
  return forward_project(to_feature_volume(volume), geom, angle_deg, step);
}

FeatureVolume back_project(const FeatureProjection& projection, const ConeBeamGeometry& geom,
                           double angle_deg, double step, const GridSpec& grid) {
  check_step(step);
  geom.validate();
  grid.validate();
  projection.validate();
  check_detector_shape(projection, geom);
  require(std::isfinite(angle_deg), Errc::invalid_argument, "angle must be finite");

  const DetectorFrame frame = detector_frame(geom, angle_deg);
  const kernels::MarchGrid mg = march_grid(grid);
  const auto& k = kernels::active_kernels();
  const int channels = projection.channels;
  const std::size_t plane = static_cast<std::size_t>(grid.dims[1]) * grid.dims[2];

  const int bands = std::min(kBackProjectBands, geom.det_rows);
  struct Slab {
    int z_lo = 0;
    int nz = 0;
    std::vector<float> data;  // channels x nz x plane
  };
  std::vector<Slab> slabs(static_cast<std::size_t>(bands));

  parallel_for(static_cast<std::size_t>(bands), [&](std::size_t b) {
    const int row_begin = static_cast<int>(b * geom.det_rows / bands);
    const int row_end = static_cast<int>((b + 1) * geom.det_rows / bands);

    std::vector<kernels::MarchSegment> segs;
    std::vector<std::array<int, 2>> pixels;
    int z_lo = grid.dims[0];
    int z_hi = -1;
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < geom.det_cols; ++col) {
        bool nonzero = false;
        for (int c = 0; c < channels; ++c) nonzero |= projection.at(c, row, col) != 0.0f;
        if (!nonzero) continue;
        const Ray ray = make_ray(frame.source, frame.pixel_center(row, col), grid);
        const kernels::MarchSegment seg = ray_segment(ray, grid, step);
        if (seg.samples == 0) continue;
        const auto ext = kernels::march_z_extent(mg, seg);
        z_lo = std::min(z_lo, ext[0]);
        z_hi = std::max(z_hi, ext[1]);
        segs.push_back(seg);
        pixels.push_back({row, col});
      }
    }
    if (segs.empty()) return;

    Slab& slab = slabs[b];
    slab.z_lo = z_lo;
    slab.nz = z_hi - z_lo + 1;
    slab.data.assign(static_cast<std::size_t>(channels) * slab.nz * plane, 0.0f);
    std::vector<float> values(static_cast<std::size_t>(channels));
    for (std::size_t i = 0; i < segs.size(); ++i) {
      for (int c = 0; c < channels; ++c)
        values[c] = projection.at(c, pixels[i][0], pixels[i][1]) * static_cast<float>(step);
      k.march_scatter(slab.data.data(), mg, slab.z_lo, slab.nz, channels, segs[i],
                      values.data());
    }
  });

  FeatureVolume out(grid, channels);
  parallel_for(static_cast<std::size_t>(grid.dims[0]), [&](std::size_t z) {
    const int zi = static_cast<int>(z);
    for (const Slab& slab : slabs) {
      if (slab.nz == 0 || zi < slab.z_lo || zi >= slab.z_lo + slab.nz) continue;
      for (int c = 0; c < channels; ++c) {
        float* dst = out.channel(c).data() + z * plane;
        const float* src = slab.data.data() +
                           (static_cast<std::size_t>(c) * slab.nz + (zi - slab.z_lo)) * plane;
        k.add_inplace(dst, src, plane);
      }
    }
  });
  return out;
}

FeatureVolume back_project_multi(std::span<const FeatureProjection> views,
                                 const ConeBeamGeometry& geom, double step,
                                 const GridSpec& grid) {
  require(!views.empty(), Errc::invalid_argument, "back_project_multi needs at least one view");
  for (const auto& v : views)
    require(v.channels == views.front().channels, Errc::shape_mismatch,
            "views differ in channel count");

  // Summing in ascending-angle order makes the mean independent of the order
  // the views were listed in.
  std::vector<std::size_t> order(views.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return views[a].angle_deg < views[b].angle_deg;
  });

  const FeatureProjection& first = views[order.front()];
  FeatureVolume acc = back_project(first, geom, first.angle_deg, step, grid);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const FeatureProjection& view = views[order[i]];
    const FeatureVolume next = back_project(view, geom, view.angle_deg, step, grid);
    kernels::add_inplace(acc.data, next.data);
  }
  if (views.size() > 1) {
    const float scale = 1.0f / static_cast<float>(views.size());
    for (float& v : acc.data) v *= scale;
  }
  return acc;
}

}  // namespace gips
