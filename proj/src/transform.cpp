#include "gips/transform.hpp"

#include "gips/error.hpp"
#include "gips/parallel.hpp"
#include "gips/projector.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace gips {
namespace {

class IdentityRefiner final : public Refiner {
 public:
  FeatureVolume refine(const FeatureVolume& volume) const override { return volume; }
  std::string name() const override { return "identity"; }
};

class SmoothingRefiner final : public Refiner {
 public:
  explicit SmoothingRefiner(double sigma_mm) : sigma_mm_(sigma_mm) {}

  FeatureVolume refine(const FeatureVolume& volume) const override {
    FeatureVolume out = volume;
    const auto& d = volume.grid.dims;
    // Axis 0 = z, 1 = y, 2 = x; element strides in the z-major layout.
    const std::size_t strides[3] = {static_cast<std::size_t>(d[1]) * d[2],
                                    static_cast<std::size_t>(d[2]), 1};
    for (int axis = 2; axis >= 0; --axis) {
      const std::vector<double> taps = gaussian_taps(sigma_mm_ / volume.grid.spacing[axis]);
      if (taps.size() == 1) continue;
      for (int c = 0; c < out.channels; ++c) blur_axis(out.channel(c), d, axis, strides, taps);
    }
    return out;
  }

  std::string name() const override {
    char buf[64];
    std::snprintf(buf, sizeof buf, "smoothing:%g", sigma_mm_);
    return buf;
  }

 private:
  static void blur_axis(std::span<float> data, const std::array<int, 3>& dims, int axis,
                        const std::size_t (&strides)[3], const std::vector<double>& taps) {
    const int n = dims[axis];
    const int radius = static_cast<int>(taps.size() / 2);
    const std::size_t stride = strides[axis];
    // Lines along `axis`, enumerated by their first element.
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    const std::size_t lines_outer = static_cast<std::size_t>(dims[o1]);
    parallel_for(lines_outer, [&](std::size_t a) {
      std::vector<float> line(static_cast<std::size_t>(n));
      for (int b = 0; b < dims[o2]; ++b) {
        const std::size_t base = a * strides[o1] + static_cast<std::size_t>(b) * strides[o2];
        for (int i = 0; i < n; ++i) line[i] = data[base + i * stride];
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int t = -radius; t <= radius; ++t) {
            const int j = std::min(std::max(i + t, 0), n - 1);
            acc += taps[t + radius] * line[j];
          }
          data[base + i * stride] = static_cast<float>(acc);
        }
      }
    });
  }

  double sigma_mm_;
};

void check_refined(const FeatureVolume& in, const FeatureVolume& out, const Refiner& r) {
  const bool same_shape = out.grid == in.grid && out.channels == in.channels &&
                          out.data.size() == in.data.size();
  require(same_shape, Errc::contract,
          "refiner '" + r.name() + "' changed the feature volume shape");
  for (float v : out.data)
    require(std::isfinite(v), Errc::contract,
            "refiner '" + r.name() + "' produced non-finite values");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

RefinerPtr identity_refiner() { return std::make_shared<IdentityRefiner>(); }

RefinerPtr smoothing_refiner(double sigma_mm) {
  require(std::isfinite(sigma_mm) && sigma_mm > 0.0, Errc::invalid_argument,
          "smoothing sigma must be > 0");
  return std::make_shared<SmoothingRefiner>(sigma_mm);
}

std::vector<double> gaussian_taps(double sigma_voxels) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_voxels));
  if (radius <= 0) return {1.0};
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma_voxels * sigma_voxels));
    taps[i + radius] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

void TransformPlan::validate() const {
  require(!sources.empty(), Errc::invalid_argument, "transform plan needs source views");
  require(!target_angles.empty(), Errc::invalid_argument, "transform plan needs target angles");
  require(refiner != nullptr, Errc::invalid_argument, "transform plan needs a refiner");
  for (const auto& s : sources)
    require(std::isfinite(s.angle_deg), Errc::invalid_argument, "source angle must be finite");
  for (double a : target_angles)
    require(std::isfinite(a), Errc::invalid_argument, "target angle must be finite");
  geometry.validate();
  grid.validate();
}

TransformResult transform_projections(const TransformPlan& plan, TransformTimings* timings) {
  plan.validate();
  const double step = plan.step > 0.0 ? plan.step : default_step(plan.grid);
  using clock = std::chrono::steady_clock;
  TransformTimings local;

  auto t0 = clock::now();
  const FeatureVolume fused = back_project_multi(plan.sources, plan.geometry, step, plan.grid);
  local.back_project = seconds_since(t0);

  t0 = clock::now();
  TransformResult result;
  result.volume = plan.refiner->refine(fused);
  check_refined(fused, result.volume, *plan.refiner);
  local.refine = seconds_since(t0);

  t0 = clock::now();
  for (const auto& s : plan.sources)
    result.source_views.push_back(forward_project(result.volume, plan.geometry, s.angle_deg, step));
  for (double a : plan.target_angles)
    result.target_views.push_back(forward_project(result.volume, plan.geometry, a, step));
  local.forward_project = seconds_since(t0);

  if (timings) *timings = local;
  return result;
}

}  // namespace gips
