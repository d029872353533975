#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gips/geometry.hpp"
#include "gips/projection.hpp"
#include "gips/volume.hpp"

namespace gips {

// 3D feature refinement applied between back- and forward projection.
// Implementations must preserve the grid and channel count and map finite
// input to finite output; transform_projections enforces both.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual FeatureVolume refine(const FeatureVolume& volume) const = 0;
  virtual std::string name() const = 0;
};

using RefinerPtr = std::shared_ptr<const Refiner>;

RefinerPtr identity_refiner();
// Separable Gaussian per channel, sigma in mm (converted per axis using the
// grid spacing), truncated at 3 sigma, edge-clamped.
RefinerPtr smoothing_refiner(double sigma_mm);

// Normalized sampled Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_taps(double sigma_voxels);

struct TransformPlan {
  std::vector<FeatureProjection> sources;  // angle_deg set per view
  std::vector<double> target_angles;
  RefinerPtr refiner = identity_refiner();
  ConeBeamGeometry geometry;
  GridSpec grid;
  double step = 0.0;  // <= 0 selects default_step(grid)

  void validate() const;
};

struct TransformTimings {
  double back_project = 0.0;  // seconds
  double refine = 0.0;
  double forward_project = 0.0;
};

struct TransformResult {
  std::vector<FeatureProjection> source_views;  // one per plan source, same order
  std::vector<FeatureProjection> target_views;  // one per target angle
  FeatureVolume volume;                          // refined feature volume
};

// V = mean back-projection of the sources, V' = refiner(V), then V' is
// forward-projected at every source angle and every target angle through the
// same operator.
TransformResult transform_projections(const TransformPlan& plan,
                                      TransformTimings* timings = nullptr);

}  // namespace gips
