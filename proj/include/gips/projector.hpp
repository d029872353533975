#pragma once

// Matched cone-beam projector pair.
//
// forward_project integrates each channel along every source-to-pixel ray by
// uniform-step trilinear sampling: for a ray entering the grid's box at
// t_near and leaving at t_far, samples sit at t_near + (k + 1/2) * step for
// k = 0 .. ceil((t_far - t_near) / step) - 1 and the integral is
// step * sum(samples). back_project is the exact transpose of that
// discretization (same samples, same trilinear weights, scattered), so
// <A x, y> == <x, A^T y> up to float rounding.

#include <span>
#include <vector>

#include "gips/geometry.hpp"
#include "gips/kernels.hpp"
#include "gips/projection.hpp"
#include "gips/volume.hpp"

namespace gips {

// Half the smallest voxel spacing.
double default_step(const GridSpec& grid);

// The sampling segment of one ray in voxel-index coordinates. samples == 0
// when the ray misses the grid.
kernels::MarchSegment ray_segment(const Ray& ray, const GridSpec& grid, double step);

FeatureProjection forward_project(const FeatureVolume& volume, const ConeBeamGeometry& geom,
                                  double angle_deg, double step);
// Scalar-volume convenience (a one-channel DRR).
Projection forward_project(const Volume& volume, const ConeBeamGeometry& geom,
                           double angle_deg, double step);

FeatureVolume back_project(const FeatureProjection& projection, const ConeBeamGeometry& geom,
                           double angle_deg, double step, const GridSpec& grid);

// Mean of the per-view back-projections; each view's angle_deg is its gantry
// angle.
FeatureVolume back_project_multi(std::span<const FeatureProjection> views,
                                 const ConeBeamGeometry& geom, double step,
                                 const GridSpec& grid);

}  // namespace gips
