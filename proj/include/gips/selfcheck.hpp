#pragma once

// Built-in verification checks for the projector pair, run by `gips selftest`
// and reused by the acceptance suite.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gips/geometry.hpp"
#include "gips/volume.hpp"

namespace gips {

struct CheckResult {
  std::string name;
  double residual = 0.0;   // worst measured value
  double tolerance = 0.0;  // pass iff residual <= tolerance
  bool passed = false;
  int cases = 0;
};

nlohmann::json to_json(const CheckResult& r);

// |<Ax, y> - <x, A^T y>| / (||Ax|| ||y||), worst over `trials` random pairs
// with random gantry angles. Tolerance 1e-5.
struct AdjointCheckOptions {
  GridSpec grid = GridSpec::centered({32, 32, 32}, {4.0, 4.0, 4.0});
  ConeBeamGeometry geometry{1000.0, 1500.0, 48, 64, {4.5, 4.5}, {0.0, 0.0}};
  int trials = 20;
  std::uint64_t seed = 1;
  double step = 0.0;  // <= 0: default_step
};
CheckResult check_adjoint(const AdjointCheckOptions& opt);

// Homogeneous cube (side 100 mm, mu 0.002 /mm) centered at the isocenter.
// Relative error of the central ray against 0.2 (tolerance 1%) and of
// `off_axis_rays` random rays against the exact ray/cube chord times mu
// (tolerance 2%). Off-axis rays are drawn among pixels whose ray crosses the
// one-voxel interpolation ramp of each face it passes away from any cube edge:
// near an edge the trilinear interpolant rounds the corner off.
struct ChordCheckOptions {
  GridSpec grid = GridSpec::centered({32, 32, 32}, {5.0, 5.0, 5.0});
  ConeBeamGeometry geometry{1000.0, 1500.0, 48, 64, {4.5, 4.5}, {0.0, 0.0}};
  double cube_side = 100.0;
  double mu = 0.002;
  int off_axis_rays = 100;
  std::vector<double> angles{0.0, 30.0, 60.0, 90.0};
  std::uint64_t seed = 2;
  double step = 0.0;
};
struct ChordCheckResult {
  CheckResult central;
  CheckResult off_axis;
};
ChordCheckResult check_chord(const ChordCheckOptions& opt);

// Centered sphere projected at each angle; worst pairwise MAE. Tolerance 1e-4.
// Voxels carry the sphere's partial volume: a binary voxelization is not
// rotationally symmetric at this resolution.
struct RotationCheckOptions {
  GridSpec grid = GridSpec::centered({32, 32, 32}, {3.0, 3.0, 3.0});
  ConeBeamGeometry geometry{1000.0, 1500.0, 48, 64, {4.5, 4.5}, {0.0, 0.0}};
  double radius = 30.0;
  int subsamples = 4;  // per axis
  double mu = 0.002;
  std::vector<double> angles{0.0, 30.0, 60.0, 90.0};
  double step = 0.0;
};
CheckResult check_rotation_equivariance(const RotationCheckOptions& opt);

// Exact ray/axis-aligned-box chord length (world coordinates).
double box_chord(const Ray& ray, Vec3 lo, Vec3 hi);

struct SelfTestOptions {
  double step_override = 0.0;  // > 0 forces every projector step (diagnostics)
};
std::vector<CheckResult> run_selftest(const SelfTestOptions& opt = {});

}  // namespace gips
