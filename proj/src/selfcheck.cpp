#include "gips/selfcheck.hpp"

#include "gips/kernels.hpp"
#include "gips/metrics.hpp"
#include "gips/projector.hpp"
#include "gips/random.hpp"

#include <algorithm>
#include <cmath>

namespace gips {
namespace {

double step_for(const GridSpec& grid, double requested) {
  return requested > 0.0 ? requested : default_step(grid);
}

CheckResult finish(std::string name, double residual, double tolerance, int cases) {
  CheckResult r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.passed = std::isfinite(residual) && residual <= tolerance;
  r.cases = cases;
  return r;
}

Volume cube_volume(const GridSpec& grid, double side, double mu) {
  Volume v(grid);
  const double half = 0.5 * side;
  for (int k = 0; k < grid.dims[0]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[2]; ++i) {
        const double z = grid.origin[0] + k * grid.spacing[0];
        const double y = grid.origin[1] + j * grid.spacing[1];
        const double x = grid.origin[2] + i * grid.spacing[2];
        if (std::abs(x) <= half && std::abs(y) <= half && std::abs(z) <= half)
          v.at(k, j, i) = static_cast<float>(mu);
      }
  return v;
}

// Axis of the single cube face p lies on when p is at least `margin` away
// from that face's edges, else -1.
int face_axis(Vec3 p, double half, double margin) {
  const double c[3] = {std::abs(p.x), std::abs(p.y), std::abs(p.z)};
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (c[a] <= half - margin) continue;
    if (axis >= 0) return -1;
    axis = a;
  }
  return axis;
}

// The trilinear cube ramps from 0 to mu over [half - s/2, half + s/2] around
// each face. Along a ray that crosses each ramp through a single face and
// away from its edges, the ramp contributes symmetrically and the integral
// equals the sharp chord. Checked on the inner and outer ramp boxes.
bool crosses_faces_cleanly(const Ray& ray, double half, double s) {
  int axes[2][2];
  const double bounds[2] = {half - 0.5 * s, half + 0.5 * s};
  for (int b = 0; b < 2; ++b) {
    const double h = bounds[b];
    const auto t = intersect_box(ray.origin, ray.direction, {-h, -h, -h}, {h, h, h});
    if (!(t[1] > t[0])) return false;
    axes[b][0] = face_axis(ray.at(t[0]), h, s);
    axes[b][1] = face_axis(ray.at(t[1]), h, s);
    if (axes[b][0] < 0 || axes[b][1] < 0) return false;
  }
  return axes[0][0] == axes[1][0] && axes[0][1] == axes[1][1];
}

// Centered sphere with partial-volume voxels (n^3 sub-samples per voxel).
Volume sphere_volume(const GridSpec& grid, double radius, double mu, int n) {
  Volume v(grid);
  const double r2 = radius * radius;
  for (int k = 0; k < grid.dims[0]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[2]; ++i) {
        int inside = 0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
              const double z = grid.origin[0] + (k + (a + 0.5) / n - 0.5) * grid.spacing[0];
              const double y = grid.origin[1] + (j + (b + 0.5) / n - 0.5) * grid.spacing[1];
              const double x = grid.origin[2] + (i + (c + 0.5) / n - 0.5) * grid.spacing[2];
              inside += x * x + y * y + z * z <= r2;
            }
        v.at(k, j, i) = static_cast<float>(mu * inside / static_cast<double>(n * n * n));
      }
  return v;
}

}  // namespace

nlohmann::json to_json(const CheckResult& r) {
  return {{"name", r.name},
          {"residual", r.residual},
          {"tolerance", r.tolerance},
          {"cases", r.cases},
          {"passed", r.passed}};
}

double box_chord(const Ray& ray, Vec3 lo, Vec3 hi) {
  const auto t = intersect_box(ray.origin, ray.direction, lo, hi);
  return std::max(0.0, t[1] - t[0]);
}

CheckResult check_adjoint(const AdjointCheckOptions& opt) {
  const double step = step_for(opt.grid, opt.step);
  SplitMix64 rng(opt.seed);
  double worst = 0.0;
  for (int trial = 0; trial < opt.trials; ++trial) {
    const double angle = rng.uniform(0.0, 360.0);
    FeatureVolume x(opt.grid, 1);
    for (float& v : x.data) v = static_cast<float>(rng.uniform());
    FeatureProjection y(opt.geometry.det_rows, opt.geometry.det_cols, 1, angle);
    for (float& v : y.data) v = static_cast<float>(rng.uniform());

    const FeatureProjection ax = forward_project(x, opt.geometry, angle, step);
    const FeatureVolume aty = back_project(y, opt.geometry, angle, step, opt.grid);
    const double lhs = kernels::dot(ax.data, y.data);
    const double rhs = kernels::dot(x.data, aty.data);
    const double scale = std::sqrt(kernels::dot(ax.data, ax.data)) *
                         std::sqrt(kernels::dot(y.data, y.data));
    const double residual = scale > 0.0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs);
    worst = std::max(worst, residual);
  }
  return finish("adjoint_identity", worst, 1e-5, opt.trials);
}

ChordCheckResult check_chord(const ChordCheckOptions& opt) {
  const double step = step_for(opt.grid, opt.step);
  const Volume cube = cube_volume(opt.grid, opt.cube_side, opt.mu);
  const double half = 0.5 * opt.cube_side;
  const Vec3 lo{-half, -half, -half};
  const Vec3 hi{half, half, half};
  const double margin = std::max({opt.grid.spacing[0], opt.grid.spacing[1], opt.grid.spacing[2]});

  ChordCheckResult out;

  // Central ray: source through the isocenter at gantry angle 0.
  {
    const DetectorFrame f = detector_frame(opt.geometry, 0.0);
    const Ray ray = make_ray(f.source, f.principal, opt.grid);
    const auto seg = ray_segment(ray, opt.grid, step);
    float sum = 0.0f;
    if (seg.samples > 0)
      kernels::active_kernels().march_gather(cube.data.data(),
                                             {opt.grid.dims[2], opt.grid.dims[1],
                                              opt.grid.dims[0], opt.grid.voxel_count()},
                                             1, seg, &sum);
    const double value = static_cast<double>(sum) * step;
    const double expected = opt.cube_side * opt.mu;
    out.central = finish("chord_central_ray", std::abs(value - expected) / expected, 0.01, 1);
  }

  struct Candidate {
    std::size_t view;
    int row;
    int col;
    double expected;
  };
  std::vector<Projection> views;
  std::vector<Candidate> candidates;
  for (std::size_t v = 0; v < opt.angles.size(); ++v) {
    views.push_back(forward_project(cube, opt.geometry, opt.angles[v], step));
    for (int r = 0; r < opt.geometry.det_rows; ++r)
      for (int c = 0; c < opt.geometry.det_cols; ++c) {
        const Ray ray = pixel_ray(opt.geometry, opt.angles[v], r, c, opt.grid);
        const auto t = intersect_box(ray.origin, ray.direction, lo, hi);
        if (!(t[1] > t[0])) continue;
        if (!crosses_faces_cleanly(ray, half, margin)) continue;
        candidates.push_back({v, r, c, (t[1] - t[0]) * opt.mu});
      }
  }

  SplitMix64 rng(opt.seed);
  double worst = 0.0;
  int used = 0;
  for (int n = 0; n < opt.off_axis_rays && !candidates.empty(); ++n, ++used) {
    const Candidate& c = candidates[rng.below(candidates.size())];
    const double value = views[c.view].at(0, c.row, c.col);
    worst = std::max(worst, std::abs(value - c.expected) / c.expected);
  }
  out.off_axis = finish("chord_off_axis_rays", candidates.empty() ? INFINITY : worst, 0.02, used);
  return out;
}

CheckResult check_rotation_equivariance(const RotationCheckOptions& opt) {
  const double step = step_for(opt.grid, opt.step);
  const Volume sphere = sphere_volume(opt.grid, opt.radius, opt.mu, opt.subsamples);

  std::vector<Projection> views;
  for (double a : opt.angles) views.push_back(forward_project(sphere, opt.geometry, a, step));
  double worst = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j, ++pairs)
      worst = std::max(worst, mae(views[i], views[j]));
  return finish("rotation_equivariance", worst, 1e-4, pairs);
}

std::vector<CheckResult> run_selftest(const SelfTestOptions& opt) {
  AdjointCheckOptions adj;
  adj.step = opt.step_override;
  ChordCheckOptions chord;
  chord.geometry.det_rows = 49;
  chord.geometry.det_cols = 65;
  chord.step = opt.step_override;
  RotationCheckOptions rot;
  rot.step = opt.step_override;

  std::vector<CheckResult> results;
  results.push_back(check_adjoint(adj));
  const ChordCheckResult c = check_chord(chord);
  results.push_back(c.central);
  results.push_back(c.off_axis);
  results.push_back(check_rotation_equivariance(rot));
  return results;
}

}  // namespace gips
