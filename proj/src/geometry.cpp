#include "gips/geometry.hpp"

#include "gips/error.hpp"
#include "gips/json_io.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace gips {
using nlohmann::json;

Vec3 rotate_z(Vec3 p, double angle_deg) {
  const double r = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

void ConeBeamGeometry::validate() const {
  require(std::isfinite(sad) && std::isfinite(sdd) && sad > 0.0 && sad < sdd,
          Errc::invalid_argument, "geometry requires 0 < sad < sdd");
  require(det_rows >= 1 && det_cols >= 1, Errc::invalid_argument,
          "geometry requires at least one detector row and column");
  for (int a = 0; a < 2; ++a) {
    require(std::isfinite(pixel_pitch[a]) && pixel_pitch[a] > 0.0, Errc::invalid_argument,
            "pixel pitch must be > 0");
    require(std::isfinite(det_offset[a]), Errc::invalid_argument,
            "detector offset must be finite");
  }
}

json geometry_to_json(const ConeBeamGeometry& g) {
  return {{"schema", 1},
          {"sad", g.sad},
          {"sdd", g.sdd},
          {"det_rows", g.det_rows},
          {"det_cols", g.det_cols},
          {"pixel_pitch", g.pixel_pitch},
          {"det_offset", g.det_offset}};
}

ConeBeamGeometry geometry_from_json(const json& j) {
  check_schema(j, 1, "geometry");
  ConeBeamGeometry g;
  try {
    g.sad = j.value("sad", g.sad);
    g.sdd = j.value("sdd", g.sdd);
    g.det_rows = j.value("det_rows", g.det_rows);
    g.det_cols = j.value("det_cols", g.det_cols);
    g.pixel_pitch = j.value("pixel_pitch", g.pixel_pitch);
    g.det_offset = j.value("det_offset", g.det_offset);
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("geometry: ") + e.what());
  }
  g.validate();
  return g;
}

ConeBeamGeometry load_geometry(const std::filesystem::path& path) {
  return geometry_from_json(read_json(path));
}

DetectorFrame detector_frame(const ConeBeamGeometry& g, double angle_deg) {
  g.validate();
  DetectorFrame f;
  f.source = rotate_z({0.0, -g.sad, 0.0}, angle_deg);
  const Vec3 axis = rotate_z({0.0, 1.0, 0.0}, angle_deg);
  f.principal = f.source + g.sdd * axis;
  f.u = rotate_z({1.0, 0.0, 0.0}, angle_deg);
  f.v = {0.0, 0.0, 1.0};
  f.pv = g.pixel_pitch[0];
  f.pu = g.pixel_pitch[1];
  f.row0 = g.det_offset[0] / f.pv - 0.5 * (g.det_rows - 1);
  f.col0 = g.det_offset[1] / f.pu - 0.5 * (g.det_cols - 1);
  return f;
}

Vec3 source_position(const ConeBeamGeometry& geom, double angle_deg) {
  return detector_frame(geom, angle_deg).source;
}

Vec3 detector_pixel_center(const ConeBeamGeometry& geom, double angle_deg, int row, int col) {
  require(row >= 0 && row < geom.det_rows && col >= 0 && col < geom.det_cols,
          Errc::invalid_argument, "detector pixel index out of range");
  return detector_frame(geom, angle_deg).pixel_center(row, col);
}

Vec3 world_box_min(const GridSpec& grid) {
  const auto m = grid.box_min();
  return {m[2], m[1], m[0]};
}

Vec3 world_box_max(const GridSpec& grid) {
  const auto m = grid.box_max();
  return {m[2], m[1], m[0]};
}

std::array<double, 2> intersect_box(Vec3 o, Vec3 d, Vec3 lo, Vec3 hi) {
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  const double os[3] = {o.x, o.y, o.z};
  const double ds[3] = {d.x, d.y, d.z};
  const double los[3] = {lo.x, lo.y, lo.z};
  const double his[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (ds[a] == 0.0) {
      if (os[a] < los[a] || os[a] > his[a]) return {1.0, 0.0};
      continue;
    }
    double t1 = (los[a] - os[a]) / ds[a];
    double t2 = (his[a] - os[a]) / ds[a];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  return {t_near, t_far};
}

Ray make_ray(Vec3 source, Vec3 target, const GridSpec& grid) {
  Ray r;
  r.origin = source;
  r.direction = normalized(target - source);
  const auto t = intersect_box(r.origin, r.direction, world_box_min(grid), world_box_max(grid));
  r.t_near = t[0];
  r.t_far = t[1];
  return r;
}

Ray pixel_ray(const ConeBeamGeometry& geom, double angle_deg, int row, int col,
              const GridSpec& grid) {
  const DetectorFrame f = detector_frame(geom, angle_deg);
  require(row >= 0 && row < geom.det_rows && col >= 0 && col < geom.det_cols,
          Errc::invalid_argument, "detector pixel index out of range");
  return make_ray(f.source, f.pixel_center(row, col), grid);
}

}  // namespace gips
