#pragma once

#include <array>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "gips/volume.hpp"

namespace gips {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }
// Counter-clockwise rotation about +z.
Vec3 rotate_z(Vec3 p, double angle_deg);

// Circular cone-beam acquisition. Gantry angle 0 (AP) puts the source at
// (0, -sad, 0); angles grow counter-clockwise about +z, so 90 (LT) puts it at
// (+sad, 0, 0). The flat detector faces the source at distance sdd; its
// u-axis (columns) is the rotated +x direction and its v-axis (rows) is +z.
struct ConeBeamGeometry {
  double sad = 1000.0;  // source to isocenter, mm
  double sdd = 1500.0;  // source to detector, mm
  int det_rows = 180;
  int det_cols = 300;
  std::array<double, 2> pixel_pitch{2.0, 2.0};  // (pv, pu) mm
  std::array<double, 2> det_offset{0.0, 0.0};   // (ov, ou) mm

  void validate() const;
  bool operator==(const ConeBeamGeometry&) const = default;
};

nlohmann::json geometry_to_json(const ConeBeamGeometry& geom);
ConeBeamGeometry geometry_from_json(const nlohmann::json& j);
ConeBeamGeometry load_geometry(const std::filesystem::path& path);

// Source, detector principal point and detector axes at one gantry angle.
struct DetectorFrame {
  Vec3 source;
  Vec3 principal;
  Vec3 u;
  Vec3 v;
  double pu;
  double pv;
  double col0;  // offset added to a column index before scaling by pu
  double row0;

  Vec3 pixel_center(double row, double col) const {
    return principal + ((col + col0) * pu) * u + ((row + row0) * pv) * v;
  }
};

DetectorFrame detector_frame(const ConeBeamGeometry& geom, double angle_deg);

Vec3 source_position(const ConeBeamGeometry& geom, double angle_deg);
// Throws Errc::invalid_argument for out-of-range indices.
Vec3 detector_pixel_center(const ConeBeamGeometry& geom, double angle_deg, int row, int col);

// Source-to-pixel ray clipped against a grid's bounding box.
// A miss is encoded as t_near > t_far.
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_near = 0.0;
  double t_far = -1.0;

  bool hits() const noexcept { return t_near <= t_far; }
  Vec3 at(double t) const noexcept { return origin + t * direction; }
};

// Slab-method intersection with an axis-aligned box given in world (x, y, z).
// Entry is clipped at t = 0 (the source).
std::array<double, 2> intersect_box(Vec3 origin, Vec3 direction, Vec3 box_min, Vec3 box_max);
Vec3 world_box_min(const GridSpec& grid);
Vec3 world_box_max(const GridSpec& grid);

Ray make_ray(Vec3 source, Vec3 target, const GridSpec& grid);
Ray pixel_ray(const ConeBeamGeometry& geom, double angle_deg, int row, int col,
              const GridSpec& grid);

}  // namespace gips
