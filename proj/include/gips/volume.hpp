#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace gips {

// Regular 3D voxel grid. All triples are ordered (z, y, x) to match the
// (D, H, W) index order; world coordinates of voxel (k, j, i) are
// origin + (k * sz, j * sy, i * sx) along (z, y, x).
struct GridSpec {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm
  std::array<double, 3> origin{0.0, 0.0, 0.0};   // mm, center of voxel (0,0,0)

  // Grid whose geometric center sits at the world origin (the isocenter).
  static GridSpec centered(std::array<int, 3> dims, std::array<double, 3> spacing);

  std::size_t voxel_count() const noexcept;
  double min_spacing() const noexcept;
  // Physical bounding box (voxel faces, not centers), per axis (z, y, x).
  std::array<double, 3> box_min() const noexcept;
  std::array<double, 3> box_max() const noexcept;
  std::array<double, 3> center() const noexcept;

  // Throws Error{invalid_argument} on non-positive dims/spacing or
  // non-finite metadata.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

struct Volume {
  GridSpec grid;
  std::vector<float> data;  // attenuation per mm, z-major

  Volume() = default;
  explicit Volume(GridSpec g, float fill = 0.0f);

  std::size_t index(int z, int y, int x) const noexcept {
    return (static_cast<std::size_t>(z) * static_cast<std::size_t>(grid.dims[1]) +
            static_cast<std::size_t>(y)) *
               static_cast<std::size_t>(grid.dims[2]) +
           static_cast<std::size_t>(x);
  }
  float& at(int z, int y, int x) noexcept { return data[index(z, y, x)]; }
  float at(int z, int y, int x) const noexcept { return data[index(z, y, x)]; }

  // Checks size, spacing and finiteness.
  void validate() const;

  bool operator==(const Volume&) const = default;
};

// C-channel volume sharing one grid; channel planes are contiguous.
struct FeatureVolume {
  GridSpec grid;
  int channels = 1;
  std::vector<float> data;

  FeatureVolume() = default;
  FeatureVolume(GridSpec g, int channels, float fill = 0.0f);

  std::span<float> channel(int c) noexcept;
  std::span<const float> channel(int c) const noexcept;

  void validate() const;

  bool operator==(const FeatureVolume&) const = default;
};

FeatureVolume to_feature_volume(const Volume& volume);
// Extracts one channel as a scalar volume.
Volume channel_volume(const FeatureVolume& features, int channel);

// ---- file I/O --------------------------------------------------------------
//
// A volume is stored as <stem>.json (header) + <stem>.raw (little-endian
// float32, z-major). `path` may name the stem, the .json or the .raw file.

std::filesystem::path header_path(const std::filesystem::path& path);
std::filesystem::path payload_path(const std::filesystem::path& path);

Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& volume, const std::filesystem::path& path);

// Raw little-endian float32 payload helpers shared with projection files.
void write_f32_le(const std::filesystem::path& path, std::span<const float> values);
std::vector<float> read_f32_le(const std::filesystem::path& path, std::size_t expected);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

// ---- preprocessing -----------------------------------------------------------

inline constexpr double kDefaultMuWater = 0.02;  // 1/mm

// mu = mu_water * (1 + HU / 1000), clamped at 0.
Volume hu_to_attenuation(const Volume& hu, double mu_water = kDefaultMuWater);

// Linear interpolation along z to spacing target_sz; the new depth is
// round(D * sz / target_sz) and the grid stays centered where it was.
Volume resample_z(const Volume& volume, double target_sz);

// Bilinear resize of every z-slice to (rows, cols); spacing is rescaled so
// the physical xy extent is unchanged.
Volume resize_xy(const Volume& volume, int rows, int cols);

// Symmetric z padding to target_d planes (odd remainder goes to the high
// side). Existing voxels keep their world positions.
Volume pad_z(const Volume& volume, int target_d, float fill = 0.0f);

// ---- phantoms -----------------------------------------------------------------

struct Ellipsoid {
  std::array<double, 3> center{};      // world (x, y, z), mm
  std::array<double, 3> semi_axes{};   // (ax, ay, az), mm
  double attenuation = 0.0;            // 1/mm, added inside
  double rotation_deg = 0.0;           // about +z
};

struct PhantomSpec {
  GridSpec grid;
  double background = 0.0;
  std::vector<Ellipsoid> ellipsoids;

  void validate() const;
};

// background + sum of the attenuations of every ellipsoid containing the
// voxel center.
Volume make_phantom(const PhantomSpec& spec);

// Seeded random phantom: `count` ellipsoids inside the central part of a
// centered grid, attenuations in [0.005, 0.03] /mm.
PhantomSpec random_phantom_spec(std::uint64_t seed, int count, GridSpec grid);

// JSON schema (version 1):
//   {"schema": 1, "dims": [D, H, W], "spacing": [sz, sy, sx],
//    "origin": [oz, oy, ox]            (optional, default: centered),
//    "background": 0.0,
//    "ellipsoids": [{"center": [x, y, z], "semi_axes": [ax, ay, az],
//                    "attenuation": 0.02, "rotation_deg": 0.0}],
//    "random": {"seed": 7, "count": 3}  (optional, appends random ellipsoids)}
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);
nlohmann::json phantom_spec_to_json(const PhantomSpec& spec);

}  // namespace gips
