#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gips/geometry.hpp"

namespace gips {

// Detector-plane image with C >= 1 channel planes (column fastest). Holds
// line integrals straight out of the projector, normalized [0,1] intensities,
// or geometry features.
struct Projection {
  int rows = 0;
  int cols = 0;
  int channels = 1;
  double angle_deg = 0.0;
  std::vector<float> data;

  Projection() = default;
  Projection(int rows, int cols, int channels = 1, double angle_deg = 0.0, float fill = 0.0f);

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::span<float> channel(int c) noexcept {
    return {data.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }
  std::span<const float> channel(int c) const noexcept {
    return {data.data() + static_cast<std::size_t>(c) * pixel_count(), pixel_count()};
  }
  float& at(int c, int row, int col) noexcept {
    return data[(static_cast<std::size_t>(c) * rows + row) * cols + col];
  }
  float at(int c, int row, int col) const noexcept {
    return data[(static_cast<std::size_t>(c) * rows + row) * cols + col];
  }

  bool same_shape(const Projection& other) const noexcept {
    return rows == other.rows && cols == other.cols && channels == other.channels;
  }

  void validate() const;
  bool operator==(const Projection&) const = default;
};

using FeatureProjection = Projection;

// Throws Errc::shape_mismatch unless the image matches the detector.
void check_detector_shape(const Projection& p, const ConeBeamGeometry& geom);

// Per-channel min-max scaling to [0,1]; a constant channel maps to 0.
Projection normalize_unit_range(const Projection& p);

// File pair <stem>.json + <stem>.raw, mirroring the volume format. The header
// carries rows/cols/channels/angle and, when given, the acquisition geometry.
void save_projection(const Projection& p, const std::filesystem::path& path,
                     const std::optional<ConeBeamGeometry>& geom = std::nullopt);
Projection load_projection(const std::filesystem::path& path,
                           std::optional<ConeBeamGeometry>* geom = nullptr);

// 16-bit binary PGM (maxval 65535, big-endian samples) of one channel after
// min-max normalization to [0,1].
void write_pgm(const Projection& p, const std::filesystem::path& path, int channel = 0);

}  // namespace gips
