#include "gips/projection.hpp"

#include "gips/error.hpp"
#include "gips/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gips {
namespace fs = std::filesystem;
using nlohmann::json;

Projection::Projection(int r, int c, int ch, double angle, float fill)
    : rows(r), cols(c), channels(ch), angle_deg(angle) {
  require(rows >= 1 && cols >= 1 && channels >= 1, Errc::invalid_argument,
          "projection needs rows, cols, channels >= 1");
  data.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

void Projection::validate() const {
  require(rows >= 1 && cols >= 1 && channels >= 1, Errc::invalid_argument,
          "projection needs rows, cols, channels >= 1");
  require(data.size() == pixel_count() * static_cast<std::size_t>(channels),
          Errc::size_mismatch, "projection data length does not match its shape");
  require(std::isfinite(angle_deg), Errc::non_finite, "projection angle is not finite");
  require(std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); }),
          Errc::non_finite, "projection contains non-finite values");
}

void check_detector_shape(const Projection& p, const ConeBeamGeometry& geom) {
  require(p.rows == geom.det_rows && p.cols == geom.det_cols, Errc::shape_mismatch,
          "projection is " + std::to_string(p.rows) + "x" + std::to_string(p.cols) +
              " but the detector is " + std::to_string(geom.det_rows) + "x" +
              std::to_string(geom.det_cols));
}

Projection normalize_unit_range(const Projection& p) {
  p.validate();
  Projection out = p;
  for (int c = 0; c < p.channels; ++c) {
    auto ch = out.channel(c);
    const auto [lo, hi] = std::minmax_element(ch.begin(), ch.end());
    const double base = *lo;
    const double range = static_cast<double>(*hi) - base;
    for (float& v : ch)
      v = range > 0.0 ? static_cast<float>((static_cast<double>(v) - base) / range) : 0.0f;
  }
  return out;
}

void save_projection(const Projection& p, const fs::path& path,
                     const std::optional<ConeBeamGeometry>& geom) {
  p.validate();
  json header = {{"schema", 1},
                 {"kind", "projection"},
                 {"rows", p.rows},
                 {"cols", p.cols},
                 {"channels", p.channels},
                 {"angle_deg", p.angle_deg},
                 {"dtype", "float32"},
                 {"endianness", "little"},
                 {"payload", payload_path(path).filename().string()}};
  if (geom) header["geometry"] = geometry_to_json(*geom);
  write_f32_le(payload_path(path), p.data);
  write_json(header_path(path), header);
}

Projection load_projection(const fs::path& path, std::optional<ConeBeamGeometry>* geom) {
  const json header = read_json(header_path(path));
  check_schema(header, 1, "projection header");
  require(header.value("dtype", std::string("float32")) == "float32", Errc::format,
          "projection header: only float32 payloads are supported");
  require(header.value("endianness", std::string("little")) == "little", Errc::format,
          "projection header: only little-endian payloads are supported");
  Projection p;
  try {
    p.rows = header.at("rows").get<int>();
    p.cols = header.at("cols").get<int>();
    p.channels = header.value("channels", 1);
    p.angle_deg = header.value("angle_deg", 0.0);
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("projection header: ") + e.what());
  }
  require(p.rows >= 1 && p.cols >= 1 && p.channels >= 1, Errc::format,
          "projection header: rows, cols, channels must be >= 1");
  p.data = read_f32_le(payload_path(path),
                       p.pixel_count() * static_cast<std::size_t>(p.channels));
  p.validate();
  if (geom) {
    *geom = header.contains("geometry")
                ? std::optional<ConeBeamGeometry>(geometry_from_json(header.at("geometry")))
                : std::nullopt;
  }
  return p;
}

void write_pgm(const Projection& p, const fs::path& path, int channel) {
  require(channel >= 0 && channel < p.channels, Errc::invalid_argument,
          "PGM channel out of range");
  const Projection unit = normalize_unit_range(p);
  const auto ch = unit.channel(channel);
  std::vector<unsigned char> bytes;
  bytes.reserve(ch.size() * 2);
  for (float v : ch) {
    const long q = std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 65535.0);
    bytes.push_back(static_cast<unsigned char>((q >> 8) & 0xff));
    bytes.push_back(static_cast<unsigned char>(q & 0xff));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  out << "P5\n" << p.cols << ' ' << p.rows << "\n65535\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), Errc::io, "write failed: " + path.string());
}

}  // namespace gips
