#include "gips/volume.hpp"

#include "gips/error.hpp"
#include "gips/json_io.hpp"
#include "gips/parallel.hpp"
#include "gips/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace gips {
namespace fs = std::filesystem;
using nlohmann::json;

// ---- GridSpec ------------------------------------------------------------------

GridSpec GridSpec::centered(std::array<int, 3> dims, std::array<double, 3> spacing) {
  GridSpec g{dims, spacing, {}};
  for (int a = 0; a < 3; ++a) g.origin[a] = -0.5 * (dims[a] - 1) * spacing[a];
  return g;
}

std::size_t GridSpec::voxel_count() const noexcept {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

double GridSpec::min_spacing() const noexcept {
  return std::min({spacing[0], spacing[1], spacing[2]});
}

std::array<double, 3> GridSpec::box_min() const noexcept {
  return {origin[0] - 0.5 * spacing[0], origin[1] - 0.5 * spacing[1],
          origin[2] - 0.5 * spacing[2]};
}

std::array<double, 3> GridSpec::box_max() const noexcept {
  std::array<double, 3> m{};
  for (int a = 0; a < 3; ++a) m[a] = origin[a] + (dims[a] - 0.5) * spacing[a];
  return m;
}

std::array<double, 3> GridSpec::center() const noexcept {
  std::array<double, 3> c{};
  for (int a = 0; a < 3; ++a) c[a] = origin[a] + 0.5 * (dims[a] - 1) * spacing[a];
  return c;
}

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    require(dims[a] >= 1, Errc::invalid_argument, "grid dims must be >= 1");
    require(std::isfinite(spacing[a]) && spacing[a] > 0.0, Errc::invalid_argument,
            "grid spacing must be finite and > 0");
    require(std::isfinite(origin[a]), Errc::invalid_argument, "grid origin must be finite");
  }
}

// ---- Volume / FeatureVolume ------------------------------------------------------

Volume::Volume(GridSpec g, float fill) : grid(g) {
  grid.validate();
  data.assign(grid.voxel_count(), fill);
}

void Volume::validate() const {
  grid.validate();
  require(data.size() == grid.voxel_count(), Errc::size_mismatch,
          "volume data length does not match its dims");
  require(std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); }),
          Errc::non_finite, "volume contains non-finite values");
}

FeatureVolume::FeatureVolume(GridSpec g, int c, float fill) : grid(g), channels(c) {
  grid.validate();
  require(channels >= 1, Errc::invalid_argument, "feature volume needs >= 1 channel");
  data.assign(grid.voxel_count() * static_cast<std::size_t>(channels), fill);
}

std::span<float> FeatureVolume::channel(int c) noexcept {
  const std::size_t n = grid.voxel_count();
  return {data.data() + static_cast<std::size_t>(c) * n, n};
}

std::span<const float> FeatureVolume::channel(int c) const noexcept {
  const std::size_t n = grid.voxel_count();
  return {data.data() + static_cast<std::size_t>(c) * n, n};
}

void FeatureVolume::validate() const {
  grid.validate();
  require(channels >= 1, Errc::invalid_argument, "feature volume needs >= 1 channel");
  require(data.size() == grid.voxel_count() * static_cast<std::size_t>(channels),
          Errc::size_mismatch, "feature volume data length does not match its shape");
  require(std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); }),
          Errc::non_finite, "feature volume contains non-finite values");
}

FeatureVolume to_feature_volume(const Volume& volume) {
  FeatureVolume f;
  f.grid = volume.grid;
  f.channels = 1;
  f.data = volume.data;
  return f;
}

Volume channel_volume(const FeatureVolume& features, int channel) {
  require(channel >= 0 && channel < features.channels, Errc::invalid_argument,
          "channel index out of range");
  Volume v;
  v.grid = features.grid;
  const auto src = features.channel(channel);
  v.data.assign(src.begin(), src.end());
  return v;
}

// ---- file I/O --------------------------------------------------------------------

fs::path header_path(const fs::path& path) {
  fs::path p = path;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  p += ".json";
  return p;
}

fs::path payload_path(const fs::path& path) {
  fs::path p = path;
  if (p.extension() == ".json" || p.extension() == ".raw") p.replace_extension();
  p += ".raw";
  return p;
}

namespace {

std::uint32_t to_little(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) |
           (bits >> 24);
  }
  return bits;
}

}  // namespace

void write_f32_le(const fs::path& path, std::span<const float> values) {
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    words[i] = to_little(std::bit_cast<std::uint32_t>(values[i]));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  require(static_cast<bool>(out), Errc::io, "write failed: " + path.string());
}

std::vector<float> read_f32_le(const fs::path& path, std::size_t expected) {
  std::error_code ec;
  const auto bytes = fs::file_size(path, ec);
  require(!ec, Errc::io, "cannot open " + path.string());
  require(bytes == expected * sizeof(float), Errc::size_mismatch,
          path.string() + ": payload holds " + std::to_string(bytes / sizeof(float)) +
              " scalars, header expects " + std::to_string(expected));
  std::vector<std::uint32_t> words(expected);
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path.string());
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
  require(static_cast<bool>(in), Errc::io, "read failed: " + path.string());
  std::vector<float> values(expected);
  for (std::size_t i = 0; i < expected; ++i)
    values[i] = std::bit_cast<float>(to_little(words[i]));
  return values;
}

json grid_to_json(const GridSpec& grid) {
  return {{"dims", grid.dims}, {"spacing", grid.spacing}, {"origin", grid.origin}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  try {
    g.dims = j.at("dims").get<std::array<int, 3>>();
    g.spacing = j.at("spacing").get<std::array<double, 3>>();
    if (j.contains("origin")) {
      g.origin = j.at("origin").get<std::array<double, 3>>();
    } else {
      g = GridSpec::centered(g.dims, g.spacing);
    }
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("grid: ") + e.what());
  }
  g.validate();
  return g;
}

Volume load_volume(const fs::path& path) {
  const json header = read_json(header_path(path));
  check_schema(header, 1, "volume header");
  require(header.value("dtype", std::string("float32")) == "float32", Errc::format,
          "volume header: only float32 payloads are supported");
  require(header.value("endianness", std::string("little")) == "little", Errc::format,
          "volume header: only little-endian payloads are supported");
  Volume v;
  v.grid = grid_from_json(header);
  v.data = read_f32_le(payload_path(path), v.grid.voxel_count());
  v.validate();
  return v;
}

void save_volume(const Volume& volume, const fs::path& path) {
  volume.validate();
  json header = grid_to_json(volume.grid);
  header["schema"] = 1;
  header["kind"] = "volume";
  header["dtype"] = "float32";
  header["endianness"] = "little";
  header["payload"] = payload_path(path).filename().string();
  write_f32_le(payload_path(path), volume.data);
  write_json(header_path(path), header);
}

// ---- preprocessing -----------------------------------------------------------------

Volume hu_to_attenuation(const Volume& hu, double mu_water) {
  require(std::isfinite(mu_water) && mu_water > 0.0, Errc::invalid_argument,
          "mu_water must be > 0");
  hu.validate();
  Volume out = hu;
  for (float& v : out.data)
    v = static_cast<float>(std::max(0.0, mu_water * (1.0 + static_cast<double>(v) / 1000.0)));
  return out;
}

namespace {

struct Lerp {
  int i0;
  int i1;
  double w;  // weight of i1
};

// Edge-clamped linear interpolation position for continuous index c.
Lerp lerp_at(double c, int n) {
  c = std::clamp(c, 0.0, static_cast<double>(n - 1));
  const int i0 = std::min(static_cast<int>(c), n - 1);
  return {i0, std::min(i0 + 1, n - 1), c - i0};
}

}  // namespace

Volume resample_z(const Volume& volume, double target_sz) {
  require(std::isfinite(target_sz) && target_sz > 0.0, Errc::invalid_argument,
          "target z spacing must be > 0");
  volume.validate();
  const GridSpec& g = volume.grid;
  const long depth = std::lround(g.dims[0] * g.spacing[0] / target_sz);
  require(depth >= 1, Errc::invalid_argument, "resampled depth would be < 1");

  GridSpec ng = g;
  ng.dims[0] = static_cast<int>(depth);
  ng.spacing[0] = target_sz;
  ng.origin[0] = g.center()[0] - 0.5 * (ng.dims[0] - 1) * target_sz;

  Volume out(ng);
  const std::size_t plane = static_cast<std::size_t>(g.dims[1]) * g.dims[2];
  parallel_for(static_cast<std::size_t>(ng.dims[0]), [&](std::size_t k) {
    const double z = ng.origin[0] + static_cast<double>(k) * target_sz;
    const Lerp l = lerp_at((z - g.origin[0]) / g.spacing[0], g.dims[0]);
    const float* a = volume.data.data() + static_cast<std::size_t>(l.i0) * plane;
    const float* b = volume.data.data() + static_cast<std::size_t>(l.i1) * plane;
    float* dst = out.data.data() + k * plane;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = static_cast<float>((1.0 - l.w) * a[i] + l.w * b[i]);
  });
  return out;
}

Volume resize_xy(const Volume& volume, int rows, int cols) {
  require(rows >= 1 && cols >= 1, Errc::invalid_argument, "target xy size must be >= 1");
  volume.validate();
  const GridSpec& g = volume.grid;
  GridSpec ng = g;
  ng.dims[1] = rows;
  ng.dims[2] = cols;
  ng.spacing[1] = g.spacing[1] * g.dims[1] / rows;
  ng.spacing[2] = g.spacing[2] * g.dims[2] / cols;
  const auto c = g.center();
  ng.origin[1] = c[1] - 0.5 * (rows - 1) * ng.spacing[1];
  ng.origin[2] = c[2] - 0.5 * (cols - 1) * ng.spacing[2];

  std::vector<Lerp> ys(static_cast<std::size_t>(rows));
  std::vector<Lerp> xs(static_cast<std::size_t>(cols));
  for (int j = 0; j < rows; ++j)
    ys[j] = lerp_at((ng.origin[1] + j * ng.spacing[1] - g.origin[1]) / g.spacing[1], g.dims[1]);
  for (int i = 0; i < cols; ++i)
    xs[i] = lerp_at((ng.origin[2] + i * ng.spacing[2] - g.origin[2]) / g.spacing[2], g.dims[2]);

  Volume out(ng);
  parallel_for(static_cast<std::size_t>(g.dims[0]), [&](std::size_t zk) {
    const int z = static_cast<int>(zk);
    for (int j = 0; j < rows; ++j) {
      const Lerp& ly = ys[j];
      for (int i = 0; i < cols; ++i) {
        const Lerp& lx = xs[i];
        const double top = (1.0 - lx.w) * volume.at(z, ly.i0, lx.i0) + lx.w * volume.at(z, ly.i0, lx.i1);
        const double bot = (1.0 - lx.w) * volume.at(z, ly.i1, lx.i0) + lx.w * volume.at(z, ly.i1, lx.i1);
        out.at(z, j, i) = static_cast<float>((1.0 - ly.w) * top + ly.w * bot);
      }
    }
  });
  return out;
}

Volume pad_z(const Volume& volume, int target_d, float fill) {
  volume.validate();
  const int depth = volume.grid.dims[0];
  require(target_d >= depth, Errc::invalid_argument,
          "pad target depth " + std::to_string(target_d) + " is smaller than the volume depth " +
              std::to_string(depth));
  const int low = (target_d - depth) / 2;
  GridSpec ng = volume.grid;
  ng.dims[0] = target_d;
  ng.origin[0] -= low * ng.spacing[0];
  Volume out(ng, fill);
  const std::size_t plane = static_cast<std::size_t>(ng.dims[1]) * ng.dims[2];
  std::copy(volume.data.begin(), volume.data.end(),
            out.data.begin() + static_cast<std::ptrdiff_t>(low * plane));
  return out;
}

// ---- phantoms ------------------------------------------------------------------------

void PhantomSpec::validate() const {
  grid.validate();
  require(std::isfinite(background), Errc::invalid_argument, "phantom background must be finite");
  for (const Ellipsoid& e : ellipsoids) {
    for (int a = 0; a < 3; ++a) {
      require(std::isfinite(e.center[a]), Errc::invalid_argument, "ellipsoid center must be finite");
      require(std::isfinite(e.semi_axes[a]) && e.semi_axes[a] > 0.0, Errc::invalid_argument,
              "ellipsoid semi-axes must be > 0");
    }
    require(std::isfinite(e.attenuation) && std::isfinite(e.rotation_deg),
            Errc::invalid_argument, "ellipsoid attenuation/rotation must be finite");
  }
}

Volume make_phantom(const PhantomSpec& spec) {
  spec.validate();
  const GridSpec& g = spec.grid;
  Volume out(g, static_cast<float>(spec.background));

  struct Prepared {
    Ellipsoid e;
    double cos_r;
    double sin_r;
  };
  std::vector<Prepared> shapes;
  for (const Ellipsoid& e : spec.ellipsoids) {
    const double r = e.rotation_deg * std::numbers::pi / 180.0;
    shapes.push_back({e, std::cos(r), std::sin(r)});
  }

  parallel_for(static_cast<std::size_t>(g.dims[0]), [&](std::size_t zk) {
    const int k = static_cast<int>(zk);
    const double z = g.origin[0] + k * g.spacing[0];
    for (int j = 0; j < g.dims[1]; ++j) {
      const double y = g.origin[1] + j * g.spacing[1];
      for (int i = 0; i < g.dims[2]; ++i) {
        const double x = g.origin[2] + i * g.spacing[2];
        double value = spec.background;
        for (const Prepared& p : shapes) {
          const double dx = x - p.e.center[0];
          const double dy = y - p.e.center[1];
          const double dz = z - p.e.center[2];
          // Rotate the offset into the ellipsoid frame (by -rotation).
          const double u = (p.cos_r * dx + p.sin_r * dy) / p.e.semi_axes[0];
          const double v = (-p.sin_r * dx + p.cos_r * dy) / p.e.semi_axes[1];
          const double w = dz / p.e.semi_axes[2];
          if (u * u + v * v + w * w <= 1.0) value += p.e.attenuation;
        }
        out.at(k, j, i) = static_cast<float>(value);
      }
    }
  });
  return out;
}


PhantomSpec random_phantom_spec(std::uint64_t seed, int count, GridSpec grid) {
  require(count >= 0, Errc::invalid_argument, "ellipsoid count must be >= 0");
  grid.validate();
  PhantomSpec spec;
  spec.grid = grid;
  SplitMix64 rng(seed);
  const auto c = grid.center();
  // Half extents in (x, y, z) order.
  const double half[3] = {0.5 * grid.dims[2] * grid.spacing[2],
                          0.5 * grid.dims[1] * grid.spacing[1],
                          0.5 * grid.dims[0] * grid.spacing[0]};
  const double mid[3] = {c[2], c[1], c[0]};
  for (int n = 0; n < count; ++n) {
    Ellipsoid e;
    for (int a = 0; a < 3; ++a) {
      e.center[a] = mid[a] + rng.uniform(-0.35, 0.35) * half[a];
      e.semi_axes[a] = rng.uniform(0.12, 0.45) * half[a];
    }
    e.attenuation = rng.uniform(0.005, 0.03);
    e.rotation_deg = rng.uniform(0.0, 180.0);
    spec.ellipsoids.push_back(e);
  }
  return spec;
}

PhantomSpec phantom_spec_from_json(const json& j) {
  check_schema(j, 1, "phantom spec");
  PhantomSpec spec;
  spec.grid = grid_from_json(j);
  try {
    spec.background = j.value("background", 0.0);
    for (const json& e : j.value("ellipsoids", json::array())) {
      Ellipsoid el;
      el.center = e.at("center").get<std::array<double, 3>>();
      el.semi_axes = e.at("semi_axes").get<std::array<double, 3>>();
      el.attenuation = e.at("attenuation").get<double>();
      el.rotation_deg = e.value("rotation_deg", 0.0);
      spec.ellipsoids.push_back(el);
    }
    if (j.contains("random")) {
      const json& r = j.at("random");
      const PhantomSpec extra = random_phantom_spec(r.at("seed").get<std::uint64_t>(),
                                                    r.value("count", 3), spec.grid);
      spec.ellipsoids.insert(spec.ellipsoids.end(), extra.ellipsoids.begin(),
                             extra.ellipsoids.end());
    }
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("phantom spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json phantom_spec_to_json(const PhantomSpec& spec) {
  json j = grid_to_json(spec.grid);
  j["schema"] = 1;
  j["background"] = spec.background;
  json list = json::array();
  for (const Ellipsoid& e : spec.ellipsoids) {
    list.push_back({{"center", e.center},
                    {"semi_axes", e.semi_axes},
                    {"attenuation", e.attenuation},
                    {"rotation_deg", e.rotation_deg}});
  }
  j["ellipsoids"] = list;
  return j;
}

}  // namespace gips
