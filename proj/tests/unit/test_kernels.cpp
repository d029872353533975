#include <doctest.h>

#include <cmath>
#include <vector>

#include "gips/kernels.hpp"
#include "gips/parallel.hpp"
#include "gips/projector.hpp"
#include "gips/random.hpp"
#include "test_support.hpp"

using namespace gips;
using namespace gips::kernels;

namespace {

// Independent trilinear sampler in double precision with the documented
// clamp-to-[0, n-1] coordinate rule.
double trilinear_oracle(const std::vector<float>& vol, int nx, int ny, int nz, double x, double y,
                        double z) {
  auto clampc = [](double c, int n) { return std::min(std::max(c, 0.0), n - 1.0); };
  x = clampc(x, nx);
  y = clampc(y, ny);
  z = clampc(z, nz);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
            z0 = static_cast<int>(std::floor(z));
  const double fx = x - x0, fy = y - y0, fz = z - z0;
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const int xi = std::min(x0 + dx, nx - 1), yi = std::min(y0 + dy, ny - 1),
                  zi = std::min(z0 + dz, nz - 1);
        const double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
        acc += w * vol[(static_cast<std::size_t>(zi) * ny + yi) * nx + xi];
      }
  return acc;
}

MarchSegment random_segment(SplitMix64& rng, int nx, int ny, int nz) {
  MarchSegment s;
  // Starts and directions that run partly outside the grid exercise clamping.
  s.start = {static_cast<float>(rng.uniform(-2, nx + 1)), static_cast<float>(rng.uniform(-2, ny + 1)),
             static_cast<float>(rng.uniform(-2, nz + 1))};
  s.delta = {static_cast<float>(rng.uniform(-0.7, 0.7)), static_cast<float>(rng.uniform(-0.7, 0.7)),
             static_cast<float>(rng.uniform(-0.7, 0.7))};
  s.samples = static_cast<int>(rng.below(70));
  return s;
}

struct Fixture {
  int nx = 13, ny = 9, nz = 11, channels = 2;
  MarchGrid grid{13, 9, 11, 13u * 9u * 11u};
  std::vector<float> volume;
  Fixture() : volume(grid.channel_stride * 2) { test::fill_uniform(volume, 3, -1.0, 1.0); }
};

void check_gather_against_oracle(const KernelTable& k) {
  Fixture f;
  SplitMix64 rng(8);
  for (int n = 0; n < 300; ++n) {
    const MarchSegment s = random_segment(rng, f.nx, f.ny, f.nz);
    float sums[2];
    k.march_gather(f.volume.data(), f.grid, f.channels, s, sums);
    for (int c = 0; c < f.channels; ++c) {
      std::vector<float> plane(f.volume.begin() + static_cast<long>(c * f.grid.channel_stride),
                               f.volume.begin() + static_cast<long>((c + 1) * f.grid.channel_stride));
      double expect = 0.0;
      for (int i = 0; i < s.samples; ++i) {
        const float fi = static_cast<float>(i);
        expect += trilinear_oracle(plane, f.nx, f.ny, f.nz, s.start[0] + fi * s.delta[0],
                                   s.start[1] + fi * s.delta[1], s.start[2] + fi * s.delta[2]);
      }
      CHECK(sums[c] == doctest::Approx(expect).epsilon(1e-4).scale(1.0));
    }
  }
}

}  // namespace

TEST_CASE("dispatch levels") {
  CHECK(parse_simd_level("scalar") == SimdLevel::scalar);
  CHECK(parse_simd_level("avx2") == SimdLevel::avx2);
  CHECK_FALSE(parse_simd_level("neon").has_value());
  CHECK(to_string(SimdLevel::avx2) == "avx2");

  const SimdLevel before = active_simd_level();
  CHECK(set_simd_level(SimdLevel::scalar));
  CHECK(&active_kernels() == &scalar_kernels());
  if (avx2_kernels()) {
    CHECK(set_simd_level(SimdLevel::avx2));
    CHECK(&active_kernels() == avx2_kernels());
  } else {
    CHECK_FALSE(set_simd_level(SimdLevel::avx2));
    CHECK(active_simd_level() == SimdLevel::scalar);
  }
  set_simd_level(before);
}

TEST_CASE("scalar gather matches a double-precision trilinear oracle") {
  check_gather_against_oracle(scalar_kernels());
}

TEST_CASE("avx2 gather matches the oracle") {
  const KernelTable* k = avx2_kernels();
  if (!k) {
    MESSAGE("AVX2 not available on this CPU; skipped");
    return;
  }
  check_gather_against_oracle(*k);
}

TEST_CASE("scatter is the transpose of gather") {
  // <gather(v), w> == <v, scatter(w)> for every kernel table.
  std::vector<const KernelTable*> tables{&scalar_kernels()};
  if (avx2_kernels()) tables.push_back(avx2_kernels());
  for (const KernelTable* k : tables) {
    Fixture f;
    SplitMix64 rng(12);
    for (int n = 0; n < 100; ++n) {
      const MarchSegment s = random_segment(rng, f.nx, f.ny, f.nz);
      float sums[2];
      k->march_gather(f.volume.data(), f.grid, f.channels, s, sums);
      const float w[2] = {static_cast<float>(rng.uniform(-1, 1)), static_cast<float>(rng.uniform(-1, 1))};
      const double lhs = static_cast<double>(sums[0]) * w[0] + static_cast<double>(sums[1]) * w[1];

      std::vector<float> back(f.volume.size(), 0.0f);
      k->march_scatter(back.data(), f.grid, 0, f.nz, f.channels, s, w);
      double rhs = 0.0;
      for (std::size_t i = 0; i < back.size(); ++i) rhs += static_cast<double>(back[i]) * f.volume[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("scatter into a z-slab equals scatter into the full grid") {
  Fixture f;
  SplitMix64 rng(14);
  for (int n = 0; n < 100; ++n) {
    const MarchSegment s = random_segment(rng, f.nx, f.ny, f.nz);
    const float w[2] = {1.0f, -0.5f};
    std::vector<float> full(f.volume.size(), 0.0f);
    scalar_kernels().march_scatter(full.data(), f.grid, 0, f.nz, f.channels, s, w);

    const auto ext = march_z_extent(f.grid, s);
    const int slab_nz = ext[1] - ext[0] + 1;
    if (slab_nz <= 0) continue;
    const std::size_t plane = static_cast<std::size_t>(f.nx) * f.ny;
    std::vector<float> slab(plane * slab_nz * f.channels, 0.0f);
    scalar_kernels().march_scatter(slab.data(), f.grid, ext[0], slab_nz, f.channels, s, w);
    for (int c = 0; c < f.channels; ++c)
      for (int z = 0; z < f.nz; ++z)
        for (std::size_t i = 0; i < plane; ++i) {
          const float expect = full[c * f.grid.channel_stride + z * plane + i];
          const bool in_slab = z >= ext[0] && z <= ext[1];
          const float got = in_slab ? slab[(c * slab_nz + (z - ext[0])) * plane + i] : 0.0f;
          CHECK(got == expect);
        }
  }
}

TEST_CASE("scalar and avx2 kernels are equivalent") {
  const KernelTable* v = avx2_kernels();
  if (!v) {
    MESSAGE("AVX2 not available on this CPU; skipped");
    return;
  }
  const KernelTable& s = scalar_kernels();

  SUBCASE("gather and scatter") {
    Fixture f;
    SplitMix64 rng(31);
    for (int n = 0; n < 300; ++n) {
      const MarchSegment seg = random_segment(rng, f.nx, f.ny, f.nz);
      float a[2], b[2];
      s.march_gather(f.volume.data(), f.grid, f.channels, seg, a);
      v->march_gather(f.volume.data(), f.grid, f.channels, seg, b);
      for (int c = 0; c < 2; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-5).scale(1.0));

      const float w[2] = {0.75f, -1.25f};
      std::vector<float> sa(f.volume.size(), 0.0f), sb(f.volume.size(), 0.0f);
      s.march_scatter(sa.data(), f.grid, 0, f.nz, f.channels, seg, w);
      v->march_scatter(sb.data(), f.grid, 0, f.nz, f.channels, seg, w);
      for (std::size_t i = 0; i < sa.size(); ++i) REQUIRE(sa[i] == doctest::Approx(sb[i]).epsilon(1e-5).scale(1.0));
    }
  }

  SUBCASE("reductions at lengths around the vector width") {
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 1000u, 4099u}) {
      std::vector<float> a(n), b(n);
      test::fill_uniform(a, n + 1, -2, 2);
      test::fill_uniform(b, n + 2, -2, 2);
      // Naive double-precision oracles.
      double sad = 0, ssd = 0, dp = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sad += std::abs(d);
        ssd += d * d;
        dp += static_cast<double>(a[i]) * b[i];
      }
      for (const KernelTable* k : {&s, v}) {
        CHECK(k->sum_abs_diff(a.data(), b.data(), n) == doctest::Approx(sad).epsilon(1e-12));
        CHECK(k->sum_sq_diff(a.data(), b.data(), n) == doctest::Approx(ssd).epsilon(1e-12));
        CHECK(k->dot(a.data(), b.data(), n) == doctest::Approx(dp).epsilon(1e-12));
      }
      std::vector<float> da = a, db = a;
      s.add_inplace(da.data(), b.data(), n);
      v->add_inplace(db.data(), b.data(), n);
      CHECK(da == db);  // elementwise float adds are exact in both
    }
  }

  SUBCASE("projector output") {
    const GridSpec grid = GridSpec::centered({20, 24, 28}, {3, 3, 3});
    Volume vol(grid);
    test::fill_uniform(vol.data, 41);
    ConeBeamGeometry geom{1000, 1500, 30, 40, {4, 4}, {0.5, -1.0}};
    const SimdLevel before = active_simd_level();
    set_simd_level(SimdLevel::scalar);
    const Projection ps = forward_project(vol, geom, 33.0, default_step(grid));
    const FeatureVolume bs = back_project(ps, geom, 33.0, default_step(grid), grid);
    set_simd_level(SimdLevel::avx2);
    const Projection pv = forward_project(vol, geom, 33.0, default_step(grid));
    const FeatureVolume bv = back_project(ps, geom, 33.0, default_step(grid), grid);
    set_simd_level(before);
    for (std::size_t i = 0; i < ps.data.size(); ++i)
      REQUIRE(ps.data[i] == doctest::Approx(pv.data[i]).epsilon(1e-5).scale(1.0));
    for (std::size_t i = 0; i < bs.data.size(); ++i)
      REQUIRE(bs.data[i] == doctest::Approx(bv.data[i]).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("kernel wrappers check lengths") {
  std::vector<float> a(4), b(5);
  CHECK_THROWS(kernels::dot(a, b));
  CHECK_THROWS(kernels::sum_abs_diff(a, b));
}
