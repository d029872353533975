#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "gips/json_io.hpp"
#include "gips/projection.hpp"
#include "gips/volume.hpp"
#include "test_support.hpp"

using namespace gips;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(GIPS_SOURCE_DIR) / "configs";

// Runs the CLI with stdout captured to `out` (stderr discarded); returns the exit code.
int cli(const std::string& args, const fs::path& out = "/dev/null") {
  const std::string cmd = std::string(GIPS_CLI_PATH) + " " + args + " > '" + out.string() + "' 2>/dev/null";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("") == 2);
  CHECK(cli("frobnicate") == 2);
  CHECK(cli("phantom --out x") == 2);
  CHECK(cli("phantom --spec /nonexistent/spec.json --out /tmp/x") == 2);
  CHECK(cli("--simd avx9 selftest") == 2);
  CHECK(cli("bench --config " + q(kConfigs / "run_one_view.json") + " --repetitions 0") == 2);
  CHECK(cli("--help") == 0);
}

TEST_CASE("phantom from an empty spec is a zero volume") {
  test::TempDir dir;
  write_json(dir / "spec.json", {{"schema", 1}, {"dims", {4, 5, 6}}, {"spacing", {1, 1, 1}}});
  REQUIRE(cli("phantom --spec " + q(dir / "spec.json") + " --out " + q(dir / "vol")) == 0);
  const Volume v = load_volume(dir / "vol.json");
  CHECK(v.grid.dims == std::array<int, 3>{4, 5, 6});
  for (float x : v.data) CHECK(x == 0.0f);
}

TEST_CASE("project writes one DRR per angle and matches the sphere chord") {
  test::TempDir dir;
  REQUIRE(cli("phantom --spec " + q(kConfigs / "phantom_sphere.json") + " --out " + q(dir / "sphere")) == 0);
  REQUIRE(cli("project --volume " + q(dir / "sphere.json") + " --geometry " + q(kConfigs / "desk_geometry.json") +
              " --angles 0,45,90,180 --out-dir " + q(dir / "drr") + " --pgm") == 0);
  for (const char* a : {"0", "45", "90", "180"}) {
    CHECK(fs::exists(dir / "drr" / (std::string("drr_") + a + "deg.json")));
    CHECK(fs::exists(dir / "drr" / (std::string("drr_") + a + "deg.raw")));
    CHECK(fs::exists(dir / "drr" / (std::string("drr_") + a + "deg.pgm")));
  }
  // Pixel (44, 74) sits 2 mm off the detector center on both axes: 4/3 mm at the isocenter.
  const Projection p = load_projection(dir / "drr" / "drr_0deg");
  const double off = 2.0 / 1.5;
  const double chord = 2.0 * std::sqrt(20.0 * 20.0 - 2 * off * off) * 0.02;
  CHECK(std::abs(p.at(0, 44, 74) - chord) <= 0.02 * chord);
}

TEST_CASE("metrics command prints JSON and writes CSV") {
  test::TempDir dir;
  save_projection(test::random_projection(16, 16, 1), dir / "a");
  save_projection(test::random_projection(16, 16, 2), dir / "b");
  save_projection(test::random_projection(16, 17, 3), dir / "c");
  REQUIRE(cli("metrics --pred " + q(dir / "a.json") + " --truth " + q(dir / "b.json") + " --csv " +
                  q(dir / "m.csv"),
              dir / "m.json") == 0);
  const json m = read_json(dir / "m.json");
  CHECK(m.contains("mae"));
  CHECK(m.contains("ssim"));
  CHECK(test::read_bytes(dir / "m.csv").starts_with("mae,rmse,ssim,psnr\n"));
  CHECK(cli("metrics --pred " + q(dir / "a.json") + " --truth " + q(dir / "c.json")) == 2);
}

TEST_CASE("selftest exit codes") {
  test::TempDir dir;
  CHECK(cli("selftest --report " + q(dir / "st.json")) == 0);
  CHECK(read_json(dir / "st.json").at("passed") == true);
  CHECK(cli("selftest --step-override 100") == 1);
}

TEST_CASE("synthesize writes outputs and rejects a missing geometry") {
  test::TempDir dir;
  json cfg = read_json(kConfigs / "run_two_view.json");
  cfg["geometry"] = (kConfigs / "desk_geometry.json").string();
  cfg["phantom"] = (kConfigs / "phantom_random3.json").string();
  cfg["target_angles"] = {30, 0};
  write_json(dir / "run.json", cfg);
  REQUIRE(cli("synthesize --config " + q(dir / "run.json") + " --out-dir " + q(dir / "out"), dir / "r.json") == 0);
  CHECK(read_json(dir / "r.json") == read_json(dir / "out" / "report.json"));
  // A source angle requested as a target goes through the same path.
  CHECK(test::read_bytes(dir / "out" / "synth_tgt_0deg.raw") == test::read_bytes(dir / "out" / "synth_src_0deg.raw"));

  cfg["geometry"] = "missing_geometry.json";
  write_json(dir / "bad.json", cfg);
  CHECK(cli("synthesize --config " + q(dir / "bad.json") + " --out-dir " + q(dir / "out2")) == 2);
  cfg.erase("schema");
  write_json(dir / "noschema.json", cfg);
  CHECK(cli("synthesize --config " + q(dir / "noschema.json")) == 2);
}

TEST_CASE("synthesize output is byte-identical across thread counts") {
  test::TempDir dir;
  const std::string cfg = q(kConfigs / "run_two_view.json");
  for (const char* n : {"1", "2", "8"})
    REQUIRE(cli(std::string("--threads ") + n + " synthesize --config " + cfg + " --out-dir " + q(dir / n)) == 0);
  for (const char* f : {"report.json", "synth_src_0deg.raw", "synth_src_90deg.raw", "synth_tgt_30deg.raw",
                        "synth_tgt_60deg.raw"}) {
    CAPTURE(f);
    const std::string base = test::read_bytes(dir / "1" / f);
    CHECK(!base.empty());
    CHECK(test::read_bytes(dir / "2" / f) == base);
    CHECK(test::read_bytes(dir / "8" / f) == base);
  }
}

TEST_CASE("bench reports every stage") {
  test::TempDir dir;
  REQUIRE(cli("--threads 2 bench --config " + q(kConfigs / "run_two_view_smooth.json") + " --repetitions 2",
              dir / "b.json") == 0);
  const json b = read_json(dir / "b.json");
  CHECK(b.at("repetitions") == 2);
  CHECK(b.at("threads") == 2);
  CHECK(b.at("refiner") == "smoothing:3");
  for (const char* s : {"encode", "back_project", "refine", "forward_project", "generate", "total"}) {
    CAPTURE(s);
    CHECK(b.at("stages").at(s).at("min_s").get<double>() >= 0.0);
    CHECK(b.at("stages").at(s).at("min_s").get<double>() <= b.at("stages").at(s).at("mean_s").get<double>());
  }
  CHECK(b.at("stages").at("refine").at("mean_s").get<double>() > 0.0);
}
