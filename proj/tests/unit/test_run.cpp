#include <doctest.h>

#include <cmath>
#include <fstream>

#include "gips/error.hpp"
#include "gips/json_io.hpp"
#include "gips/metrics.hpp"
#include "gips/projector.hpp"
#include "gips/run.hpp"
#include "test_support.hpp"

using namespace gips;
using nlohmann::json;

namespace {

const ConeBeamGeometry kGeom{1000, 1500, 24, 32, {8, 8}, {0, 0}};
const GridSpec kGrid = GridSpec::centered({24, 24, 24}, {4, 4, 4});

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected gips::Error");
  return Errc::io;
}

// Geometry + seeded phantom + phantom-driven run config in a temp directory.
struct Fixture {
  test::TempDir dir;
  Fixture() {
    write_json(dir / "geom.json", geometry_to_json(kGeom));
    json ph = phantom_spec_to_json(random_phantom_spec(1, 3, kGrid));
    ph["random"] = {{"seed", 1}, {"count", 3}};
    ph.erase("ellipsoids");
    write_json(dir / "phantom.json", ph);
  }
  json config() const {
    return {{"schema", 1},
            {"geometry", "geom.json"},
            {"phantom", "phantom.json"},
            {"seed", 2},
            {"source_angles", {0, 90}},
            {"target_angles", {30, 60}},
            {"output_dir", "out"}};
  }
};

}  // namespace

TEST_CASE("run config parsing") {
  Fixture fx;
  const RunConfig c = run_config_from_json(fx.config(), fx.dir.path());
  CHECK(c.geometry_path == fx.dir / "geom.json");
  CHECK(c.phantom_path == fx.dir / "phantom.json");
  CHECK(c.output_dir == fx.dir / "out");
  CHECK(c.seed == 2u);
  CHECK(c.encoder == "identity");
  CHECK(c.refiner == "identity");
  CHECK(c.generator == "passthrough");
  CHECK(c.loss_weights.rec == 10.0);
  CHECK(c.target_angles == std::vector<double>{30, 60});

  json doc = fx.config();
  doc["geometry"] = "/abs/geom.json";
  doc["stages"] = {{"refiner", "smoothing:2"}};
  doc["loss_weights"] = {{"rec", 5}};
  const RunConfig d = run_config_from_json(doc, fx.dir.path());
  CHECK(d.geometry_path == std::filesystem::path("/abs/geom.json"));
  CHECK(d.refiner == "smoothing:2");
  CHECK(d.loss_weights.rec == 5.0);
  CHECK(d.loss_weights.cyc == 1.0);

  write_json(fx.dir / "run.json", fx.config());
  CHECK(load_run_config(fx.dir / "run.json").phantom_path == fx.dir / "phantom.json");
}

TEST_CASE("run config validation") {
  Fixture fx;
  auto with = [&](auto edit) {
    json doc = fx.config();
    edit(doc);
    return [doc, &fx] { run_config_from_json(doc, fx.dir.path()); };
  };
  CHECK(code_of(with([](json& d) { d["schema"] = 2; })) == Errc::format);
  CHECK(code_of(with([](json& d) { d.erase("schema"); })) == Errc::format);
  CHECK(code_of(with([](json& d) { d.erase("geometry"); })) == Errc::format);
  CHECK(code_of(with([](json& d) { d["target_angles"] = "30"; })) == Errc::format);
  CHECK(code_of(with([](json& d) { d["target_angles"] = json::array(); })) == Errc::invalid_argument);
  CHECK(code_of(with([](json& d) { d["source_angles"] = json::array(); })) == Errc::invalid_argument);
  CHECK(code_of(with([](json& d) { d["sources"] = {"a"}; })) == Errc::invalid_argument);
  CHECK(code_of(with([](json& d) { d["loss_weights"] = {{"cyc", -1}}; })) == Errc::invalid_argument);
  CHECK(code_of(with([](json& d) {
          d.erase("phantom");
          d.erase("seed");
        })) == Errc::invalid_argument);  // no inputs at all
  CHECK(code_of(with([](json& d) {
          d.erase("phantom");
          d["sources"] = {"a"};
        })) == Errc::invalid_argument);  // seed without phantom
  CHECK(code_of(with([](json& d) {
          d.erase("phantom");
          d.erase("seed");
          d["sources"] = {"a"};
        })) == Errc::invalid_argument);  // no grid
  CHECK(code_of(with([](json& d) {
          d.erase("phantom");
          d.erase("seed");
          d["sources"] = {"a"};
          d["grid"] = grid_to_json(kGrid);
          d["truths"] = {"t"};
        })) == Errc::invalid_argument);  // one truth for two targets
}

TEST_CASE("phantom runs render min-max normalized DRRs with the seed override") {
  Fixture fx;
  const PreparedRun run = prepare_run(run_config_from_json(fx.config(), fx.dir.path()));
  REQUIRE(run.request.sources.size() == 2);
  REQUIRE(run.truths.size() == 2);
  CHECK(run.request.grid == kGrid);

  const Volume v = make_phantom(random_phantom_spec(2, 3, kGrid));
  const Projection expected = normalize_unit_range(forward_project(v, kGeom, 90.0, default_step(kGrid)));
  CHECK(run.request.sources[1] == expected);
  CHECK(run.truths[0].angle_deg == 30.0);

  // A seed on a phantom without a random block is rejected.
  write_json(fx.dir / "fixed.json", phantom_spec_to_json(random_phantom_spec(1, 3, kGrid)));
  json doc = fx.config();
  doc["phantom"] = "fixed.json";
  CHECK(code_of([&] { prepare_run(run_config_from_json(doc, fx.dir.path())); }) == Errc::invalid_argument);
}

TEST_CASE("file-driven runs check detector shapes") {
  Fixture fx;
  save_projection(test::random_projection(24, 32, 1), fx.dir / "src0");
  save_projection(test::random_projection(24, 31, 2), fx.dir / "bad");
  json doc = {{"schema", 1},          {"geometry", "geom.json"}, {"grid", grid_to_json(kGrid)},
              {"sources", {"src0"}}, {"target_angles", {45}}};
  const PreparedRun run = prepare_run(run_config_from_json(doc, fx.dir.path()));
  CHECK(run.request.sources.size() == 1);
  CHECK(run.truths.empty());

  doc["sources"] = {"bad"};
  CHECK(code_of([&] { prepare_run(run_config_from_json(doc, fx.dir.path())); }) == Errc::shape_mismatch);
  doc["sources"] = {"missing"};
  CHECK(code_of([&] { prepare_run(run_config_from_json(doc, fx.dir.path())); }) == Errc::io);
}

TEST_CASE("run report content") {
  Fixture fx;
  const PreparedRun run = prepare_run(run_config_from_json(fx.config(), fx.dir.path()));
  const RunOutcome out = execute_run(run);
  const json& r = out.report;
  CHECK(r.at("schema") == 1);
  CHECK(r.at("stages").at("refiner") == "identity");
  CHECK(r.at("texture").size() == 2);
  REQUIRE(r.at("sources").size() == 2);
  REQUIRE(r.at("targets").size() == 2);
  CHECK(r.at("targets")[0].at("file") == "synth_tgt_30deg");
  CHECK(r.at("sources")[1].at("file") == "synth_src_90deg");

  double rec = 0, cyc = 0;
  for (int i = 0; i < 2; ++i) {
    const double l = reconstruction_loss(out.result.target_views[i], run.truths[i]);
    CHECK(r.at("targets")[i].at("reconstruction_loss").get<double>() == l);
    CHECK(r.at("targets")[i].at("metrics").at("mae").get<double>() == doctest::Approx(l).epsilon(1e-12));
    rec += l / 2;
    cyc += r.at("sources")[i].at("cycle_loss").get<double>() / 2;
  }
  const json& losses = r.at("losses");
  CHECK(losses.at("adversarial").is_null());
  CHECK(losses.at("reconstruction").get<double>() == doctest::Approx(rec).epsilon(1e-12));
  CHECK(losses.at("cycle").get<double>() == doctest::Approx(cyc).epsilon(1e-12));
  CHECK(losses.at("total").get<double>() == doctest::Approx(cyc + 10 * rec).epsilon(1e-12));
}

TEST_CASE("run outputs are written and byte-identical on repeat") {
  Fixture fx;
  const RunConfig c = run_config_from_json(fx.config(), fx.dir.path());
  const PreparedRun run = prepare_run(c);
  write_run_outputs(execute_run(run), run.request.geometry, fx.dir / "a");
  write_run_outputs(execute_run(run), run.request.geometry, fx.dir / "b");
  for (const char* f : {"report.json", "synth_src_0deg.json", "synth_src_0deg.raw", "synth_tgt_60deg.json",
                        "synth_tgt_60deg.raw"}) {
    CAPTURE(f);
    REQUIRE(std::filesystem::exists(fx.dir / "a" / f));
    CHECK(test::read_bytes(fx.dir / "a" / f) == test::read_bytes(fx.dir / "b" / f));
  }
  std::optional<ConeBeamGeometry> geom;
  const Projection t = load_projection(fx.dir / "a" / "synth_tgt_60deg", &geom);
  CHECK(t.angle_deg == 60.0);
  REQUIRE(geom.has_value());
  CHECK(*geom == kGeom);
}

TEST_CASE("angle tags") {
  CHECK(angle_tag(30) == "30");
  CHECK(angle_tag(-45) == "-45");
  CHECK(angle_tag(22.5) == "22.5");
}
