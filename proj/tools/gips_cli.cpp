// gips: phantom creation, DRR rendering, view synthesis, metrics, self
// verification and timing. Exit status: 0 success, 1 verification failure,
// 2 usage, configuration or input error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gips/error.hpp"
#include "gips/json_io.hpp"
#include "gips/kernels.hpp"
#include "gips/metrics.hpp"
#include "gips/parallel.hpp"
#include "gips/projector.hpp"
#include "gips/run.hpp"
#include "gips/selfcheck.hpp"
#include "gips/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitUsage = 2;

void print_json(const json& doc) { std::cout << doc.dump(2) << '\n'; }

struct PhantomArgs {
  std::string spec;
  std::string out;
};

int cmd_phantom(const PhantomArgs& a) {
  const gips::PhantomSpec spec = gips::phantom_spec_from_json(gips::read_json(a.spec));
  gips::save_volume(gips::make_phantom(spec), a.out);
  return kExitOk;
}

struct ProjectArgs {
  std::string volume;
  std::string geometry;
  std::vector<double> angles{0.0};
  std::string out_dir = ".";
  double step = 0.0;
  bool hu = false;
  double mu_water = gips::kDefaultMuWater;
  double resample_z = 0.0;
  std::vector<int> resize_xy;
  int pad_z = 0;
  bool normalize = false;
  bool pgm = false;
};

int cmd_project(const ProjectArgs& a) {
  const gips::ConeBeamGeometry geom = gips::load_geometry(a.geometry);
  gips::Volume vol = gips::load_volume(a.volume);
  if (a.hu) vol = gips::hu_to_attenuation(vol, a.mu_water);
  if (a.resample_z > 0.0) vol = gips::resample_z(vol, a.resample_z);
  if (!a.resize_xy.empty()) vol = gips::resize_xy(vol, a.resize_xy[0], a.resize_xy[1]);
  if (a.pad_z > 0) vol = gips::pad_z(vol, a.pad_z);
  const double step = a.step > 0.0 ? a.step : gips::default_step(vol.grid);

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  gips::require(!ec, gips::Errc::io, "cannot create output directory " + a.out_dir);
  for (double angle : a.angles) {
    gips::Projection p = gips::forward_project(vol, geom, angle, step);
    if (a.normalize) p = gips::normalize_unit_range(p);
    const fs::path stem = fs::path(a.out_dir) / ("drr_" + gips::angle_tag(angle) + "deg");
    gips::save_projection(p, stem, geom);
    if (a.pgm) gips::write_pgm(p, fs::path(stem).replace_extension(".pgm"));
  }
  return kExitOk;
}

struct SynthesizeArgs {
  std::string config;
  std::string out_dir;  // overrides the config's output_dir
};

int cmd_synthesize(const SynthesizeArgs& a) {
  gips::RunConfig config = gips::load_run_config(a.config);
  if (!a.out_dir.empty()) config.output_dir = a.out_dir;
  const gips::PreparedRun run = gips::prepare_run(config);
  const gips::RunOutcome outcome = gips::execute_run(run);
  gips::write_run_outputs(outcome, run.request.geometry, config.output_dir);
  print_json(outcome.report);
  return kExitOk;
}

struct MetricsArgs {
  std::string pred;
  std::string truth;
  std::string csv;
};

int cmd_metrics(const MetricsArgs& a) {
  const gips::Projection pred = gips::load_projection(a.pred);
  const gips::Projection truth = gips::load_projection(a.truth);
  const gips::MetricReport report = gips::evaluate(pred, truth);
  if (!a.csv.empty()) {
    std::ofstream csv(a.csv, std::ios::binary);
    csv << gips::csv_header() << '\n' << gips::csv_row(report) << '\n';
    gips::require(static_cast<bool>(csv), gips::Errc::io, "cannot write " + a.csv);
  }
  print_json(gips::to_json(report));
  return kExitOk;
}

struct SelftestArgs {
  double step_override = 0.0;
  std::string report;
};

int cmd_selftest(const SelftestArgs& a) {
  gips::SelfTestOptions opt;
  opt.step_override = a.step_override;
  const auto results = gips::run_selftest(opt);
  bool ok = true;
  json checks = json::array();
  for (const auto& r : results) {
    checks.push_back(gips::to_json(r));
    ok = ok && r.passed;
  }
  const json doc = {{"schema", 1}, {"passed", ok}, {"checks", checks}};
  if (!a.report.empty()) gips::write_json(a.report, doc);
  print_json(doc);
  return ok ? kExitOk : kExitVerify;
}

struct BenchArgs {
  std::string config;
  int repetitions = 3;
};

int cmd_bench(const BenchArgs& a) {
  gips::require(a.repetitions >= 1, gips::Errc::invalid_argument, "repetitions must be >= 1");
  const gips::PreparedRun run = gips::prepare_run(gips::load_run_config(a.config));

  using Field = double gips::StageTimings::*;
  const std::pair<const char*, Field> stages[] = {
      {"encode", &gips::StageTimings::encode},
      {"back_project", &gips::StageTimings::back_project},
      {"refine", &gips::StageTimings::refine},
      {"forward_project", &gips::StageTimings::forward_project},
      {"generate", &gips::StageTimings::generate},
      {"total", &gips::StageTimings::total},
  };
  std::vector<gips::StageTimings> samples;
  for (int i = 0; i < a.repetitions; ++i) {
    gips::StageTimings t;
    gips::execute_run(run, &t);
    samples.push_back(t);
  }
  json stage_doc = json::object();
  for (const auto& [name, field] : stages) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
      sum += s.*field;
      lo = std::min(lo, s.*field);
    }
    stage_doc[name] = {{"mean_s", sum / a.repetitions}, {"min_s", lo}};
  }
  print_json({{"schema", 1},
              {"repetitions", a.repetitions},
              {"threads", gips::thread_count()},
              {"simd", std::string(gips::kernels::to_string(gips::kernels::active_simd_level()))},
              {"refiner", run.request.refiner->name()},
              {"stages", stage_doc}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gips: geometry-integrated projection synthesis toolkit"};
  app.require_subcommand(1);

  std::size_t threads = 0;
  std::string simd;
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  app.add_option("--simd", simd, "kernel level: scalar | avx2 (default: best available)");

  PhantomArgs phantom;
  auto* sc_phantom = app.add_subcommand("phantom", "voxelize an ellipsoid phantom spec");
  sc_phantom->add_option("--spec", phantom.spec, "phantom spec JSON")->required();
  sc_phantom->add_option("--out", phantom.out, "output volume stem")->required();

  ProjectArgs project;
  auto* sc_project = app.add_subcommand("project", "render DRRs of a volume");
  sc_project->add_option("--volume", project.volume, "input volume (.json header)")->required();
  sc_project->add_option("--geometry", project.geometry, "geometry JSON")->required();
  sc_project->add_option("--angles", project.angles, "gantry angles in degrees")->delimiter(',');
  sc_project->add_option("--out-dir", project.out_dir, "output directory");
  sc_project->add_option("--step", project.step, "ray step in mm (default: half the min spacing)");
  sc_project->add_flag("--hu", project.hu, "input is in Hounsfield units");
  sc_project->add_option("--mu-water", project.mu_water, "water attenuation per mm for --hu");
  sc_project->add_option("--resample-z", project.resample_z, "target z spacing in mm");
  sc_project->add_option("--resize-xy", project.resize_xy, "ROWS,COLS in-plane size")
      ->delimiter(',')
      ->expected(2);
  sc_project->add_option("--pad-z", project.pad_z, "pad to this many z planes");
  sc_project->add_flag("--normalize", project.normalize, "min-max scale each DRR to [0,1]");
  sc_project->add_flag("--pgm", project.pgm, "also write 16-bit PGM previews");

  SynthesizeArgs synth;
  auto* sc_synth = app.add_subcommand("synthesize", "run view synthesis from a run config");
  sc_synth->add_option("--config", synth.config, "run config JSON")->required();
  sc_synth->add_option("--out-dir", synth.out_dir, "override the config's output_dir");

  MetricsArgs metrics;
  auto* sc_metrics = app.add_subcommand("metrics", "compare a prediction with a reference");
  sc_metrics->add_option("--pred", metrics.pred, "predicted projection")->required();
  sc_metrics->add_option("--truth", metrics.truth, "reference projection")->required();
  sc_metrics->add_option("--csv", metrics.csv, "also write a CSV row here");

  SelftestArgs selftest;
  auto* sc_selftest = app.add_subcommand("selftest", "verify the projector pair");
  sc_selftest->add_option("--report", selftest.report, "also write the JSON report here");
  sc_selftest->add_option("--step-override", selftest.step_override)->group("");

  BenchArgs bench;
  auto* sc_bench = app.add_subcommand("bench", "time synthesis stages");
  sc_bench->add_option("--config", bench.config, "run config JSON")->required();
  sc_bench->add_option("--repetitions", bench.repetitions, "number of timed runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (threads > 0) gips::set_thread_count(threads);
    if (!simd.empty()) {
      const auto level = gips::kernels::parse_simd_level(simd);
      gips::require(level.has_value(), gips::Errc::invalid_argument, "unknown --simd level " + simd);
      gips::require(gips::kernels::set_simd_level(*level), gips::Errc::invalid_argument,
                    "--simd " + simd + " is not supported on this CPU");
    }
    if (*sc_phantom) return cmd_phantom(phantom);
    if (*sc_project) return cmd_project(project);
    if (*sc_synth) return cmd_synthesize(synth);
    if (*sc_metrics) return cmd_metrics(metrics);
    if (*sc_selftest) return cmd_selftest(selftest);
    if (*sc_bench) return cmd_bench(bench);
  } catch (const gips::Error& e) {
    std::cerr << "gips: " << gips::to_string(e.code()) << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "gips: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
