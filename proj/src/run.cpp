#include "gips/run.hpp"

#include "gips/error.hpp"
#include "gips/json_io.hpp"
#include "gips/projector.hpp"

#include <cmath>
#include <cstdio>

namespace gips {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

std::vector<double> angle_list(const json& doc, const char* key) {
  if (!doc.contains(key)) return {};
  std::vector<double> out = doc.at(key).get<std::vector<double>>();
  for (double a : out)
    require(std::isfinite(a), Errc::invalid_argument, std::string(key) + ": non-finite angle");
  return out;
}

PhantomSpec load_phantom(const RunConfig& config) {
  json doc = read_json(*config.phantom_path);
  if (config.seed) {
    require(doc.contains("random"), Errc::invalid_argument,
            "run config sets a seed but the phantom has no \"random\" block");
    doc["random"]["seed"] = *config.seed;
  }
  return phantom_spec_from_json(doc);
}

json texture_json(const FeatureVector& t) { return t.values; }

}  // namespace

std::string angle_tag(double angle_deg) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", angle_deg);
  return buf;
}

RunConfig run_config_from_json(const json& doc, const fs::path& base_dir) {
  check_schema(doc, 1, "run config", true);
  RunConfig c;
  c.base_dir = base_dir;
  try {
    c.geometry_path = resolve(base_dir, doc.at("geometry").get<std::string>());
    if (doc.contains("grid")) c.grid = grid_from_json(doc.at("grid"));
    c.step = doc.value("step", 0.0);
    if (doc.contains("stages")) {
      const json& s = doc.at("stages");
      c.encoder = s.value("encoder", c.encoder);
      c.refiner = s.value("refiner", c.refiner);
      c.generator = s.value("generator", c.generator);
    }
    if (doc.contains("loss_weights")) {
      const json& w = doc.at("loss_weights");
      c.loss_weights.cyc = w.value("cyc", c.loss_weights.cyc);
      c.loss_weights.rec = w.value("rec", c.loss_weights.rec);
      c.loss_weights.adv = w.value("adv", c.loss_weights.adv);
    }
    c.source_angles = angle_list(doc, "source_angles");
    c.target_angles = angle_list(doc, "target_angles");
    if (doc.contains("phantom"))
      c.phantom_path = resolve(base_dir, doc.at("phantom").get<std::string>());
    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& p : doc.value("sources", std::vector<std::string>{}))
      c.sources.push_back(resolve(base_dir, p));
    for (const auto& p : doc.value("truths", std::vector<std::string>{}))
      c.truths.push_back(resolve(base_dir, p));
    c.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("run config: ") + e.what());
  }

  c.loss_weights.validate();
  require(!c.target_angles.empty(), Errc::invalid_argument, "run config: target_angles is empty");
  if (c.phantom_path) {
    require(c.sources.empty() && c.truths.empty(), Errc::invalid_argument,
            "run config: give either a phantom or source files, not both");
    require(!c.source_angles.empty(), Errc::invalid_argument,
            "run config: source_angles is empty");
  } else {
    require(!c.sources.empty(), Errc::invalid_argument,
            "run config: needs a phantom or at least one source file");
    require(!c.seed, Errc::invalid_argument, "run config: seed requires a phantom");
    require(c.grid.has_value(), Errc::invalid_argument,
            "run config: grid is required without a phantom");
    require(c.truths.empty() || c.truths.size() == c.target_angles.size(),
            Errc::invalid_argument, "run config: truths must match target_angles one to one");
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  return run_config_from_json(read_json(path), path.parent_path());
}

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun run;
  SynthesisRequest& req = run.request;
  req.geometry = load_geometry(config.geometry_path);
  req.encoder = make_encoder(config.encoder);
  req.refiner = make_refiner(config.refiner);
  req.generator = make_generator(config.generator);
  req.target_angles = config.target_angles;
  req.step = config.step;
  run.loss_weights = config.loss_weights;

  if (config.phantom_path) {
    const PhantomSpec spec = load_phantom(config);
    const Volume volume = make_phantom(spec);
    req.grid = config.grid.value_or(spec.grid);
    const double step = config.step > 0.0 ? config.step : default_step(spec.grid);
    auto render = [&](double angle) {
      return normalize_unit_range(forward_project(volume, req.geometry, angle, step));
    };
    for (double a : config.source_angles) req.sources.push_back(render(a));
    for (double a : config.target_angles) run.truths.push_back(render(a));
  } else {
    req.grid = *config.grid;
    for (const auto& p : config.sources) {
      req.sources.push_back(load_projection(p));
      check_detector_shape(req.sources.back(), req.geometry);
    }
    for (std::size_t i = 0; i < config.truths.size(); ++i) {
      run.truths.push_back(load_projection(config.truths[i]));
      check_detector_shape(run.truths.back(), req.geometry);
    }
  }
  return run;
}

RunOutcome execute_run(const PreparedRun& run, StageTimings* timings) {
  RunOutcome out;
  out.result = synthesize(run.request, timings);
  const SynthesisResult& r = out.result;

  json report;
  report["schema"] = 1;
  report["stages"] = {{"encoder", run.request.encoder->name()},
                      {"refiner", run.request.refiner->name()},
                      {"generator", run.request.generator->name()}};
  report["texture"] = texture_json(r.texture);

  // Regenerated sources re-encoded against the original encodings.
  double cyc = 0.0;
  json sources = json::array();
  for (std::size_t i = 0; i < r.source_views.size(); ++i) {
    const EncodedView again = encode_checked(*run.request.encoder, r.source_views[i]);
    const double c = cycle_consistency_loss(again, r.encoded[i]);
    cyc += c;
    sources.push_back({{"angle_deg", r.source_views[i].angle_deg},
                       {"file", "synth_src_" + angle_tag(r.source_views[i].angle_deg) + "deg"},
                       {"cycle_loss", c}});
  }
  cyc /= static_cast<double>(r.source_views.size());
  report["sources"] = sources;

  json targets = json::array();
  double rec = 0.0;
  for (std::size_t i = 0; i < r.target_views.size(); ++i) {
    const Projection& view = r.target_views[i];
    json t = {{"angle_deg", view.angle_deg},
              {"file", "synth_tgt_" + angle_tag(view.angle_deg) + "deg"}};
    if (!run.truths.empty()) {
      const double l = reconstruction_loss(view, run.truths[i]);
      rec += l;
      t["reconstruction_loss"] = l;
      t["metrics"] = to_json(evaluate(view, run.truths[i]));
    }
    targets.push_back(t);
  }
  report["targets"] = targets;

  json losses = {{"cycle", cyc}, {"adversarial", nullptr}};
  if (!run.truths.empty()) {
    rec /= static_cast<double>(r.target_views.size());
    losses["reconstruction"] = rec;
    losses["total"] = total_loss(cyc, rec, 0.0, run.loss_weights);
  }
  losses["weights"] = {{"cyc", run.loss_weights.cyc},
                       {"rec", run.loss_weights.rec},
                       {"adv", run.loss_weights.adv}};
  report["losses"] = losses;
  out.report = std::move(report);
  return out;
}

void write_run_outputs(const RunOutcome& outcome, const ConeBeamGeometry& geom,
                       const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Errc::io, "cannot create output directory " + dir.string());
  for (const Projection& p : outcome.result.source_views)
    save_projection(p, dir / ("synth_src_" + angle_tag(p.angle_deg) + "deg"), geom);
  for (const Projection& p : outcome.result.target_views)
    save_projection(p, dir / ("synth_tgt_" + angle_tag(p.angle_deg) + "deg"), geom);
  write_json(dir / "report.json", outcome.report);
}

}  // namespace gips
