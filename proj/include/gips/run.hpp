#pragma once

// Configured synthesis runs shared by the `synthesize` and `bench` commands.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gips/losses.hpp"
#include "gips/metrics.hpp"
#include "gips/synthesis.hpp"
#include "gips/volume.hpp"

namespace gips {

// Run configuration, JSON schema 1. Relative paths resolve against the
// directory of the config file.
//
//   {"schema": 1,
//    "geometry": "geometry.json",
//    "grid": {"dims": [D, H, W], "spacing": [sz, sy, sx]},   feature volume
//    "step": 0,                                              <= 0: default
//    "stages": {"encoder": "identity", "refiner": "identity",
//               "generator": "passthrough"},
//    "loss_weights": {"cyc": 1, "rec": 10, "adv": 1},
//    "source_angles": [0, 90], "target_angles": [30, 60],
//    either  "phantom": "phantom.json", "seed": 7    (renders sources/truths)
//    or      "sources": ["a.json", ...], "truths": ["t.json", ...] (optional),
//    "output_dir": "out"}
//
// With a phantom, sources and truths are DRRs of the phantom at the listed
// angles, each min-max normalized to [0, 1]; `seed` replaces the phantom's
// random seed. Without one, `source_angles` is ignored and the angles come
// from the projection headers.
struct RunConfig {
  std::filesystem::path base_dir;
  std::filesystem::path geometry_path;
  std::optional<GridSpec> grid;  // default: phantom grid, else required
  double step = 0.0;
  std::string encoder = "identity";
  std::string refiner = "identity";
  std::string generator = "passthrough";
  LossWeights loss_weights;
  std::vector<double> source_angles;
  std::vector<double> target_angles;
  std::optional<std::filesystem::path> phantom_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::filesystem::path> sources;
  std::vector<std::filesystem::path> truths;
  std::filesystem::path output_dir = "out";
};

RunConfig run_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Everything a run needs in memory: geometry, stages and input views.
struct PreparedRun {
  SynthesisRequest request;
  std::vector<Projection> truths;  // empty, or one per target angle
  LossWeights loss_weights;
};
PreparedRun prepare_run(const RunConfig& config);

struct RunOutcome {
  SynthesisResult result;
  nlohmann::json report;  // deterministic: no timings
};

// Synthesizes and builds the report: stage names, fused texture, cycle loss
// of the regenerated sources and, with truths, per-target metrics,
// reconstruction loss and the weighted total (adversarial term omitted,
// there is no discriminator at inference).
RunOutcome execute_run(const PreparedRun& run, StageTimings* timings = nullptr);

// Writes synth_src_<a>deg / synth_tgt_<a>deg projection pairs and
// report.json into `dir`.
void write_run_outputs(const RunOutcome& outcome, const ConeBeamGeometry& geom,
                       const std::filesystem::path& dir);

// "30", "-45", "22.5": file-name form of an angle.
std::string angle_tag(double angle_deg);

}  // namespace gips
