// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "gips/error.hpp"
#include "gips/losses.hpp"
#include "gips/metrics.hpp"
#include "gips/projector.hpp"
#include "gips/random.hpp"
#include "gips/selfcheck.hpp"
#include "gips/synthesis.hpp"

using namespace gips;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Slab-method chord of a ray through an axis-aligned box.
double slab_chord(Vec3 o, Vec3 d, Vec3 lo, Vec3 hi) {
  const double oo[3] = {o.x, o.y, o.z}, dd[3] = {d.x, d.y, d.z};
  const double l[3] = {lo.x, lo.y, lo.z}, h[3] = {hi.x, hi.y, hi.z};
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dd[i] == 0.0) {
      if (oo[i] < l[i] || oo[i] > h[i]) return 0.0;
      continue;
    }
    double a = (l[i] - oo[i]) / dd[i], b = (h[i] - oo[i]) / dd[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  return t1 > t0 ? (t1 - t0) * norm(d) : 0.0;
}

void adjoint() {
  const auto t0 = Clock::now();
  AdjointCheckOptions opt;
  opt.trials = 20;
  const CheckResult r = check_adjoint(opt);
  const double s = seconds_since(t0);
  report(r.passed && r.cases >= 20 && s < 10.0, "adjoint-identity",
         fmt("worst %.3g (tol %.0e) over %d pairs, 32^3 / 48x64, %.2f s (limit 10 s)", r.residual, r.tolerance,
             r.cases, s));
}

void analytic_drr() {
  const ChordCheckResult r = check_chord({});
  // Cross-check the chord oracle itself on random rays through the cube.
  SplitMix64 rng(11);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 src{rng.uniform(-400, 400), -1000.0, rng.uniform(-400, 400)};
    const Vec3 dst{rng.uniform(-100, 100), rng.uniform(-100, 100), rng.uniform(-100, 100)};
    const Ray ray = make_ray(src, dst, GridSpec::centered({32, 32, 32}, {5, 5, 5}));
    const Vec3 lo{-50, -50, -50}, hi{50, 50, 50};
    worst = std::max(worst, std::abs(box_chord(ray, lo, hi) - slab_chord(ray.origin, ray.direction, lo, hi)));
  }
  report(r.central.passed && r.off_axis.passed && worst <= 1e-9, "analytic-drr",
         fmt("central rel err %.3g (tol 1%%), off-axis worst %.3g over %d rays (tol 2%%), chord oracle "
             "cross-check %.1e mm",
             r.central.residual, r.off_axis.residual, r.off_axis.cases, worst));
}

void rotation() {
  const CheckResult r = check_rotation_equivariance({});
  report(r.passed, "rotation-equivariance",
         fmt("worst pairwise MAE %.3g over 0/30/60/90 deg (tol %.0e)", r.residual, r.tolerance));
}

void pipeline_fidelity() {
  const auto t0 = Clock::now();
  const ConeBeamGeometry geom{1000.0, 1500.0, 90, 150, {4.0, 4.0}, {0.0, 0.0}};
  const GridSpec grid = GridSpec::centered({128, 128, 128}, {1.5, 1.5, 1.5});
  const double step = default_step(grid);
  const std::vector<double> targets{30.0, 60.0};
  bool all = true;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Volume v = make_phantom(random_phantom_spec(seed, 3, grid));
    auto drr = [&](double a) { return normalize_unit_range(forward_project(v, geom, a, step)); };
    auto mean_mae = [&](std::vector<Projection> sources) {
      SynthesisRequest req;
      req.sources = std::move(sources);
      req.target_angles = targets;
      req.geometry = geom;
      req.grid = grid;
      const SynthesisResult r = synthesize(req);
      double m = 0.0;
      for (std::size_t i = 0; i < targets.size(); ++i) m += mae(r.target_views[i], drr(targets[i]));
      return m / static_cast<double>(targets.size());
    };
    const Projection ap = drr(0.0);
    const double one = mean_mae({ap});
    const double two = mean_mae({ap, drr(90.0)});
    const bool ok = two < one;
    all = all && ok;
    detail += fmt("%sseed %d %.5f vs %.5f%s", seed == 1 ? "" : ", ", static_cast<int>(seed), two, one,
                  ok ? "" : " (not lower)");
  }
  const double s = seconds_since(t0);
  report(all && s < 60.0, "pipeline-fidelity",
         "two-view vs one-view mean MAE: " + detail + fmt("; %.1f s (limit 60 s)", s));
}

void metric_golden() {
  Projection zero(16, 16), tenth(16, 16, 1, 0.0, 0.1f);
  const double p = psnr(tenth, zero);
  Projection a(16, 16), b(16, 16);
  SplitMix64 rng(5);
  for (float& x : a.data) x = static_cast<float>(rng.uniform());
  for (float& x : b.data) x = static_cast<float>(rng.uniform());

  double s = 0, s2 = 0, lo = 1e300, hi = -1e300;
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      const double d = static_cast<double>(a.at(0, r, c)) - b.at(0, r, c);
      s += std::abs(d);
      s2 += d * d;
      lo = std::min(lo, static_cast<double>(b.at(0, r, c)));
      hi = std::max(hi, static_cast<double>(b.at(0, r, c)));
    }
  const double mae_err = std::abs(mae(a, b) - s / 256);
  const double nrmse_err = std::abs(nrmse(a, b) - std::sqrt(s2 / 256) / (hi - lo));
  const double self = ssim(a, a);
  report(std::abs(p - 20.0) <= 1e-6 && self == 1.0 && mae_err <= 1e-9 && nrmse_err <= 1e-9, "metric-golden",
         fmt("PSNR(0.1 diff) %.9f dB, SSIM(x,x) %.17g, MAE err %.1e, NRMSE err %.1e", p, self, mae_err,
             nrmse_err));
}

void loss_arithmetic() {
  const double total = total_loss(0.2, 0.05, 0.3, {1.0, 10.0, 1.0});
  Projection img(8, 8);
  SplitMix64 rng(9);
  for (float& x : img.data) x = static_cast<float>(rng.uniform());
  const EncodedView e = identity_encoder()->encode(img);
  DiscriminatorScores gen_opt, disc_opt;
  gen_opt.real = {std::vector<float>(4, 1.0f)};
  gen_opt.fake = {std::vector<float>(4, 1.0f)};
  disc_opt.real = {std::vector<float>(4, 1.0f)};
  disc_opt.fake = {std::vector<float>(4, 0.0f)};
  const double optima[] = {reconstruction_loss(img, img), cycle_consistency_loss(e, e),
                           adversarial_loss_generator(gen_opt), adversarial_loss_discriminator(disc_opt),
                           total_loss(0.0, 0.0, 0.0, {})};
  const bool zeros = std::all_of(std::begin(optima), std::end(optima), [](double x) { return x == 0.0; });
  report(total == 1.0 && zeros, "loss-arithmetic",
         fmt("total_loss(0.2, 0.05, 0.3; 1, 10, 1) = %.17g, optima all zero: %s", total, zeros ? "yes" : "no"));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GIPS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / ("gips_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config = (fs::path(GIPS_SOURCE_DIR) / "configs" / "run_two_view.json").string();
  bool ok = true;
  int compared = 0;
  for (const char* n : {"1", "2", "8"}) {
    const fs::path d = dir / n;
    fs::create_directories(d);
    ok = ok && run_cli(std::string("--threads ") + n + " selftest --report '" + (d / "selftest.json").string() + "'") == 0;
    ok = ok && run_cli(std::string("--threads ") + n + " synthesize --config '" + config + "' --out-dir '" +
                       (d / "synth").string() + "'") == 0;
  }
  if (ok) {
    for (const auto& entry : fs::recursive_directory_iterator(dir / "1")) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), dir / "1");
      const std::string base = slurp(entry.path());
      for (const char* n : {"2", "8"}) {
        ok = ok && !base.empty() && slurp(dir / n / rel) == base;
        ++compared;
      }
    }
    ok = ok && compared > 0;
  }
  fs::remove_all(dir);
  report(ok, "determinism",
         fmt("selftest report and phantom synthesis outputs at 1/2/8 threads: %d file comparisons, %s", compared,
             ok ? "all byte-identical" : "mismatch or command failure"));
}

}  // namespace

int main() {
  try {
    adjoint();
    analytic_drr();
    rotation();
    pipeline_fidelity();
    metric_golden();
    loss_arithmetic();
    determinism();
  } catch (const std::exception& e) {
    report(false, "harness", e.what());
  }
  std::printf("EXCLUDED trained-model-figures: absolute image-quality values and timings of a trained "
              "network on clinical CT are not reproducible here\n");
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
