#pragma once

#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "gips/projection.hpp"

namespace gips {

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;  // normalized by the reference's dynamic range
  double ssim = 0.0;
  double psnr = 0.0;  // dB; +infinity for identical images

  bool psnr_is_infinite() const noexcept { return psnr == std::numeric_limits<double>::infinity(); }
};

// All metrics compare every channel; shapes must match (Errc::shape_mismatch).
double mae(const Projection& a, const Projection& b);

// sqrt(mean (a - b)^2) / (max(ref) - min(ref)); `ref` is the second argument.
// A constant reference raises Errc::degenerate.
double nrmse(const Projection& a, const Projection& ref);

// 10 log10(range^2 / MSE); identical images give +infinity.
double psnr(const Projection& a, const Projection& b, double data_range = 1.0);

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, data range 1, averaged over all fully-contained windows and over
// channels. Images smaller than the window raise Errc::invalid_argument.
double ssim(const Projection& a, const Projection& b);

// Per-window SSIM terms of one channel, row-major over the
// (rows - 10) x (cols - 10) valid window positions.
struct SsimMaps {
  int rows = 0;
  int cols = 0;
  std::vector<double> luminance;
  std::vector<double> contrast;
  std::vector<double> structure;  // (cov + C3) / (sd_a sd_b + C3), C3 = C2 / 2
  std::vector<double> ssim;
};
SsimMaps ssim_maps(const Projection& a, const Projection& b, int channel = 0);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

MetricReport evaluate(const Projection& pred, const Projection& truth);

// {"mae":..,"rmse":..,"ssim":..,"psnr":.. or null,"psnr_infinite":bool}
nlohmann::json to_json(const MetricReport& report);
std::string csv_header();
std::string csv_row(const MetricReport& report);

}  // namespace gips
