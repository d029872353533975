#include "gips/metrics.hpp"

#include "gips/error.hpp"
#include "gips/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace gips {
namespace {

void check_pair(const Projection& a, const Projection& b) {
  require(a.same_shape(b), Errc::shape_mismatch, "metric operands differ in shape");
  require(!a.data.empty(), Errc::invalid_argument, "metric operands are empty");
}

std::vector<double> window_taps() {
  std::vector<double> taps(kSsimWindow);
  const int r = kSsimWindow / 2;
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-0.5 * i * i / (kSsimSigma * kSsimSigma));
    total += taps[i + r];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable 'valid' Gaussian filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& img, int rows, int cols,
                                 const std::vector<double>& taps) {
  const int w = kSsimWindow;
  const int out_rows = rows - w + 1;
  const int out_cols = cols - w + 1;
  std::vector<double> horiz(static_cast<std::size_t>(rows) * out_cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < w; ++k) acc += taps[k] * img[static_cast<std::size_t>(r) * cols + c + k];
      horiz[static_cast<std::size_t>(r) * out_cols + c] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(out_rows) * out_cols);
  for (int r = 0; r < out_rows; ++r)
    for (int c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (int k = 0; k < w; ++k) acc += taps[k] * horiz[static_cast<std::size_t>(r + k) * out_cols + c];
      out[static_cast<std::size_t>(r) * out_cols + c] = acc;
    }
  return out;
}

}  // namespace

double mae(const Projection& a, const Projection& b) {
  check_pair(a, b);
  return kernels::sum_abs_diff(a.data, b.data) / static_cast<double>(a.data.size());
}

double nrmse(const Projection& a, const Projection& ref) {
  check_pair(a, ref);
  const auto [lo, hi] = std::minmax_element(ref.data.begin(), ref.data.end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  require(range > 0.0, Errc::degenerate, "nrmse: reference image has zero dynamic range");
  const double mse = kernels::sum_sq_diff(a.data, ref.data) / static_cast<double>(a.data.size());
  return std::sqrt(mse) / range;
}

double psnr(const Projection& a, const Projection& b, double data_range) {
  check_pair(a, b);
  require(std::isfinite(data_range) && data_range > 0.0, Errc::invalid_argument,
          "psnr: data range must be > 0");
  const double mse = kernels::sum_sq_diff(a.data, b.data) / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

SsimMaps ssim_maps(const Projection& a, const Projection& b, int channel) {
  check_pair(a, b);
  require(a.rows >= kSsimWindow && a.cols >= kSsimWindow, Errc::invalid_argument,
          "ssim: images must be at least 11x11");
  require(channel >= 0 && channel < a.channels, Errc::invalid_argument,
          "ssim: channel out of range");

  const std::size_t n = a.pixel_count();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  const auto ca = a.channel(channel);
  const auto cb = b.channel(channel);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ca[i];
    y[i] = cb[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto taps = window_taps();
  const auto mx = filter_valid(x, a.rows, a.cols, taps);
  const auto my = filter_valid(y, a.rows, a.cols, taps);
  const auto mxx = filter_valid(xx, a.rows, a.cols, taps);
  const auto myy = filter_valid(yy, a.rows, a.cols, taps);
  const auto mxy = filter_valid(xy, a.rows, a.cols, taps);

  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const double c3 = 0.5 * c2;

  SsimMaps maps;
  maps.rows = a.rows - kSsimWindow + 1;
  maps.cols = a.cols - kSsimWindow + 1;
  const std::size_t m = mx.size();
  maps.luminance.resize(m);
  maps.contrast.resize(m);
  maps.structure.resize(m);
  maps.ssim.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    // Raw moments feed the SSIM ratio so identical inputs give exactly 1;
    // only the square roots see the clamped variances.
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cov = mxy[i] - mx[i] * my[i];
    const double sx = std::sqrt(std::max(0.0, vx));
    const double sy = std::sqrt(std::max(0.0, vy));
    maps.luminance[i] = (2.0 * mx[i] * my[i] + c1) / (mx[i] * mx[i] + my[i] * my[i] + c1);
    maps.contrast[i] = (2.0 * sx * sy + c2) / (vx + vy + c2);
    maps.structure[i] = (cov + c3) / (sx * sy + c3);
    maps.ssim[i] = ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return maps;
}

double ssim(const Projection& a, const Projection& b) {
  check_pair(a, b);
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const SsimMaps maps = ssim_maps(a, b, c);
    double sum = 0.0;
    for (double v : maps.ssim) sum += v;
    total += sum / static_cast<double>(maps.ssim.size());
  }
  return total / a.channels;
}

MetricReport evaluate(const Projection& pred, const Projection& truth) {
  MetricReport r;
  r.mae = mae(pred, truth);
  r.rmse = nrmse(pred, truth);
  r.ssim = ssim(pred, truth);
  r.psnr = psnr(pred, truth);
  return r;
}

nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j = {{"mae", r.mae}, {"rmse", r.rmse}, {"ssim", r.ssim}};
  j["psnr"] = r.psnr_is_infinite() ? nlohmann::json(nullptr) : nlohmann::json(r.psnr);
  j["psnr_infinite"] = r.psnr_is_infinite();
  return j;
}

std::string csv_header() { return "mae,rmse,ssim,psnr"; }

std::string csv_row(const MetricReport& r) {
  char buf[160];
  if (r.psnr_is_infinite()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,inf", r.mae, r.rmse, r.ssim);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", r.mae, r.rmse, r.ssim, r.psnr);
  }
  return buf;
}

}  // namespace gips
