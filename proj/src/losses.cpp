#include "gips/losses.hpp"

#include "gips/error.hpp"
#include "gips/kernels.hpp"

#include <cmath>

namespace gips {

void LossWeights::validate() const {
  for (double w : {cyc, rec, adv})
    require(std::isfinite(w) && w >= 0.0, Errc::invalid_argument,
            "loss weights must be finite and >= 0");
}

double reconstruction_loss(const Projection& pred, const Projection& truth) {
  require(pred.same_shape(truth), Errc::shape_mismatch,
          "reconstruction loss: prediction and truth differ in shape");
  require(!pred.data.empty(), Errc::invalid_argument, "reconstruction loss: empty images");
  return kernels::sum_abs_diff(pred.data, truth.data) / static_cast<double>(pred.data.size());
}

double cycle_consistency_loss(const EncodedView& reencoded, const EncodedView& reference) {
  require(reencoded.geometry.same_shape(reference.geometry), Errc::shape_mismatch,
          "cycle loss: geometry features differ in shape");
  require(reencoded.texture.values.size() == reference.texture.values.size(),
          Errc::shape_mismatch, "cycle loss: texture codes differ in length");
  const double geo = kernels::sum_abs_diff(reencoded.geometry.data, reference.geometry.data) /
                     static_cast<double>(reference.geometry.data.size());
  double tex = 0.0;
  const auto& a = reencoded.texture.values;
  const auto& b = reference.texture.values;
  for (std::size_t i = 0; i < a.size(); ++i) tex += std::abs(a[i] - b[i]);
  if (!a.empty()) tex /= static_cast<double>(a.size());
  return 0.5 * (geo + tex);
}

namespace {

void check_scores(const DiscriminatorScores& s) {
  require(!s.real.empty() || !s.fake.empty(), Errc::invalid_argument,
          "discriminator scores need at least one scale");
  require(s.real.size() == s.fake.size(), Errc::shape_mismatch,
          "real and fake score lists differ in scale count");
  for (std::size_t i = 0; i < s.real.size(); ++i)
    require(s.real[i].size() == s.fake[i].size() && !s.real[i].empty(), Errc::shape_mismatch,
            "real and fake score maps differ in shape at scale " + std::to_string(i));
}

double mean_sq_offset(const std::vector<float>& v, double target) {
  double acc = 0.0;
  for (float x : v) {
    const double d = x - target;
    acc += d * d;
  }
  return acc / static_cast<double>(v.size());
}

}  // namespace

double adversarial_loss_generator(const DiscriminatorScores& scores) {
  check_scores(scores);
  double acc = 0.0;
  for (const auto& fake : scores.fake) acc += mean_sq_offset(fake, 1.0);
  return acc / static_cast<double>(scores.fake.size());
}

double adversarial_loss_discriminator(const DiscriminatorScores& scores) {
  check_scores(scores);
  double acc = 0.0;
  for (std::size_t s = 0; s < scores.real.size(); ++s)
    acc += 0.5 * mean_sq_offset(scores.real[s], 1.0) + 0.5 * mean_sq_offset(scores.fake[s], 0.0);
  return acc / static_cast<double>(scores.real.size());
}

double total_loss(double cyc, double rec, double adv, const LossWeights& w) {
  return w.cyc * cyc + w.rec * rec + w.adv * adv;
}

}  // namespace gips
