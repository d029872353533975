#pragma once

#include <vector>

#include "gips/projection.hpp"
#include "gips/synthesis.hpp"

namespace gips {

struct LossWeights {
  double cyc = 1.0;
  double rec = 10.0;
  double adv = 1.0;

  void validate() const;  // all finite and >= 0
};

// Discriminator outputs at one or more scales. real[s] and fake[s] are the
// flattened score maps for scale s and must have equal length.
struct DiscriminatorScores {
  std::vector<std::vector<float>> real;
  std::vector<std::vector<float>> fake;
};

// Mean absolute difference over all pixels and channels.
double reconstruction_loss(const Projection& pred, const Projection& truth);

// (mean |g_a - g_b| + mean |t_a - t_b|) / 2 over geometry features and
// texture codes.
double cycle_consistency_loss(const EncodedView& reencoded, const EncodedView& reference);

// Least-squares GAN terms averaged over scales:
//   generator      mean((fake - 1)^2)
//   discriminator  0.5 * mean((real - 1)^2) + 0.5 * mean(fake^2)
double adversarial_loss_generator(const DiscriminatorScores& scores);
double adversarial_loss_discriminator(const DiscriminatorScores& scores);

double total_loss(double cyc, double rec, double adv, const LossWeights& w);

}  // namespace gips
