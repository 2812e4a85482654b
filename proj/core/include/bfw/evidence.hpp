#pragma once

#include <span>
#include <string>

namespace bfw {

struct ModelPrior {
  double p_h0 = 0.5;
  double p_h1 = 0.5;

  void validate() const;
  bool degenerate() const { return p_h0 == 0.0 || p_h0 == 1.0; }
};

struct ModelPosterior {
  double p_h0 = 0.5;
  double p_h1 = 0.5;
  bool degenerate_prior = false;
};

// Posterior model probabilities from BF10 and the prior odds:
// posterior ratio = BF10 * p(H1)/p(H0). A degenerate prior returns its point
// mass with a warning flag.
ModelPosterior posterior_model_probs(double bf10, const ModelPrior& prior);

// The eleven Jeffreys bands; boundaries are assigned to the stronger band
// (BF = 3 is already "moderate"), BF = 1 exactly is "no change".
std::string jeffreys_label(double bf12);

// Fraction of draws strictly greater than zero.
double prob_positive(std::span<const double> draws);

}  // namespace bfw
