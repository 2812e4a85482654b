#pragma once

#include <span>

#include "bfw/estimates.hpp"

namespace bfw {

enum class DensityEstimator { normal_approx, kde };

struct SavageDickeyConfig {
  DensityEstimator estimator = DensityEstimator::normal_approx;
};

struct SavageDickeyResult {
  double posterior_density_at_zero = 0.0;
  double prior_density_at_zero = 0.0;
  double bandwidth = 0.0;  // Silverman bandwidth used for the near-zero coverage check
  BayesFactorEstimate bf10;
  double bf01() const { return bf10.failed ? std::nan("") : std::exp(-bf10.log_bf10); }
};

// Density-ratio Bayes factor for a nested slope-vs-null comparison:
// BF01 = posterior density at zero / prior density at zero. The result is
// flagged unstable when fewer than 1% of draws fall within one bandwidth of
// zero (the regime where the ratio becomes unreliable). A kde estimate that
// degenerates to zero near the origin falls back to the normal approximation.
SavageDickeyResult savage_dickey_bf01(std::span<const double> slope_draws,
                                      double prior_density_at_zero,
                                      const SavageDickeyConfig& config = {});

}  // namespace bfw
