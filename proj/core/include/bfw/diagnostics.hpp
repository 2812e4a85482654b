#pragma once

#include <vector>

#include "bfw/sampler.hpp"

namespace bfw {

// Per-parameter convergence summaries. Constant chains make R-hat undefined;
// those entries are NaN and flagged.
struct Diagnostics {
  std::vector<double> rhat;
  std::vector<double> bulk_ess;
  std::vector<double> tail_ess;
  int divergences = 0;
  bool any_undefined = false;

  double max_rhat() const;
  double min_bulk_ess() const;
};

// Rank-normalized split R-hat (max of the location and scale variants) and
// autocorrelation-corrected bulk/tail effective sample sizes.
Diagnostics compute_diagnostics(const ChainSet& chains);

// Split-chain ESS of one quantity; exposed for reuse by estimator error proxies.
double ess_of_sequences(const std::vector<std::vector<double>>& chains);

}  // namespace bfw
