#pragma once

#include <cstdint>
#include <optional>

#include "bfw/dataset.hpp"
#include "bfw/design.hpp"

namespace bfw {

struct VarianceComponents {
  double sd_intercept = 0.0;
  double sd_slope = 0.0;
  double rho = 0.0;
};

// Ground truth for data simulation from the hierarchical lognormal model.
struct SimTruth {
  double beta0 = 6.0;
  double beta1 = 0.0;
  VarianceComponents vc_subject;
  std::optional<VarianceComponents> vc_item;
  double sigma = 0.5;
  // When set, the OLS fixed-effect estimates of log(rt) on {1, x} equal
  // (beta0, beta1) exactly: all non-fixed variation is projected onto the
  // orthogonal complement of the fixed-effect design columns before adding
  // the requested effects back.
  bool empirical = false;
};

// rt = exp(beta0 + beta1*x + subject effects + item effects + eps), eps ~ N(0, sigma^2).
// Reproducible given seed; random effects drawn non-centered via the 2x2 Cholesky factor.
Dataset sim_lmm(const DesignTable& design, const SimTruth& truth, std::uint64_t seed);

}  // namespace bfw
