#pragma once

#include <string>
#include <vector>

#include "bfw/bridge.hpp"
#include "bfw/fit.hpp"
#include "bfw/prior.hpp"
#include "bfw/sampler.hpp"

namespace bfw {

// Per-study effect estimate with its standard error.
struct MetaStudy {
  std::string expt;
  double b = 0.0;
  double se = 1.0;
};

struct MetaInput {
  std::vector<MetaStudy> studies;

  void validate() const;
  // CSV with header `expt,b,SE`.
  static MetaInput read_csv(const std::string& path);
};

// Random-effects evidence synthesis: b_j ~ N(theta + u_j, SE_j^2) with
// u_j ~ N(0, tau^2); H1 puts N(0, grid SD) on theta, H0 fixes theta = 0.
// tau gets a half-normal prior (default scale 0.5) and is sampled
// non-centered. Returns one bridge-sampled BF10 per grid point.
SensitivityCurve meta_analysis_bf(const MetaInput& meta, const std::vector<double>& sd_grid,
                                  const HalfNormalPrior& prior_sd_between,
                                  const SamplerConfig& sampler_config,
                                  const BridgeConfig& bridge_config = {}, int jobs = 1);

// The meta model's joint log-density, exposed for direct checks.
// Parameters: [theta (if include_theta), log tau, z_1..z_J].
LogDensityTarget make_meta_target(const MetaInput& meta, bool include_theta, double theta_prior_sd,
                                  const HalfNormalPrior& prior_sd_between);

}  // namespace bfw
