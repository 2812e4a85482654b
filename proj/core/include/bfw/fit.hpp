#pragma once

#include <memory>
#include <vector>

#include "bfw/bridge.hpp"
#include "bfw/diagnostics.hpp"
#include "bfw/estimates.hpp"
#include "bfw/model.hpp"
#include "bfw/sampler.hpp"

namespace bfw {

struct LmmFit {
  std::shared_ptr<LmmModel> model;
  ChainSet chains;
  Diagnostics diagnostics;

  // Pooled draws of one named parameter on the constrained scale.
  std::vector<double> constrained_draws(const std::string& name) const;
  std::vector<double> slope_draws() const { return constrained_draws("beta1"); }
};

LogDensityTarget make_target(const LmmModel& model);

// Posterior fit of one hypothesis: initialization from prior draws mapped to
// unconstrained space, then adaptive HMC.
LmmFit fit_lmm(const Dataset& data, const LmmModelSpec& spec, const PriorSpec& prior,
               const SamplerConfig& sampler_config);

LogMlEstimate bridge_fit(const LmmFit& fit, const BridgeConfig& config);

struct StabilityResult {
  std::vector<BayesFactorEstimate> bfs;
  int n_failures = 0;
  double mean_bf10 = 0.0;
  double sd_log10_bf10 = 0.0;
  double max_spread_log10 = 0.0;  // max pairwise |log10 bf_i - log10 bf_j|
  double worst_rhat = 0.0;        // across all fits of all repeats
  int total_divergences = 0;
};

// Full refit + bridge per repeat with distinct seeds: the paper's
// "run the analysis a few times (at least twice)" protocol.
StabilityResult stability_check(const Dataset& data, const LmmModelSpec& h1_spec,
                                const PriorSpec& prior, int k_repeats,
                                const SamplerConfig& sampler_config,
                                const BridgeConfig& bridge_config = {}, int jobs = 1);

struct SensitivityPoint {
  double prior_sd = 0.0;
  BayesFactorEstimate bf;
};

struct SensitivityCurve {
  std::vector<SensitivityPoint> points;
};

// The ten prior SDs swept in the sensitivity analyses (0.005 up to 0.4).
std::vector<double> default_sensitivity_grid();

// One H1 fit per grid SD with a zero-centered slope prior of that SD, against
// a single shared H0 fit. Per-point failures are flagged; the curve is still
// returned.
SensitivityCurve sensitivity_curve(const Dataset& data, const std::vector<double>& sd_grid,
                                   const PriorSpec& base_prior, const LmmModelSpec& h1_spec,
                                   const SamplerConfig& sampler_config,
                                   const BridgeConfig& bridge_config = {}, int jobs = 1);

void write_curve_csv(const SensitivityCurve& curve, const std::string& path);
SensitivityCurve read_curve_csv(const std::string& path);

}  // namespace bfw
