#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bfw/dataset.hpp"
#include "bfw/design.hpp"
#include "bfw/model.hpp"
#include "bfw/prior.hpp"
#include "bfw/sampler.hpp"

namespace bfw {

// Summary statistics over a collection of simulated datasets: scalar stats
// per dataset plus histogram quantile bands (10-90, 20-80, 30-70, 40-60
// percent) across datasets.
struct PredictiveSummary {
  std::vector<double> mean_rt;
  std::vector<double> cond_diff;  // mean rt at x=+1 minus mean rt at x=-1
  std::vector<double> sd_rt;
  std::vector<double> bin_edges;
  std::vector<std::array<double, 9>> hist_bands;  // per bin: 10%,20%,...,90% quantiles
};

PredictiveSummary summarize_predictive(const std::vector<Dataset>& datasets);

// Datasets simulated from fresh prior draws of the population parameters.
PredictiveSummary prior_predictive_check(const DesignTable& design, const PriorSpec& prior,
                                         const LmmModelSpec& sim_spec, int n_datasets,
                                         std::uint64_t seed);

// Datasets simulated from posterior draws, conditioning on the fitted
// subjects'/items' effects and resampling only the residual noise.
PredictiveSummary posterior_predictive_check(const LmmModel& model, const ChainSet& chains,
                                             int n_datasets, std::uint64_t seed);

}  // namespace bfw
