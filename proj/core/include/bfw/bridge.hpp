#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bfw/estimates.hpp"
#include "bfw/sampler.hpp"

namespace bfw {

struct BridgeConfig {
  int max_iter = 1000;
  double tolerance = 1e-10;  // relative change of the fixed-point iterate
  std::uint64_t seed = 0;
  // Optional explicit proposal (mean, covariance in row-major dim x dim).
  // By default the proposal is moment-matched to the first half of the draws.
  std::optional<std::vector<double>> proposal_mean;
  std::optional<std::vector<double>> proposal_cov;
};

// Marginal likelihood by iterative bridge sampling with the optimal bridge
// function. The proposal is a multivariate normal moment-matched to the FIRST
// half of each chain and evaluated on the SECOND half, which keeps proposal
// fitting and bridge evaluation on disjoint draws. Internally everything runs
// in the whitened space of the proposal.
LogMlEstimate bridge_log_ml(const ChainSet& chains, const LogDensityTarget& log_joint,
                            const BridgeConfig& config);

}  // namespace bfw
