#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace bfw {

// A differentiable unnormalized log-density. `grad` is empty when only the
// value is needed; otherwise it has length `dim` and receives the gradient.
struct LogDensityTarget {
  int dim = 0;
  std::function<double(std::span<const double>, std::span<double>)> log_density;
};

struct SamplerConfig {
  int n_chains = 4;
  int warmup = 2000;
  int iter = 8000;  // post-warmup draws per chain
  double target_accept = 0.99;
  int max_tree_depth = 15;
  std::uint64_t seed = 0;
  int jobs = 1;  // chains may run in parallel; output is identical either way

  void validate() const;
};

struct ChainStats {
  int divergences = 0;
  double mean_accept = 0.0;
  double step_size = 0.0;
  int max_depth_hits = 0;
  std::vector<double> inv_mass;  // diagonal inverse mass after adaptation
};

// Posterior draws in unconstrained space, with per-draw log-joint values.
struct ChainSet {
  int n_chains = 0;
  int n_iter = 0;
  int dim = 0;
  std::vector<std::vector<double>> draws;      // per chain, [iter * dim + d]
  std::vector<std::vector<double>> log_joint;  // per chain, [iter]
  std::vector<ChainStats> stats;

  double value(int chain, int iter, int d) const { return draws[chain][static_cast<std::size_t>(iter) * dim + d]; }
  std::size_t total_draws() const { return static_cast<std::size_t>(n_chains) * n_iter; }
  int total_divergences() const;
  // All draws of one coordinate, chain-major.
  std::vector<double> pooled(int d) const;
  // Draws of one coordinate for a single chain.
  std::vector<double> chain_column(int chain, int d) const;
};

using InitProvider = std::function<std::vector<double>(std::mt19937_64&)>;

// Adaptive dynamic-trajectory HMC (trajectory doubling with multinomial state
// selection, dual-averaged step size, diagonal mass matrix estimated over
// expanding warmup windows). Chains own independent RNG streams derived from
// (seed, chain index) and are merged by index, so serial and parallel
// execution produce identical output.
ChainSet sample_posterior(const LogDensityTarget& target, const SamplerConfig& config,
                          const InitProvider& init = nullptr);

}  // namespace bfw
