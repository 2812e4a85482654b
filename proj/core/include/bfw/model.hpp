#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bfw/dataset.hpp"
#include "bfw/prior.hpp"
#include "bfw/simulate.hpp"

namespace bfw {

enum class RandomStructure { None, InterceptOnly, InterceptSlope };

// Hypothesis definition: H0 and H1 differ only by fixing the population slope
// to zero; the random-effect structure is shared between them.
struct LmmModelSpec {
  bool include_slope = true;
  RandomStructure subject_random = RandomStructure::InterceptSlope;
  RandomStructure item_random = RandomStructure::None;

  LmmModelSpec as_null() const {
    LmmModelSpec s = *this;
    s.include_slope = false;
    return s;
  }
};

// Constrained-scale parameters of the hierarchical lognormal model.
// Random effects are stored non-centered: actual effect = Cholesky(Sigma) * z.
struct ParameterVector {
  double beta0 = 6.0;
  double beta1 = 0.0;  // 0 when the slope is absent
  double sigma_u0 = 0.0;
  double sigma_u1 = 0.0;
  double rho_u = 0.0;
  double sigma_w0 = 0.0;
  double sigma_w1 = 0.0;
  double rho_w = 0.0;
  double sigma = 1.0;
  std::vector<double> z_u0, z_u1;
  std::vector<double> z_w0, z_w1;

  SimTruth to_sim_truth() const {
    SimTruth t;
    t.beta0 = beta0;
    t.beta1 = beta1;
    t.vc_subject = {sigma_u0, sigma_u1, rho_u};
    if (sigma_w0 > 0.0 || sigma_w1 > 0.0) t.vc_item = VarianceComponents{sigma_w0, sigma_w1, rho_w};
    t.sigma = sigma;
    return t;
  }
};

// Index map of the flat unconstrained vector: identity for means and z's,
// log for SDs, atanh for correlations.
struct ParameterLayout {
  int dim = 0;
  int beta0 = -1;
  int beta1 = -1;
  int log_sd_u0 = -1, log_sd_u1 = -1, atanh_rho_u = -1;
  int log_sd_w0 = -1, log_sd_w1 = -1, atanh_rho_w = -1;
  int log_sigma = -1;
  int z_u = -1;  // S (intercept only) or 2S values, z0 block then z1 block
  int z_w = -1;
  int n_subjects = 0;
  int n_items = 0;
  RandomStructure subject_random = RandomStructure::InterceptOnly;
  RandomStructure item_random = RandomStructure::None;

  static ParameterLayout build(const LmmModelSpec& spec, int n_subjects, int n_items);
  std::vector<std::string> names() const;
};

// Joint log-density of the hierarchical lognormal mixed model over the
// unconstrained space: log-likelihood + log-prior + transform log-Jacobian.
class LmmModel {
 public:
  LmmModel(const Dataset& data, const LmmModelSpec& spec, const PriorSpec& prior);

  int dim() const { return layout_.dim; }
  const ParameterLayout& layout() const { return layout_; }
  const LmmModelSpec& spec() const { return spec_; }
  const PriorSpec& prior() const { return prior_; }
  const Dataset& data() const { return data_; }

  // Returns the log-density; fills `grad` with the analytic gradient when
  // grad.size() == dim (pass an empty span to skip gradient work).
  double log_joint(std::span<const double> theta_unc, std::span<double> grad) const;

  double log_likelihood(const ParameterVector& p) const;

  ParameterVector constrain(std::span<const double> theta_unc) const;
  std::vector<double> unconstrain(const ParameterVector& p) const;

  ParameterVector draw_from_prior(std::mt19937_64& rng) const;
  // Prior draw mapped to unconstrained space, jittered U(-0.1, 0.1) per coordinate.
  std::vector<double> initial_point(std::mt19937_64& rng) const;

 private:
  Dataset data_;
  LmmModelSpec spec_;
  PriorSpec prior_;
  ParameterLayout layout_;
  std::vector<double> log_rt_;
  double log_rt_sum_ = 0.0;
};

}  // namespace bfw
