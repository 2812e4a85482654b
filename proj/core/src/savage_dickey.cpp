#include "bfw/savage_dickey.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bfw/math_util.hpp"

namespace bfw {

namespace {

double silverman_bandwidth(std::span<const double> draws) {
  const double sd = sample_sd(draws);
  std::vector<double> v(draws.begin(), draws.end());
  const double iqr = quantile(v, 0.75) - quantile(v, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(draws.size()), -0.2);
}

double normal_approx_density_at_zero(std::span<const double> draws) {
  const double m = mean(draws);
  const double s = sample_sd(draws);
  return std::exp(log_normal_pdf(0.0, m, s));
}

double kde_density_at_zero(std::span<const double> draws, double h) {
  double s = 0.0;
  for (double x : draws) s += std::exp(-0.5 * (x / h) * (x / h));
  return s / (static_cast<double>(draws.size()) * h * std::sqrt(2.0 * M_PI));
}

}  // namespace

SavageDickeyResult savage_dickey_bf01(std::span<const double> slope_draws,
                                      double prior_density_at_zero,
                                      const SavageDickeyConfig& config) {
  if (slope_draws.size() < 1000)
    throw std::invalid_argument("savage_dickey: need >= 1000 draws");
  if (!(prior_density_at_zero > 0.0))
    throw std::domain_error("savage_dickey: prior density at zero must be positive");

  SavageDickeyResult res;
  res.prior_density_at_zero = prior_density_at_zero;
  res.bandwidth = silverman_bandwidth(slope_draws);

  std::size_t near_zero = 0;
  for (double x : slope_draws)
    if (std::fabs(x) <= res.bandwidth) ++near_zero;
  const bool sparse_near_zero =
      static_cast<double>(near_zero) < 0.01 * static_cast<double>(slope_draws.size());

  bool fell_back = false;
  if (config.estimator == DensityEstimator::kde) {
    res.posterior_density_at_zero = kde_density_at_zero(slope_draws, res.bandwidth);
    if (!(res.posterior_density_at_zero > 0.0)) {
      res.posterior_density_at_zero = normal_approx_density_at_zero(slope_draws);
      fell_back = true;
    }
  } else {
    res.posterior_density_at_zero = normal_approx_density_at_zero(slope_draws);
  }

  const double log_bf01 = std::log(res.posterior_density_at_zero) - std::log(prior_density_at_zero);
  res.bf10 = BayesFactorEstimate::from_log(-log_bf01, sparse_near_zero || fell_back);
  return res;
}

}  // namespace bfw
