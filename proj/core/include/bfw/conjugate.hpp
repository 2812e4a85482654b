#pragma once

#include <span>
#include <vector>

namespace bfw {

// Normal observations with known sigma and a conjugate N(mu0, tau^2) prior on
// the mean. Everything about this model is available in closed form, which
// makes it the reference oracle for the sampling and marginal-likelihood
// estimators: marginally y ~ N(mu0 * 1, sigma^2 I + tau^2 J).
struct ConjugateModel {
  double mu0 = 0.0;
  double tau = 1.0;    // prior SD of the mean; tau = 0 collapses to a point prior
  double sigma = 1.0;  // known observation SD
  std::vector<double> y;
};

// Log marginal likelihood via the rank-one Woodbury form (no matrix inversion).
// Empty y returns 0 (empty product).
double analytic_log_marginal(const ConjugateModel& model);

struct ConjugatePosterior {
  double mean = 0.0;
  double var = 0.0;
};

ConjugatePosterior conjugate_posterior(const ConjugateModel& model);

// BF01 of the point null mu = 0 versus the model's prior, via the
// posterior/prior density ratio at zero.
double analytic_savage_dickey_bf01(const ConjugateModel& model);

// Unnormalized posterior log-density over mu (log-likelihood + log-prior),
// with gradient; used to drive the sampler against a known target.
double conjugate_log_joint(const ConjugateModel& model, double mu, double* grad);

}  // namespace bfw
