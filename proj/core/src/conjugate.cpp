#include "bfw/conjugate.hpp"

#include <cmath>
#include <stdexcept>

#include "bfw/math_util.hpp"

namespace bfw {

double analytic_log_marginal(const ConjugateModel& m) {
  if (m.sigma <= 0.0) throw std::domain_error("conjugate: sigma must be > 0");
  if (m.tau < 0.0) throw std::domain_error("conjugate: tau must be >= 0");
  const std::size_t n = m.y.size();
  if (n == 0) return 0.0;

  const double s2 = m.sigma * m.sigma;
  const double t2 = m.tau * m.tau;
  const double nd = static_cast<double>(n);

  double sum_d = 0.0, sum_d2 = 0.0;
  for (double yi : m.y) {
    const double d = yi - m.mu0;
    sum_d += d;
    sum_d2 += d * d;
  }
  // |Sigma| = sigma^(2n) (1 + n tau^2 / sigma^2);
  // Sigma^{-1} = (1/sigma^2)(I - tau^2/(sigma^2 + n tau^2) J).
  const double log_det = nd * std::log(s2) + std::log1p(nd * t2 / s2);
  const double quad = (sum_d2 - t2 / (s2 + nd * t2) * sum_d * sum_d) / s2;
  return -0.5 * (nd * log_2pi + log_det + quad);
}

ConjugatePosterior conjugate_posterior(const ConjugateModel& m) {
  if (m.tau <= 0.0) throw std::domain_error("conjugate: posterior needs tau > 0");
  const double prec_prior = 1.0 / (m.tau * m.tau);
  const double prec_data = static_cast<double>(m.y.size()) / (m.sigma * m.sigma);
  double sum_y = 0.0;
  for (double yi : m.y) sum_y += yi;
  ConjugatePosterior post;
  post.var = 1.0 / (prec_prior + prec_data);
  post.mean = post.var * (m.mu0 * prec_prior + sum_y / (m.sigma * m.sigma));
  return post;
}

double analytic_savage_dickey_bf01(const ConjugateModel& m) {
  const auto post = conjugate_posterior(m);
  const double log_post0 = log_normal_pdf(0.0, post.mean, std::sqrt(post.var));
  const double log_prior0 = log_normal_pdf(0.0, m.mu0, m.tau);
  return std::exp(log_post0 - log_prior0);
}

double conjugate_log_joint(const ConjugateModel& m, double mu, double* grad) {
  if (m.tau <= 0.0) throw std::domain_error("conjugate: log joint needs tau > 0");
  double lp = log_normal_pdf(mu, m.mu0, m.tau);
  double g = -(mu - m.mu0) / (m.tau * m.tau);
  const double inv_var = 1.0 / (m.sigma * m.sigma);
  for (double yi : m.y) {
    lp += log_normal_pdf(yi, mu, m.sigma);
    g += (yi - mu) * inv_var;
  }
  if (grad) *grad = g;
  return lp;
}

}  // namespace bfw
