#include "bfw/bridge.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfw/diagnostics.hpp"
#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

namespace {

double log_std_normal(const Eigen::VectorXd& xi) {
  return -0.5 * static_cast<double>(xi.size()) * log_2pi - 0.5 * xi.squaredNorm();
}

}  // namespace

LogMlEstimate bridge_log_ml(const ChainSet& chains, const LogDensityTarget& log_joint,
                            const BridgeConfig& config) {
  if (chains.n_chains < 2) throw std::invalid_argument("bridge: need >= 2 chains");
  if (chains.dim != log_joint.dim) throw std::invalid_argument("bridge: dimension mismatch");
  const int dim = chains.dim;
  const int half = chains.n_iter / 2;
  if (half < 2) throw std::invalid_argument("bridge: need >= 4 draws per chain");

  LogMlEstimate est;
  est.method = MlMethod::bridge;
  est.stability_warning = chains.total_draws() < 1000;

  // Proposal moments from the first half of every chain.
  const int n_fit = chains.n_chains * half;
  Eigen::VectorXd mean_fit;
  Eigen::MatrixXd cov;
  if (config.proposal_mean && config.proposal_cov) {
    if (static_cast<int>(config.proposal_mean->size()) != dim ||
        static_cast<int>(config.proposal_cov->size()) != dim * dim)
      throw std::invalid_argument("bridge: explicit proposal has wrong dimensions");
    mean_fit = Eigen::Map<const Eigen::VectorXd>(config.proposal_mean->data(), dim);
    cov = Eigen::Map<const Eigen::MatrixXd>(config.proposal_cov->data(), dim, dim);
  } else {
    Eigen::MatrixXd fit(n_fit, dim);
    int row = 0;
    for (int c = 0; c < chains.n_chains; ++c)
      for (int it = 0; it < half; ++it, ++row)
        for (int d = 0; d < dim; ++d) fit(row, d) = chains.value(c, it, d);
    mean_fit = fit.colwise().mean();
    Eigen::MatrixXd centered = fit.rowwise() - mean_fit.transpose();
    cov = centered.transpose() * centered / static_cast<double>(n_fit - 1);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    // Regularize a degenerate covariance just enough to factor it.
    const double jitter = 1e-8 * std::max(1.0, cov.diagonal().maxCoeff());
    cov.diagonal().array() += jitter;
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      est.failed = true;
      return est;
    }
  }
  const Eigen::MatrixXd chol_l = llt.matrixL();
  double log_det_l = 0.0;
  for (int d = 0; d < dim; ++d) log_det_l += std::log(chol_l(d, d));

  // Posterior log density of a whitened point xi (theta = mean + L xi),
  // including the Jacobian of the whitening map.
  std::vector<double> theta(dim);
  auto posterior_log_density = [&](const Eigen::VectorXd& xi) {
    Eigen::VectorXd t = mean_fit + chol_l * xi;
    for (int d = 0; d < dim; ++d) theta[d] = t(d);
    const double lp = log_joint.log_density(theta, {});
    return lp + log_det_l;
  };

  // Bridge terms l = log q(theta)/g(theta) on the second half of the draws
  // (evaluation sample) and on fresh proposal draws.
  const int n_post = chains.n_chains * (chains.n_iter - half);
  const int n_prop = n_post;
  std::vector<double> l_post;
  l_post.reserve(n_post);
  std::vector<std::vector<double>> l_post_by_chain(chains.n_chains);
  Eigen::VectorXd xi(dim), draw(dim);
  for (int c = 0; c < chains.n_chains; ++c) {
    l_post_by_chain[c].reserve(chains.n_iter - half);
    for (int it = half; it < chains.n_iter; ++it) {
      for (int d = 0; d < dim; ++d) draw(d) = chains.value(c, it, d);
      xi = chol_l.triangularView<Eigen::Lower>().solve(draw - mean_fit);
      const double l = posterior_log_density(xi) - log_std_normal(xi);
      l_post.push_back(l);
      l_post_by_chain[c].push_back(l);
    }
  }
  auto rng = derive_stream(config.seed, "bridge");
  std::vector<double> l_prop;
  l_prop.reserve(n_prop);
  for (int i = 0; i < n_prop; ++i) {
    for (int d = 0; d < dim; ++d) xi(d) = draw_normal(rng);
    l_prop.push_back(posterior_log_density(xi) - log_std_normal(xi));
  }
  for (double l : l_post)
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      est.failed = true;
      return est;
    }
  for (double l : l_prop)
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      est.failed = true;
      return est;
    }

  // Meng-Wong fixed point for r = p(y), scaled by exp(lstar) for stability.
  const double lstar = median(l_post);
  const double s1 = static_cast<double>(n_post) / (n_post + n_prop);
  const double s2 = static_cast<double>(n_prop) / (n_post + n_prop);

  std::vector<double> lt_prop(l_prop), lt_post(l_post);
  for (auto& v : lt_prop) v -= lstar;
  for (auto& v : lt_post) v -= lstar;

  double r = std::exp(log_sum_exp(lt_prop) - std::log(static_cast<double>(n_prop)));
  if (!std::isfinite(r) || r <= 0.0) r = 1.0;
  int iter = 0;
  bool converged = false;
  for (; iter < config.max_iter; ++iter) {
    double num = 0.0;
    for (double l : lt_prop) num += 1.0 / (s1 + s2 * r * std::exp(-l));
    num /= static_cast<double>(n_prop);
    double den = 0.0;
    for (double l : lt_post) den += 1.0 / (s1 * std::exp(l) + s2 * r);
    den /= static_cast<double>(n_post);
    const double r_new = num / den;
    if (!std::isfinite(r_new) || r_new <= 0.0) {
      est.failed = true;
      return est;
    }
    const double rel = std::fabs(r_new - r) / r_new;
    r = r_new;
    if (rel <= config.tolerance) {
      ++iter;
      converged = iter < config.max_iter;
      break;
    }
  }
  est.log_ml = std::log(r) + lstar;
  est.n_iterations = iter;
  est.converged = converged;

  // Relative-MSE proxy of the bridge estimate: variance of the two bridge
  // term families, with a spectral (autocorrelation) correction for the
  // correlated posterior-side terms.
  std::vector<double> f_prop(n_prop), f_post(n_post);
  for (int i = 0; i < n_prop; ++i) f_prop[i] = 1.0 / (s1 + s2 * r * std::exp(-lt_prop[i]));
  for (int j = 0; j < n_post; ++j) f_post[j] = 1.0 / (s1 * std::exp(lt_post[j]) + s2 * r);
  const double m1 = mean(f_prop), m2 = mean(f_post);
  std::vector<std::vector<double>> f_post_chains(chains.n_chains);
  std::size_t pos = 0;
  for (int c = 0; c < chains.n_chains; ++c) {
    auto& fc = f_post_chains[c];
    fc.resize(l_post_by_chain[c].size());
    for (auto& v : fc) v = f_post[pos++];
  }
  double tau = 1.0;
  const double ess_f2 = ess_of_sequences(f_post_chains);
  if (std::isfinite(ess_f2) && ess_f2 > 0.0) tau = static_cast<double>(n_post) / ess_f2;
  const double re2 = sample_variance(f_prop) / (n_prop * m1 * m1) +
                     tau * sample_variance(f_post) / (n_post * m2 * m2);
  est.relative_mse_proxy = std::sqrt(std::max(0.0, re2));
  return est;
}

}  // namespace bfw
