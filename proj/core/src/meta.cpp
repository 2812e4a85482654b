#include "bfw/meta.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfw/jobs.hpp"
#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

void MetaInput::validate() const {
  if (studies.size() < 2) throw std::invalid_argument("meta: need at least 2 studies");
  for (const auto& s : studies)
    if (!(s.se > 0.0)) throw std::domain_error("meta: every SE must be > 0");
}

MetaInput MetaInput::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("meta: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("meta: empty file");
  if (line == "expt,b,SE\r") line = "expt,b,SE";
  if (line != "expt,b,SE") throw std::invalid_argument("meta: header must be `expt,b,SE`");
  MetaInput meta;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    MetaStudy s;
    std::string b, se;
    std::getline(ss, s.expt, ',');
    std::getline(ss, b, ',');
    std::getline(ss, se, ',');
    s.b = std::stod(b);
    s.se = std::stod(se);
    meta.studies.push_back(s);
  }
  meta.validate();
  return meta;
}

LogDensityTarget make_meta_target(const MetaInput& meta, bool include_theta, double theta_prior_sd,
                                  const HalfNormalPrior& prior_sd_between) {
  const int n_studies = static_cast<int>(meta.studies.size());
  const int dim = (include_theta ? 1 : 0) + 1 + n_studies;
  const int i_theta = include_theta ? 0 : -1;
  const int i_log_tau = include_theta ? 1 : 0;
  const int i_z = i_log_tau + 1;
  const double tau_scale = prior_sd_between.scale;
  auto studies = meta.studies;

  LogDensityTarget target;
  target.dim = dim;
  target.log_density = [=](std::span<const double> t, std::span<double> grad) {
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
    const double theta = i_theta >= 0 ? t[i_theta] : 0.0;
    const double tau = std::exp(t[i_log_tau]);

    double lp = 0.0;
    // theta ~ N(0, theta_prior_sd) under H1
    if (i_theta >= 0) {
      lp += log_normal_pdf(theta, 0.0, theta_prior_sd);
      if (want_grad) grad[i_theta] += -theta / (theta_prior_sd * theta_prior_sd);
    }
    // tau ~ half-normal(tau_scale), log transform Jacobian included
    lp += log_2 + log_normal_pdf(tau, 0.0, tau_scale) + t[i_log_tau];
    if (want_grad) grad[i_log_tau] += 1.0 - tau * tau / (tau_scale * tau_scale);

    double g_log_tau_like = 0.0;
    for (int j = 0; j < n_studies; ++j) {
      const double z = t[i_z + j];
      lp += -0.5 * log_2pi - 0.5 * z * z;  // z ~ N(0,1)
      const double mu = theta + tau * z;
      const double se2 = studies[j].se * studies[j].se;
      const double e = studies[j].b - mu;
      lp += log_normal_pdf(studies[j].b, mu, studies[j].se);
      if (want_grad) {
        const double gm = e / se2;
        if (i_theta >= 0) grad[i_theta] += gm;
        grad[i_z + j] += -z + gm * tau;
        g_log_tau_like += gm * z;
      }
    }
    if (want_grad) grad[i_log_tau] += g_log_tau_like * tau;
    return lp;
  };
  return target;
}

namespace {

InitProvider meta_init(int dim) {
  return [dim](std::mt19937_64& rng) {
    std::vector<double> t(dim);
    for (auto& v : t) v = draw_uniform(rng, -1.0, 1.0);
    return t;
  };
}

}  // namespace

SensitivityCurve meta_analysis_bf(const MetaInput& meta, const std::vector<double>& sd_grid,
                                  const HalfNormalPrior& prior_sd_between,
                                  const SamplerConfig& sampler_config,
                                  const BridgeConfig& bridge_config, int jobs) {
  meta.validate();
  if (sd_grid.empty()) throw std::invalid_argument("meta: grid must be nonempty");
  for (double sd : sd_grid)
    if (!(sd > 0.0)) throw std::invalid_argument("meta: grid values must be positive");

  // Shared H0 fit (theta fixed at zero).
  const auto target0 = make_meta_target(meta, false, 1.0, prior_sd_between);
  SamplerConfig sc0 = sampler_config;
  sc0.jobs = 1;
  sc0.seed = derive_stream(sampler_config.seed, "meta_h0")();
  BridgeConfig bc0 = bridge_config;
  bc0.seed = derive_stream(bridge_config.seed, "meta_bridge0")();
  const auto chains0 = sample_posterior(target0, sc0, meta_init(target0.dim));
  const auto ml0 = bridge_log_ml(chains0, target0, bc0);

  SensitivityCurve curve;
  curve.points.resize(sd_grid.size());
  parallel_for(sd_grid.size(), jobs, [&](std::size_t g) {
    curve.points[g].prior_sd = sd_grid[g];
    SamplerConfig sc = sampler_config;
    sc.jobs = 1;
    sc.seed = derive_stream(sampler_config.seed, "meta_h1", g)();
    BridgeConfig bc = bridge_config;
    bc.seed = derive_stream(bridge_config.seed, "meta_bridge1", g)();
    try {
      const auto target1 = make_meta_target(meta, true, sd_grid[g], prior_sd_between);
      const auto chains1 = sample_posterior(target1, sc, meta_init(target1.dim));
      const auto ml1 = bridge_log_ml(chains1, target1, bc);
      curve.points[g].bf = bayes_factor(ml1, ml0);
    } catch (const std::exception& e) {
      curve.points[g].bf = BayesFactorEstimate::failure(e.what());
    }
  });
  return curve;
}

}  // namespace bfw
