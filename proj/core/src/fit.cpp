#include "bfw/fit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bfw/jobs.hpp"
#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

LogDensityTarget make_target(const LmmModel& model) {
  LogDensityTarget target;
  target.dim = model.dim();
  target.log_density = [&model](std::span<const double> theta, std::span<double> grad) {
    return model.log_joint(theta, grad);
  };
  return target;
}

std::vector<double> LmmFit::constrained_draws(const std::string& name) const {
  const auto names = model->layout().names();
  int idx = -1;
  for (int d = 0; d < static_cast<int>(names.size()); ++d)
    if (names[d] == name) {
      idx = d;
      break;
    }
  if (idx < 0) throw std::invalid_argument("fit: unknown parameter '" + name + "'");
  auto draws = chains.pooled(idx);
  const auto& l = model->layout();
  if (idx == l.log_sd_u0 || idx == l.log_sd_u1 || idx == l.log_sd_w0 || idx == l.log_sd_w1 ||
      idx == l.log_sigma)
    for (auto& v : draws) v = std::exp(v);
  else if (idx == l.atanh_rho_u || idx == l.atanh_rho_w)
    for (auto& v : draws) v = std::tanh(v);
  return draws;
}

LmmFit fit_lmm(const Dataset& data, const LmmModelSpec& spec, const PriorSpec& prior,
               const SamplerConfig& sampler_config) {
  LmmFit fit;
  fit.model = std::make_shared<LmmModel>(data, spec, prior);
  const auto target = make_target(*fit.model);
  const LmmModel& model = *fit.model;
  InitProvider init = [&model](std::mt19937_64& rng) { return model.initial_point(rng); };
  fit.chains = sample_posterior(target, sampler_config, init);
  fit.diagnostics = compute_diagnostics(fit.chains);
  return fit;
}

LogMlEstimate bridge_fit(const LmmFit& fit, const BridgeConfig& config) {
  return bridge_log_ml(fit.chains, make_target(*fit.model), config);
}

StabilityResult stability_check(const Dataset& data, const LmmModelSpec& h1_spec,
                                const PriorSpec& prior, int k_repeats,
                                const SamplerConfig& sampler_config,
                                const BridgeConfig& bridge_config, int jobs) {
  if (k_repeats < 2) throw std::invalid_argument("stability_check: need k >= 2 repeats");

  StabilityResult res;
  res.bfs.resize(k_repeats);
  std::vector<double> rhats(k_repeats, 0.0);
  std::vector<int> divergences(k_repeats, 0);
  parallel_for(static_cast<std::size_t>(k_repeats), jobs, [&](std::size_t r) {
    SamplerConfig sc = sampler_config;
    sc.jobs = 1;
    sc.seed = derive_stream(sampler_config.seed, "stability_h1", r)();
    BridgeConfig bc = bridge_config;
    bc.seed = derive_stream(bridge_config.seed, "stability_bridge1", r)();
    try {
      const auto fit1 = fit_lmm(data, h1_spec, prior, sc);
      const auto ml1 = bridge_log_ml(fit1.chains, make_target(*fit1.model), bc);
      sc.seed = derive_stream(sampler_config.seed, "stability_h0", r)();
      bc.seed = derive_stream(bridge_config.seed, "stability_bridge0", r)();
      const auto fit0 = fit_lmm(data, h1_spec.as_null(), prior.without_slope(), sc);
      const auto ml0 = bridge_log_ml(fit0.chains, make_target(*fit0.model), bc);
      res.bfs[r] = bayes_factor(ml1, ml0);
      rhats[r] = std::max(fit1.diagnostics.max_rhat(), fit0.diagnostics.max_rhat());
      divergences[r] = fit1.diagnostics.divergences + fit0.diagnostics.divergences;
    } catch (const std::exception& e) {
      res.bfs[r] = BayesFactorEstimate::failure(e.what());
    }
  });
  for (int r = 0; r < k_repeats; ++r) {
    res.worst_rhat = std::max(res.worst_rhat, rhats[r]);
    res.total_divergences += divergences[r];
  }

  std::vector<double> log10_bfs;
  double sum_bf = 0.0;
  for (const auto& bf : res.bfs) {
    if (bf.failed) {
      ++res.n_failures;
      continue;
    }
    sum_bf += bf.bf10();
    log10_bfs.push_back(bf.log_bf10 / std::log(10.0));
  }
  if (!log10_bfs.empty()) {
    res.mean_bf10 = sum_bf / static_cast<double>(log10_bfs.size());
    res.sd_log10_bf10 = log10_bfs.size() > 1 ? sample_sd(log10_bfs) : 0.0;
    for (std::size_t i = 0; i < log10_bfs.size(); ++i)
      for (std::size_t j = i + 1; j < log10_bfs.size(); ++j)
        res.max_spread_log10 = std::max(res.max_spread_log10, std::fabs(log10_bfs[i] - log10_bfs[j]));
  }
  return res;
}

std::vector<double> default_sensitivity_grid() {
  return {0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.1, 0.2, 0.3, 0.4};
}

SensitivityCurve sensitivity_curve(const Dataset& data, const std::vector<double>& sd_grid,
                                   const PriorSpec& base_prior, const LmmModelSpec& h1_spec,
                                   const SamplerConfig& sampler_config,
                                   const BridgeConfig& bridge_config, int jobs) {
  if (sd_grid.empty()) throw std::invalid_argument("sensitivity: grid must be nonempty");
  for (std::size_t i = 0; i < sd_grid.size(); ++i) {
    if (!(sd_grid[i] > 0.0)) throw std::invalid_argument("sensitivity: grid values must be positive");
    if (i > 0 && sd_grid[i] <= sd_grid[i - 1])
      throw std::invalid_argument("sensitivity: grid must be strictly increasing");
  }

  // H0 has no slope prior, so one fit serves the whole grid.
  SamplerConfig sc0 = sampler_config;
  sc0.jobs = 1;
  sc0.seed = derive_stream(sampler_config.seed, "sensitivity_h0")();
  BridgeConfig bc0 = bridge_config;
  bc0.seed = derive_stream(bridge_config.seed, "sensitivity_bridge0")();
  const auto fit0 = fit_lmm(data, h1_spec.as_null(), base_prior.without_slope(), sc0);
  const auto ml0 = bridge_log_ml(fit0.chains, make_target(*fit0.model), bc0);

  SensitivityCurve curve;
  curve.points.resize(sd_grid.size());
  parallel_for(sd_grid.size(), jobs, [&](std::size_t g) {
    curve.points[g].prior_sd = sd_grid[g];
    SamplerConfig sc = sampler_config;
    sc.jobs = 1;
    sc.seed = derive_stream(sampler_config.seed, "sensitivity_h1", g)();
    BridgeConfig bc = bridge_config;
    bc.seed = derive_stream(bridge_config.seed, "sensitivity_bridge1", g)();
    try {
      const auto prior = base_prior.with_slope({0.0, sd_grid[g]});
      const auto fit1 = fit_lmm(data, h1_spec, prior, sc);
      const auto ml1 = bridge_log_ml(fit1.chains, make_target(*fit1.model), bc);
      curve.points[g].bf = bayes_factor(ml1, ml0);
    } catch (const std::exception& e) {
      curve.points[g].bf = BayesFactorEstimate::failure(e.what());
    }
  });
  return curve;
}

void write_curve_csv(const SensitivityCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("sensitivity: cannot write '" + path + "'");
  out << "prior_sd,bf10,log10_bf10,stable\n";
  char buf[128];
  for (const auto& p : curve.points) {
    if (p.bf.failed) {
      std::snprintf(buf, sizeof(buf), "%.17g,nan,nan,0\n", p.prior_sd);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d\n", p.prior_sd, p.bf.bf10(),
                    p.bf.log_bf10 / std::log(10.0), p.bf.stability_flag ? 0 : 1);
    }
    out << buf;
  }
}

SensitivityCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sensitivity: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "prior_sd,bf10,log10_bf10,stable")
    throw std::invalid_argument("sensitivity: unexpected header in '" + path + "'");
  SensitivityCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f0, f1, f2, f3;
    std::getline(ss, f0, ',');
    std::getline(ss, f1, ',');
    std::getline(ss, f2, ',');
    std::getline(ss, f3, ',');
    SensitivityPoint p;
    p.prior_sd = std::stod(f0);
    if (f1 == "nan") {
      p.bf = BayesFactorEstimate::failure("recorded failure");
    } else {
      p.bf = BayesFactorEstimate::from_log(std::stod(f2) * std::log(10.0), f3 == "0");
    }
    curve.points.push_back(p);
  }
  return curve;
}

}  // namespace bfw
