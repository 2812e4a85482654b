#include "bfw/sbc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bfw/fit.hpp"
#include "bfw/jobs.hpp"
#include "bfw/math_util.hpp"
#include "bfw/rng.hpp"

namespace bfw {

using nlohmann::json;

SimTruth draw_sim_truth(std::mt19937_64& rng, const PriorSpec& prior, const LmmModelSpec& sim_spec) {
  SimTruth t;
  t.beta0 = draw_positive_normal(rng, prior.intercept.mean, prior.intercept.sd);
  t.beta1 = prior.slope ? draw_normal(rng, prior.slope->mean, prior.slope->sd) : 0.0;
  t.vc_subject.sd_intercept = draw_half_normal(rng, prior.sd_components.scale);
  if (sim_spec.subject_random == RandomStructure::InterceptSlope) {
    t.vc_subject.sd_slope = draw_half_normal(rng, prior.sd_components.scale);
    t.vc_subject.rho = draw_lkj_corr2(rng, prior.lkj_eta);
  }
  if (sim_spec.item_random != RandomStructure::None) {
    VarianceComponents vc;
    vc.sd_intercept = draw_half_normal(rng, prior.sd_components.scale);
    if (sim_spec.item_random == RandomStructure::InterceptSlope) {
      vc.sd_slope = draw_half_normal(rng, prior.sd_components.scale);
      vc.rho = draw_lkj_corr2(rng, prior.lkj_eta);
    }
    t.vc_item = vc;
  }
  t.sigma = draw_half_normal(rng, prior.sigma.scale);
  return t;
}

SbcEnsemble run_sbc_with(int n_runs, const ModelPrior& model_prior, std::uint64_t seed,
                         const SbcPipeline& pipeline, int jobs) {
  if (n_runs < 1) throw std::invalid_argument("sbc: n_runs must be >= 1");
  model_prior.validate();

  SbcEnsemble ensemble;
  ensemble.model_prior = model_prior;
  ensemble.runs.resize(n_runs);
  parallel_for(static_cast<std::size_t>(n_runs), jobs, [&](std::size_t i) {
    SbcRun& run = ensemble.runs[i];
    run.index = static_cast<int>(i);
    auto rng = derive_stream(seed, "sbc_hyp", i);
    run.truth = draw_uniform(rng) > model_prior.p_h0 ? Hypothesis::H1 : Hypothesis::H0;
    try {
      auto outcome = pipeline(static_cast<int>(i), run.truth);
      run.bf = outcome.bf;
      run.truth_params = outcome.truth_params;
      if (run.bf.failed) {
        run.failed = true;
        run.flag = run.bf.failure_reason;
        run.p_h1_post = std::numeric_limits<double>::quiet_NaN();
      } else {
        run.p_h1_post = posterior_model_probs(run.bf.bf10(), model_prior).p_h1;
        if (run.bf.stability_flag) run.flag = "unstable";
      }
    } catch (const std::exception& e) {
      run.failed = true;
      run.flag = e.what();
      run.bf = BayesFactorEstimate::failure(e.what());
      run.p_h1_post = std::numeric_limits<double>::quiet_NaN();
    }
  });
  for (const auto& run : ensemble.runs)
    if (run.failed) ++ensemble.n_failures;
  ensemble.invalid = ensemble.n_failures > 0.2 * static_cast<double>(n_runs);
  return ensemble;
}

SbcPipeline make_lmm_pipeline(const SbcConfig& config) {
  return [config](int i, Hypothesis truth) -> SbcRunOutcome {
    SbcRunOutcome out;
    auto rng = derive_stream(config.seed, "sbc_par", static_cast<std::uint64_t>(i));
    SimTruth t = draw_sim_truth(rng, config.param_prior, config.sim_spec);
    if (truth == Hypothesis::H0) t.beta1 = 0.0;
    out.truth_params = t;

    const auto design = generate_design(config.design);
    const auto data = sim_lmm(design, t, derive_stream(config.seed, "sbc_data", i)());

    SamplerConfig sc = config.sampler_config;
    sc.jobs = 1;
    sc.seed = derive_stream(config.seed, "sbc_fit1", i)();
    LmmModelSpec h1 = config.fit_spec;
    h1.include_slope = true;
    const auto fit1 = fit_lmm(data, h1, config.param_prior, sc);

    if (config.estimator == SbcEstimator::savage_dickey) {
      const auto slope = fit1.slope_draws();
      const double prior0 = std::exp(
          log_normal_pdf(0.0, config.param_prior.slope->mean, config.param_prior.slope->sd));
      out.bf = savage_dickey_bf01(slope, prior0).bf10;
      return out;
    }

    BridgeConfig bc = config.bridge_config;
    bc.seed = derive_stream(config.seed, "sbc_br1", i)();
    const auto ml1 = bridge_fit(fit1, bc);
    sc.seed = derive_stream(config.seed, "sbc_fit0", i)();
    const auto fit0 = fit_lmm(data, h1.as_null(), config.param_prior.without_slope(), sc);
    bc.seed = derive_stream(config.seed, "sbc_br0", i)();
    const auto ml0 = bridge_fit(fit0, bc);
    out.bf = bayes_factor(ml1, ml0);
    return out;
  };
}

SbcEnsemble run_sbc(const SbcConfig& config) {
  if (!config.param_prior.slope)
    throw std::invalid_argument("sbc: param_prior must carry a slope prior for H1");
  return run_sbc_with(config.n_runs, config.model_prior, config.seed, make_lmm_pipeline(config),
                      config.jobs);
}

PriorRecovery sbc_prior_recovery(const SbcEnsemble& ensemble) {
  std::vector<double> ps;
  for (const auto& run : ensemble.runs)
    if (!run.failed) ps.push_back(run.p_h1_post);
  if (ps.size() < 50)
    throw std::invalid_argument("sbc_prior_recovery: need >= 50 successful runs");
  PriorRecovery rec;
  rec.n_used = ps.size();
  rec.mean_p_h1 = mean(ps);
  const auto ci = wilson_interval(rec.mean_p_h1, ps.size());
  rec.ci_low = ci.low;
  rec.ci_high = ci.high;
  rec.pass = ensemble.model_prior.p_h1 >= rec.ci_low && ensemble.model_prior.p_h1 <= rec.ci_high;
  return rec;
}

TruthTable sbc_truth_table(const SbcEnsemble& ensemble) {
  double sum_h0 = 0.0, sum_h1 = 0.0;
  std::size_t n_h0 = 0, n_h1 = 0;
  for (const auto& run : ensemble.runs) {
    if (run.failed) continue;
    if (run.truth == Hypothesis::H0) {
      sum_h0 += run.p_h1_post;
      ++n_h0;
    } else {
      sum_h1 += run.p_h1_post;
      ++n_h1;
    }
  }
  TruthTable t;
  t.h0_present = n_h0 > 0;
  t.h1_present = n_h1 > 0;
  if (t.h0_present) {
    t.h0_true_ph1 = 100.0 * sum_h0 / static_cast<double>(n_h0);
    t.h0_true_ph0 = 100.0 - t.h0_true_ph1;
  }
  if (t.h1_present) {
    t.h1_true_ph1 = 100.0 * sum_h1 / static_cast<double>(n_h1);
    t.h1_true_ph0 = 100.0 - t.h1_true_ph1;
  }
  return t;
}

std::vector<SweepPoint> prior_probability_sweep(const std::vector<double>& p_h1_per_run,
                                                std::uint64_t seed, const SbcPipeline& pipeline,
                                                int jobs, int bin_size) {
  if (p_h1_per_run.empty()) throw std::invalid_argument("sweep: empty prior grid");
  for (double p : p_h1_per_run)
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("sweep: priors must lie in [0,1]");
  if (bin_size < 1) throw std::invalid_argument("sweep: bin_size must be >= 1");

  const std::size_t n = p_h1_per_run.size();
  struct RunResult {
    double p_h0_post = 0.0;
    bool ok = false;
  };
  std::vector<RunResult> results(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    ModelPrior prior{1.0 - p_h1_per_run[i], p_h1_per_run[i]};
    auto rng = derive_stream(seed, "sweep_hyp", i);
    const Hypothesis truth = draw_uniform(rng) > prior.p_h0 ? Hypothesis::H1 : Hypothesis::H0;
    if (prior.degenerate()) {
      results[i] = {prior.p_h0, true};
      return;
    }
    try {
      const auto outcome = pipeline(static_cast<int>(i), truth);
      if (!outcome.bf.failed)
        results[i] = {posterior_model_probs(outcome.bf.bf10(), prior).p_h0, true};
    } catch (const std::exception&) {
      // failed runs drop out of the bin averages
    }
  });

  std::vector<SweepPoint> points;
  for (std::size_t start = 0; start < n; start += bin_size) {
    const std::size_t end = std::min(n, start + static_cast<std::size_t>(bin_size));
    SweepPoint pt;
    double sum_prior = 0.0, sum_post = 0.0;
    int used = 0;
    for (std::size_t i = start; i < end; ++i) {
      sum_prior += 1.0 - p_h1_per_run[i];
      if (results[i].ok) {
        sum_post += results[i].p_h0_post;
        ++used;
      }
    }
    pt.prior_p_h0 = sum_prior / static_cast<double>(end - start);
    pt.n_runs = used;
    if (used > 0) {
      pt.mean_post_p_h0 = sum_post / used;
      const auto ci = wilson_interval(pt.mean_post_p_h0, used);
      pt.ci_low = ci.low;
      pt.ci_high = ci.high;
    }
    points.push_back(pt);
  }
  return points;
}

namespace {

json truth_params_to_json(const SimTruth& t) {
  json j{{"beta0", t.beta0},
         {"beta1", t.beta1},
         {"sd_u0", t.vc_subject.sd_intercept},
         {"sd_u1", t.vc_subject.sd_slope},
         {"rho_u", t.vc_subject.rho},
         {"sigma", t.sigma}};
  if (t.vc_item) {
    j["sd_w0"] = t.vc_item->sd_intercept;
    j["sd_w1"] = t.vc_item->sd_slope;
    j["rho_w"] = t.vc_item->rho;
  }
  return j;
}

SimTruth truth_params_from_json(const json& j) {
  SimTruth t;
  t.beta0 = j.at("beta0");
  t.beta1 = j.at("beta1");
  t.vc_subject = {j.at("sd_u0"), j.at("sd_u1"), j.at("rho_u")};
  t.sigma = j.at("sigma");
  if (j.contains("sd_w0")) t.vc_item = VarianceComponents{j.at("sd_w0"), j.at("sd_w1"), j.at("rho_w")};
  return t;
}

}  // namespace

void write_ensemble_jsonl(const SbcEnsemble& ensemble, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("sbc: cannot write '" + path + "'");
  for (const auto& run : ensemble.runs) {
    json j{{"run", run.index},
           {"truth", hypothesis_name(run.truth)},
           {"failed", run.failed},
           {"p_h0", ensemble.model_prior.p_h0},
           {"p_h1", ensemble.model_prior.p_h1}};
    if (!run.failed) {
      j["bf10"] = run.bf.bf10();
      j["log_bf10"] = run.bf.log_bf10;
      j["p_h1_post"] = run.p_h1_post;
      j["unstable"] = run.bf.stability_flag;
    }
    if (!run.flag.empty()) j["flag"] = run.flag;
    if (run.truth_params) j["truth_params"] = truth_params_to_json(*run.truth_params);
    out << j.dump() << '\n';
  }
}

SbcEnsemble read_ensemble_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("sbc: cannot open '" + path + "'");
  SbcEnsemble ensemble;
  std::string line;
  bool prior_set = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    SbcRun run;
    run.index = j.at("run");
    run.truth = j.at("truth") == "H1" ? Hypothesis::H1 : Hypothesis::H0;
    run.failed = j.at("failed");
    if (!prior_set && j.contains("p_h0")) {
      ensemble.model_prior = {j.at("p_h0"), j.at("p_h1")};
      prior_set = true;
    }
    if (run.failed) {
      run.bf = BayesFactorEstimate::failure(j.value("flag", "recorded failure"));
      run.p_h1_post = std::numeric_limits<double>::quiet_NaN();
    } else {
      run.bf = BayesFactorEstimate::from_log(j.at("log_bf10"), j.value("unstable", false));
      run.p_h1_post = j.at("p_h1_post");
    }
    run.flag = j.value("flag", "");
    if (j.contains("truth_params")) run.truth_params = truth_params_from_json(j.at("truth_params"));
    ensemble.runs.push_back(run);
  }
  for (const auto& run : ensemble.runs)
    if (run.failed) ++ensemble.n_failures;
  ensemble.invalid = ensemble.n_failures > 0.2 * static_cast<double>(ensemble.runs.size());
  return ensemble;
}

}  // namespace bfw
