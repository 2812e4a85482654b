#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bfw/conjugate.hpp"
#include "bfw/design.hpp"
#include "bfw/diagnostics.hpp"
#include "bfw/math_util.hpp"
#include "bfw/model.hpp"
#include "bfw/rng.hpp"
#include "bfw/sampler.hpp"
#include "bfw/simulate.hpp"
#include "bfw/chain_json.hpp"
#include "test_support.hpp"

using namespace bfw;

namespace {

LogDensityTarget gaussian_target(std::vector<double> sds) {
  LogDensityTarget t;
  t.dim = static_cast<int>(sds.size());
  t.log_density = [sds = std::move(sds)](std::span<const double> q, std::span<double> grad) {
    double lp = 0.0;
    for (std::size_t d = 0; d < sds.size(); ++d) {
      const double inv_var = 1.0 / (sds[d] * sds[d]);
      lp += -0.5 * q[d] * q[d] * inv_var;
      if (!grad.empty()) grad[d] = -q[d] * inv_var;
    }
    return lp;
  };
  return t;
}

SamplerConfig quick_config(int iter, std::uint64_t seed, int warmup = 500) {
  SamplerConfig cfg;
  cfg.n_chains = 4;
  cfg.warmup = warmup;
  cfg.iter = iter;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("standard normal target: moments recovered at 4x8000 draws") {
  const auto target = gaussian_target({1, 1, 1, 1, 1});
  const auto chains = sample_posterior(target, quick_config(8000, 21));
  for (int d = 0; d < 5; ++d) {
    const auto draws = chains.pooled(d);
    CHECK(std::fabs(mean(draws)) < 0.02);
    CHECK(std::fabs(sample_variance(draws) - 1.0) < 0.05);
  }
  CHECK(chains.total_divergences() == 0);
}

TEST_CASE("ill-scaled gaussian: both marginals recovered within 5%") {
  const auto target = gaussian_target({1.0, 10.0});
  const auto chains = sample_posterior(target, quick_config(8000, 22));
  const auto d0 = chains.pooled(0);
  const auto d1 = chains.pooled(1);
  CHECK(std::fabs(sample_variance(d0) - 1.0) < 0.05);
  CHECK(std::fabs(sample_variance(d1) - 100.0) / 100.0 < 0.05);
  CHECK(chains.total_divergences() == 0);
}

TEST_CASE("conjugate posterior mean matches the closed form") {
  auto rng = derive_stream(4, "conj_data");
  ConjugateModel m{0.2, 0.8, 1.0, {}};
  for (int i = 0; i < 12; ++i) m.y.push_back(draw_normal(rng, 0.5, 1.0));
  LogDensityTarget target;
  target.dim = 1;
  target.log_density = [&m](std::span<const double> q, std::span<double> grad) {
    double g = 0.0;
    const double lp = conjugate_log_joint(m, q[0], grad.empty() ? nullptr : &g);
    if (!grad.empty()) grad[0] = g;
    return lp;
  };
  const auto chains = sample_posterior(target, quick_config(4000, 23));
  const auto post = conjugate_posterior(m);
  const auto draws = chains.pooled(0);
  const auto diag = compute_diagnostics(chains);
  const double mc_se = std::sqrt(post.var / diag.bulk_ess[0]);
  CHECK(std::fabs(mean(draws) - post.mean) < 3.0 * mc_se);
  CHECK(std::fabs(sample_variance(draws) - post.var) / post.var < 0.1);
}

TEST_CASE("1-d gaussian passes a Kolmogorov-Smirnov check at 32000 draws") {
  const auto target = gaussian_target({1.0});
  const auto chains = sample_posterior(target, quick_config(8000, 24));
  const auto draws = chains.pooled(0);
  REQUIRE(draws.size() == 32000);
  const double ks = test_support::ks_statistic(draws, [](double x) { return normal_cdf(x); });
  CHECK(ks < 0.02);
}

TEST_CASE("identical config and seed give bit-identical chains") {
  const auto target = gaussian_target({1.0, 2.0, 0.5});
  auto cfg = quick_config(200, 25, 200);
  const auto a = sample_posterior(target, cfg);
  const auto b = sample_posterior(target, cfg);
  REQUIRE(a.draws.size() == b.draws.size());
  for (std::size_t c = 0; c < a.draws.size(); ++c) CHECK(a.draws[c] == b.draws[c]);
  CHECK(a.log_joint == b.log_joint);
}

TEST_CASE("serial and parallel chain execution produce identical output") {
  const auto target = gaussian_target({1.0, 2.0});
  auto cfg = quick_config(300, 26, 200);
  cfg.jobs = 1;
  const auto serial = sample_posterior(target, cfg);
  cfg.jobs = 4;
  const auto parallel = sample_posterior(target, cfg);
  for (int c = 0; c < cfg.n_chains; ++c) CHECK(serial.draws[c] == parallel.draws[c]);
}

TEST_CASE("initialization failure after 100 retries is reported") {
  LogDensityTarget bad;
  bad.dim = 2;
  bad.log_density = [](std::span<const double>, std::span<double>) {
    return -std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(sample_posterior(bad, quick_config(10, 27, 100)), std::runtime_error);
}

TEST_CASE("config validation") {
  SamplerConfig cfg;
  cfg.warmup = 50;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.warmup = 200;
  cfg.target_accept = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("lmm fit: posterior concentrates near a strong simulated effect") {
  DesignSpec d;
  d.replications = 4;
  d.n_subjects = 12;
  SimTruth truth;
  truth.beta0 = 6.0;
  truth.beta1 = -0.5;
  truth.vc_subject = {0.3, 0.1, 0.2};
  truth.sigma = 0.3;
  const auto data = sim_lmm(generate_design(d), truth, 31);

  LmmModelSpec spec;
  spec.include_slope = true;
  spec.subject_random = RandomStructure::InterceptSlope;
  PriorSpec prior;
  LmmModel model(data, spec, prior);
  LogDensityTarget target;
  target.dim = model.dim();
  target.log_density = [&model](std::span<const double> t, std::span<double> g) {
    return model.log_joint(t, g);
  };
  auto cfg = quick_config(1500, 32, 500);
  cfg.target_accept = 0.9;
  InitProvider init = [&model](std::mt19937_64& rng) { return model.initial_point(rng); };
  const auto chains = sample_posterior(target, cfg, init);
  const auto diag = compute_diagnostics(chains);
  CHECK(diag.max_rhat() < 1.02);

  const auto beta1_draws = chains.pooled(model.layout().beta1);
  const double m = mean(beta1_draws);
  const double s = sample_sd(beta1_draws);
  CHECK(std::fabs(m - truth.beta1) < 4.0 * s);
  CHECK(s < 0.2);
}

// --- diagnostics -----------------------------------------------------------

namespace {

ChainSet synthetic_chains(const std::vector<std::vector<double>>& columns_per_chain) {
  ChainSet cs;
  cs.n_chains = static_cast<int>(columns_per_chain.size());
  cs.n_iter = static_cast<int>(columns_per_chain.front().size());
  cs.dim = 1;
  cs.draws = columns_per_chain;
  cs.log_joint.assign(cs.n_chains, std::vector<double>(cs.n_iter, 0.0));
  cs.stats.resize(cs.n_chains);
  return cs;
}

}  // namespace

TEST_CASE("identical triangular ramps give R-hat of 1") {
  std::vector<double> ramp;
  for (int i = 0; i < 1000; ++i) ramp.push_back(i);
  for (int i = 1000; i > 0; --i) ramp.push_back(i);
  const auto cs = synthetic_chains({ramp, ramp});
  const auto diag = compute_diagnostics(cs);
  CHECK(std::fabs(diag.rhat[0] - 1.0) < 0.01);
  CHECK(diag.rhat[0] >= 1.0 - 1e-3);
}

TEST_CASE("iid normal draws have ESS within 20% of the draw count") {
  auto rng = derive_stream(8, "iid_ess");
  std::vector<std::vector<double>> cols(4, std::vector<double>(4000));
  for (auto& c : cols)
    for (auto& v : c) v = draw_normal(rng);
  const auto diag = compute_diagnostics(synthetic_chains(cols));
  const double total = 16000.0;
  CHECK(diag.bulk_ess[0] > 0.8 * total);
  CHECK(diag.bulk_ess[0] < 1.25 * total);
  CHECK(std::fabs(diag.rhat[0] - 1.0) < 0.01);
  CHECK(diag.tail_ess[0] > 0.5 * total);
}

TEST_CASE("a shifted chain is flagged by R-hat") {
  auto rng = derive_stream(9, "shifted");
  std::vector<std::vector<double>> cols(2, std::vector<double>(2000));
  for (auto& v : cols[0]) v = draw_normal(rng);
  for (auto& v : cols[1]) v = draw_normal(rng) + 10.0;
  const auto diag = compute_diagnostics(synthetic_chains(cols));
  CHECK(diag.rhat[0] > 1.5);
}

TEST_CASE("constant chains are reported as NaN with a flag") {
  std::vector<std::vector<double>> cols(2, std::vector<double>(64, 3.14));
  const auto diag = compute_diagnostics(synthetic_chains(cols));
  CHECK(std::isnan(diag.rhat[0]));
  CHECK(diag.any_undefined);
}

TEST_CASE("diagnostics preconditions") {
  std::vector<std::vector<double>> one_chain(1, std::vector<double>(64, 0.0));
  CHECK_THROWS_AS(compute_diagnostics(synthetic_chains(one_chain)), std::invalid_argument);
  std::vector<std::vector<double>> short_chains(2, std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(compute_diagnostics(synthetic_chains(short_chains)), std::invalid_argument);
}

TEST_CASE("chainset json round trip is exact") {
  const auto target = gaussian_target({1.0, 3.0});
  const auto chains = sample_posterior(target, quick_config(50, 28, 100));
  const auto j = chainset_to_json(chains);
  const auto back = chainset_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.n_chains == chains.n_chains);
  CHECK(back.draws == chains.draws);
  CHECK(back.log_joint == chains.log_joint);
  CHECK(back.stats[0].step_size == chains.stats[0].step_size);
}
