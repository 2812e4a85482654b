#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "bfw/conjugate.hpp"
#include "bfw/dataset.hpp"
#include "bfw/design.hpp"
#include "bfw/effect_scale.hpp"
#include "bfw/math_util.hpp"
#include "bfw/model.hpp"
#include "bfw/rng.hpp"
#include "bfw/simulate.hpp"
#include "test_support.hpp"

using namespace bfw;

namespace {

Dataset small_dataset(int n_subjects = 6, int n_items = 0, std::uint64_t seed = 7) {
  DesignSpec d;
  d.n_subjects = n_subjects;
  d.n_items = n_items;
  SimTruth t;
  t.beta0 = 6.0;
  t.beta1 = -0.1;
  t.vc_subject = {0.4, 0.2, 0.3};
  if (n_items > 0) t.vc_item = VarianceComponents{0.2, 0.1, -0.2};
  t.sigma = 0.5;
  return sim_lmm(generate_design(d), t, seed);
}

}  // namespace

TEST_CASE("dataset reindexes ids to contiguous ranges") {
  std::vector<Observation> rows = {
      {10, std::nullopt, 1.0, 400.0}, {42, std::nullopt, -1.0, 380.0}, {10, std::nullopt, -1.0, 410.0}};
  Dataset data(rows);
  CHECK(data.n_subjects() == 2);
  CHECK(data.rows()[0].subj == 0);
  CHECK(data.rows()[1].subj == 1);
  CHECK_FALSE(data.has_items());
}

TEST_CASE("dataset rejects invalid rows") {
  CHECK_THROWS_AS(Dataset({{0, std::nullopt, 1.0, -5.0}}), std::domain_error);
  CHECK_THROWS_AS(Dataset({{0, std::nullopt, 0.5, 300.0}}), std::domain_error);
  CHECK_THROWS_AS(Dataset({{0, std::nullopt, 1.0, 300.0}, {1, 3, -1.0, 300.0}}),
                  std::invalid_argument);
}

TEST_CASE("dataset csv round trip is lossless") {
  const auto data = small_dataset(4, 3);
  const auto path = std::filesystem::temp_directory_path() / "bfw_test_roundtrip.csv";
  data.write_csv(path.string());
  const auto back = Dataset::read_csv(path.string());
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.rows()[i].subj == data.rows()[i].subj);
    CHECK(back.rows()[i].item == data.rows()[i].item);
    CHECK(back.rows()[i].x == data.rows()[i].x);
    CHECK(back.rows()[i].rt == data.rows()[i].rt);  // 17 significant digits survive
  }
  std::filesystem::remove(path);
}

TEST_CASE("dataset csv rejects unknown columns") {
  const auto path = std::filesystem::temp_directory_path() / "bfw_test_badcol.csv";
  {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    std::fputs("subj,x,rt,bogus\n0,1,300,1\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_WITH_AS(Dataset::read_csv(path.string()),
                       doctest::Contains("bogus"), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("effect transform reproduces the -22 ms prior value") {
  const double beta1 = effect_ms_to_log(-22.0, 6.0);
  CHECK(std::fabs(std::fabs(beta1) - 0.027) < 0.001);
  CHECK(beta1 < 0.0);
  CHECK(std::fabs(effect_log_to_ms(beta1, 6.0) - (-22.0)) < 1e-9 * 22.0);
  CHECK(effect_ms_to_log(0.0, 4.2) == 0.0);
}

TEST_CASE("effect transform is odd and strictly increasing") {
  auto rng = derive_stream(11, "effect");
  double prev = effect_ms_to_log(-500.0, 6.0);
  for (double eff = -499.0; eff <= 500.0; eff += 7.3) {
    const double v = effect_ms_to_log(eff, 6.0);
    CHECK(v > prev);
    prev = v;
    const double mirrored = effect_ms_to_log(-eff, 6.0);
    CHECK(v == doctest::Approx(-mirrored).epsilon(1e-12));
  }
  (void)rng;
}

TEST_CASE("log joint: single-observation lognormal kernel") {
  Dataset data({{0, std::nullopt, 1.0, std::exp(6.0)}});
  LmmModelSpec spec;
  spec.include_slope = true;
  spec.subject_random = RandomStructure::InterceptOnly;
  PriorSpec prior;
  LmmModel model(data, spec, prior);

  ParameterVector p;
  p.beta0 = 6.0;
  p.beta1 = 0.0;
  p.sigma_u0 = 1.0;
  p.sigma = 1.0;
  p.z_u0 = {0.0};
  const double expected = -std::log(std::exp(6.0)) - 0.5 * std::log(2.0 * M_PI);
  CHECK(model.log_likelihood(p) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("log joint gradient matches central finite differences") {
  for (const bool with_items : {false, true}) {
    const auto data = small_dataset(5, with_items ? 3 : 0);
    LmmModelSpec spec;
    spec.include_slope = true;
    spec.subject_random = RandomStructure::InterceptSlope;
    spec.item_random = with_items ? RandomStructure::InterceptSlope : RandomStructure::None;
    PriorSpec prior;
    LmmModel model(data, spec, prior);

    auto value_only = [&](std::span<const double> t) { return model.log_joint(t, {}); };
    // Points shaped like actual parameter values: a central-difference step of
    // 1e-6 resolves the gradient there without round-off dominating.
    auto rng = derive_stream(3, with_items ? "fd_items" : "fd");
    for (int rep = 0; rep < 100; ++rep) {
      auto t = model.initial_point(rng);
      for (auto& v : t) v += draw_uniform(rng, -0.3, 0.3);
      std::vector<double> grad(model.dim());
      model.log_joint(t, grad);
      const auto fd = test_support::finite_difference_gradient(value_only, t);
      CHECK(test_support::max_relative_error(grad, fd, 1e-4) < 1e-5);
    }
  }
}

TEST_CASE("log joint collapses as sigma -> 0 on dispersed data") {
  const auto data = small_dataset();
  LmmModelSpec spec;
  spec.subject_random = RandomStructure::InterceptSlope;
  LmmModel model(data, spec, PriorSpec{});
  std::vector<double> t(model.dim(), 0.0);
  t[model.layout().beta0] = 6.0;
  const int i_sigma = model.layout().log_sigma;
  t[i_sigma] = std::log(0.5);
  const double at_half = model.log_joint(t, {});
  t[i_sigma] = std::log(0.05);
  const double at_twentieth = model.log_joint(t, {});
  t[i_sigma] = std::log(0.005);
  const double at_tiny = model.log_joint(t, {});
  CHECK(at_half > at_twentieth);
  CHECK(at_twentieth > at_tiny);
}

TEST_CASE("log joint input validation") {
  const auto data = small_dataset();
  LmmModelSpec spec;
  LmmModel model(data, spec, PriorSpec{});
  std::vector<double> wrong(model.dim() + 1, 0.0);
  CHECK_THROWS_AS(model.log_joint(wrong, {}), std::invalid_argument);
  std::vector<double> bad(model.dim(), 0.0);
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(model.log_joint(bad, {}), std::domain_error);
}

TEST_CASE("constrain/unconstrain round trip within 1e-12") {
  const auto data = small_dataset(4, 2);
  LmmModelSpec spec;
  spec.item_random = RandomStructure::InterceptSlope;
  LmmModel model(data, spec, PriorSpec{});
  auto rng = derive_stream(5, "roundtrip");
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> t(model.dim());
    for (auto& v : t) v = draw_uniform(rng, -2.0, 2.0);
    const auto back = model.unconstrain(model.constrain(t));
    CHECK(test_support::max_relative_error(t, back, 1e-6) < 1e-12);
  }
}

TEST_CASE("prior draw is consistent with the model layout") {
  const auto data = small_dataset(4, 2);
  LmmModelSpec spec;
  spec.item_random = RandomStructure::InterceptOnly;
  LmmModel model(data, spec, PriorSpec{});
  auto rng = derive_stream(6, "prior_draw");
  const auto p = model.draw_from_prior(rng);
  CHECK(p.sigma_u0 > 0.0);
  CHECK(p.sigma > 0.0);
  CHECK(p.z_u0.size() == 4);
  CHECK(p.z_w0.size() == 2);
  CHECK(p.z_w1.empty());
  const auto t = model.unconstrain(p);
  CHECK(std::isfinite(model.log_joint(t, {})));
}

// The exp-transform Jacobian convention: integrating the constrained density
// over sigma equals integrating the unconstrained density over log sigma.
TEST_CASE("transform Jacobian preserves the marginal (1-parameter reduction)") {
  const std::vector<double> y = {0.3, -0.5, 1.1, 0.2};
  const double scale = 0.8;
  auto log_post_constrained = [&](double sigma) {
    double lp = log_2 + log_normal_pdf(sigma, 0.0, scale);
    for (double yi : y) lp += log_normal_pdf(yi, 0.0, sigma);
    return lp;
  };
  auto log_post_unconstrained = [&](double t) {
    return log_post_constrained(std::exp(t)) + t;
  };
  const double direct = test_support::log_trapezoid(log_post_constrained, 1e-6, 12.0, 400000);
  const double via_unc = test_support::log_trapezoid(log_post_unconstrained, -14.0, 3.0, 400000);
  CHECK(direct == doctest::Approx(via_unc).epsilon(1e-8));
}

TEST_CASE("conjugate marginal: single observation closed form") {
  ConjugateModel m{0.0, 1.0, 1.0, {0.0}};
  // y ~ N(mu0, sigma^2 + tau^2) = N(0, 2)
  CHECK(analytic_log_marginal(m) == doctest::Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-12));
  CHECK(analytic_log_marginal(m) == doctest::Approx(-1.26551).epsilon(1e-5));
}

TEST_CASE("conjugate marginal: tau = 0 collapses to iid likelihood at mu0") {
  ConjugateModel m{0.7, 0.0, 1.3, {0.5, 0.9, -0.2}};
  double expected = 0.0;
  for (double yi : m.y) expected += log_normal_pdf(yi, m.mu0, m.sigma);
  CHECK(analytic_log_marginal(m) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(analytic_log_marginal({0.0, 1.0, 1.0, {}}) == 0.0);
}

TEST_CASE("conjugate marginal matches quadrature on fixed-seed data") {
  auto rng = derive_stream(123, "conjugate_quad");
  ConjugateModel m{0.4, 0.9, 1.1, {}};
  for (int i = 0; i < 10; ++i) m.y.push_back(draw_normal(rng, 0.3, 1.2));
  auto integrand = [&](double mu) {
    double lp = log_normal_pdf(mu, m.mu0, m.tau);
    for (double yi : m.y) lp += log_normal_pdf(yi, mu, m.sigma);
    return lp;
  };
  const double quad = test_support::log_trapezoid(integrand, m.mu0 - 12.0, m.mu0 + 12.0, 1000000);
  CHECK(analytic_log_marginal(m) == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("savage-dickey: no data means no updating") {
  ConjugateModel m{0.0, 1.0, 1.0, {}};
  CHECK(analytic_savage_dickey_bf01(m) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("savage-dickey: halving the posterior sd at zero doubles BF01") {
  // Prior N(0,1); three observations tuned so the posterior is N(0, 0.5^2):
  // posterior variance = 1/(1 + n/sigma^2) = 0.25 with n/sigma^2 = 3.
  ConjugateModel m{0.0, 1.0, 1.0, {0.0, 0.0, 0.0}};
  const auto post = conjugate_posterior(m);
  CHECK(post.mean == doctest::Approx(0.0));
  CHECK(std::sqrt(post.var) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(analytic_savage_dickey_bf01(m) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("savage-dickey identity against marginal likelihoods") {
  auto rng = derive_stream(99, "sd_identity");
  ConjugateModel h1{0.3, 0.7, 1.2, {}};
  for (int i = 0; i < 8; ++i) h1.y.push_back(draw_normal(rng, 0.2, 1.2));
  ConjugateModel h0 = h1;
  h0.mu0 = 0.0;
  h0.tau = 0.0;  // point null at zero
  const double bf01_marginals = std::exp(analytic_log_marginal(h0) - analytic_log_marginal(h1));
  CHECK(analytic_savage_dickey_bf01(h1) == doctest::Approx(bf01_marginals).epsilon(1e-10));
}

TEST_CASE("conjugate log joint gradient") {
  ConjugateModel m{0.1, 0.8, 1.0, {0.4, -0.3, 0.9}};
  auto f = [&](std::span<const double> t) { return conjugate_log_joint(m, t[0], nullptr); };
  for (double mu : {-1.0, 0.0, 0.7, 2.2}) {
    double g = 0.0;
    conjugate_log_joint(m, mu, &g);
    const auto fd = test_support::finite_difference_gradient(f, {mu});
    CHECK(g == doctest::Approx(fd[0]).epsilon(1e-6));
  }
}
