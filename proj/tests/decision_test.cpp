#include <doctest.h>

#include <cmath>

#include "bfw/decision.hpp"
#include "bfw/rng.hpp"
#include "synthetic_ensembles.hpp"

using namespace bfw;

namespace {

const UtilitySpec paper_utilities{10.0, -50.0, 5.0, -5.0};

}  // namespace

TEST_CASE("decide uses a >= threshold") {
  CHECK(decide(6.5, 5.0) == Action::Discovery);
  CHECK(decide(10.0, 10.0) == Action::Discovery);
  CHECK(decide(1.0, 10.0) == Action::NoDiscovery);
  CHECK(decide(BayesFactorEstimate::failure("x"), 10.0) == Action::NoDecision);
  CHECK_THROWS_AS(decide(2.0, 0.0), std::domain_error);
}

TEST_CASE("tabulate partitions decided runs") {
  std::vector<Hypothesis> truths = {Hypothesis::H0, Hypothesis::H0, Hypothesis::H1,
                                    Hypothesis::H1, Hypothesis::H1};
  std::vector<Action> actions = {Action::Discovery, Action::NoDiscovery, Action::Discovery,
                                 Action::NoDecision, Action::NoDiscovery};
  const auto c = tabulate(truths, actions);
  CHECK(c.h0_disc == 1);
  CHECK(c.h0_nodisc == 1);
  CHECK(c.h1_disc == 1);
  CHECK(c.h1_nodisc == 1);
  CHECK(c.total() == 4);  // the NoDecision run is excluded

  const auto empty = tabulate(std::vector<Hypothesis>{}, std::vector<Action>{});
  CHECK(empty.total() == 0);

  actions.pop_back();
  CHECK_THROWS_AS(tabulate(truths, actions), std::invalid_argument);
}

TEST_CASE("average utility reproduces the published values exactly") {
  // posterior-probability rule
  TruthActionCounts prob_rule{23, 222, 170, 83};
  CHECK(average_utility(prob_rule, paper_utilities) == doctest::Approx(2.5).epsilon(1e-9));
  // BF >= 10 rule
  TruthActionCounts bf_rule{0, 245, 121, 132};
  CHECK(average_utility(bf_rule, paper_utilities) == doctest::Approx(3.564257).epsilon(1e-6));

  TruthActionCounts zero{0, 0, 0, 0};
  CHECK_THROWS_AS(average_utility(zero, paper_utilities), std::invalid_argument);
  CHECK(average_utility(prob_rule, UtilitySpec{0, 0, 0, 0}) == 0.0);
}

TEST_CASE("average utility is linear in the utility vector") {
  TruthActionCounts c{23, 222, 170, 83};
  const double base = average_utility(c, paper_utilities);
  UtilitySpec scaled{30.0, -150.0, 15.0, -15.0};
  CHECK(average_utility(c, scaled) == doctest::Approx(3.0 * base).epsilon(1e-12));
  UtilitySpec shifted{12.0, -48.0, 7.0, -3.0};
  CHECK(average_utility(c, shifted) == doctest::Approx(base + 2.0).epsilon(1e-12));
}

TEST_CASE("default threshold grid is 40 log-spaced points in [1, 100]") {
  const auto grid = default_threshold_grid();
  REQUIRE(grid.size() == 40);
  CHECK(grid.front() == doctest::Approx(1.0));
  CHECK(grid.back() == doctest::Approx(100.0));
  for (std::size_t i = 1; i < grid.size(); ++i)
    CHECK(grid[i] / grid[i - 1] == doctest::Approx(grid[1] / grid[0]).epsilon(1e-9));
}

TEST_CASE("optimizer matches an independent brute-force sweep exactly") {
  const auto ensemble = test_support::random_ensemble(81);
  const auto grid = default_threshold_grid();
  const auto opt = optimize_threshold(ensemble.bfs, ensemble.truths, paper_utilities, grid);

  // brute force from first principles
  double best_u = -std::numeric_limits<double>::infinity();
  double best_thr = 0.0;
  for (double thr : grid) {
    double sum = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < ensemble.bfs.size(); ++i) {
      if (ensemble.bfs[i].failed) continue;
      const bool disc = ensemble.bfs[i].bf10() >= thr;
      const bool h1 = ensemble.truths[i] == Hypothesis::H1;
      sum += h1 ? (disc ? paper_utilities.u_true_discovery : paper_utilities.u_false_rejection)
                : (disc ? paper_utilities.u_false_discovery : paper_utilities.u_true_rejection);
      ++n;
    }
    const double avg = sum / static_cast<double>(n);
    if (avg > best_u) {
      best_u = avg;
      best_thr = thr;
    }
  }
  CHECK(opt.best_threshold == best_thr);
  CHECK(opt.best_utility == doctest::Approx(best_u).epsilon(1e-15));
  REQUIRE(opt.curve.size() == grid.size());
}

TEST_CASE("paper-shaped ensemble yields an optimal threshold in [5, 10]") {
  const auto ensemble = test_support::paper_shaped_ensemble();
  const auto opt = optimize_threshold(ensemble.bfs, ensemble.truths, paper_utilities,
                                      default_threshold_grid());
  CHECK(opt.best_threshold >= 5.0);
  CHECK(opt.best_threshold <= 10.0);
}

TEST_CASE("all BFs below the grid: constant curve, optimum at the grid minimum") {
  std::vector<BayesFactorEstimate> bfs;
  std::vector<Hypothesis> truths;
  for (int i = 0; i < 10; ++i) {
    bfs.push_back(BayesFactorEstimate::from_log(std::log(0.5)));
    truths.push_back(i % 2 ? Hypothesis::H0 : Hypothesis::H1);
  }
  const auto grid = default_threshold_grid();
  const auto opt = optimize_threshold(bfs, truths, paper_utilities, grid);
  CHECK(opt.best_threshold == grid.front());
  for (const auto& p : opt.curve) CHECK(p.avg_utility == opt.curve.front().avg_utility);
}

TEST_CASE("optimal threshold is invariant to positive affine utility transforms") {
  const auto ensemble = test_support::random_ensemble(82);
  const auto grid = default_threshold_grid();
  const auto base = optimize_threshold(ensemble.bfs, ensemble.truths, paper_utilities, grid);
  UtilitySpec affine{10.0 * 2.5 + 3.0, -50.0 * 2.5 + 3.0, 5.0 * 2.5 + 3.0, -5.0 * 2.5 + 3.0};
  const auto transformed = optimize_threshold(ensemble.bfs, ensemble.truths, affine, grid);
  CHECK(base.best_threshold == transformed.best_threshold);
}

TEST_CASE("raising the threshold never increases discoveries") {
  const auto ensemble = test_support::random_ensemble(83);
  long prev = std::numeric_limits<long>::max();
  for (double thr : default_threshold_grid()) {
    long n_disc = 0;
    for (const auto& bf : ensemble.bfs)
      if (decide(bf, thr) == Action::Discovery) ++n_disc;
    CHECK(n_disc <= prev);
    prev = n_disc;
  }
}

TEST_CASE("two-way discovery rates match the published table") {
  TruthActionCounts c{23, 222, 170, 83};
  const auto r = discovery_rates(c);
  CHECK(r.h0_nodisc == doctest::Approx(0.91).epsilon(0.005));
  CHECK(r.h0_disc == doctest::Approx(0.09).epsilon(0.05));
  CHECK(r.h1_nodisc == doctest::Approx(0.33).epsilon(0.01));
  CHECK(r.h1_disc == doctest::Approx(0.67).epsilon(0.01));
  CHECK(r.h0_nodisc + r.h0_disc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.h1_nodisc + r.h1_disc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate rates: all H1-true, all discovered") {
  TruthActionCounts c{0, 0, 5, 0};
  const auto r = discovery_rates(c);
  CHECK(r.h1_disc == 1.0);
  CHECK(r.h1_nodisc == 0.0);
}

TEST_CASE("three-way rates at thresholds (1/10, 10)") {
  // 100 H0 runs: 13 with bf <= 1/10, 87 in between, none >= 10.
  // 100 H1 runs: none <= 1/10, 52 in between, 48 with bf >= 10.
  std::vector<BayesFactorEstimate> bfs;
  std::vector<Hypothesis> truths;
  auto add = [&](Hypothesis h, double bf, int n) {
    for (int i = 0; i < n; ++i) {
      truths.push_back(h);
      bfs.push_back(BayesFactorEstimate::from_log(std::log(bf)));
    }
  };
  add(Hypothesis::H0, 0.05, 13);
  add(Hypothesis::H0, 1.0, 87);
  add(Hypothesis::H1, 2.0, 52);
  add(Hypothesis::H1, 15.0, 48);
  const auto r = discovery_rates_three_way(bfs, truths, 0.1, 10.0);
  CHECK(r.h0_evidence_h0 == doctest::Approx(13.0));
  CHECK(r.h0_no_evidence == doctest::Approx(87.0));
  CHECK(r.h0_evidence_h1 == doctest::Approx(0.0));
  CHECK(r.h1_evidence_h0 == doctest::Approx(0.0));
  CHECK(r.h1_no_evidence == doctest::Approx(52.0));
  CHECK(r.h1_evidence_h1 == doctest::Approx(48.0));
  CHECK(r.h0_evidence_h0 + r.h0_no_evidence + r.h0_evidence_h1 == doctest::Approx(100.0));

  CHECK_THROWS_AS(discovery_rates_three_way(bfs, truths, 10.0, 0.1), std::invalid_argument);
}
