#include <benchmark/benchmark.h>

#include <cmath>

#include "bfw/bridge.hpp"
#include "bfw/conjugate.hpp"
#include "bfw/rng.hpp"

using namespace bfw;

namespace {

void BM_bridge_conjugate(benchmark::State& state) {
  auto rng = derive_stream(7, "bench_bridge");
  ConjugateModel m{0.3, 0.9, 1.1, {}};
  for (int i = 0; i < 10; ++i) m.y.push_back(draw_normal(rng, 0.4, 1.1));
  const auto post = conjugate_posterior(m);

  const int n_iter = static_cast<int>(state.range(0));
  ChainSet chains;
  chains.n_chains = 4;
  chains.n_iter = n_iter;
  chains.dim = 1;
  chains.draws.resize(4);
  chains.log_joint.assign(4, std::vector<double>(n_iter, 0.0));
  chains.stats.resize(4);
  for (int c = 0; c < 4; ++c) {
    auto crng = derive_stream(8, "bench_draws", c);
    chains.draws[c].resize(n_iter);
    for (auto& v : chains.draws[c]) v = draw_normal(crng, post.mean, std::sqrt(post.var));
  }
  LogDensityTarget target;
  target.dim = 1;
  target.log_density = [&m](std::span<const double> q, std::span<double>) {
    return conjugate_log_joint(m, q[0], nullptr);
  };
  BridgeConfig cfg;
  for (auto _ : state) {
    cfg.seed++;
    const auto est = bridge_log_ml(chains, target, cfg);
    benchmark::DoNotOptimize(est.log_ml);
  }
  state.SetItemsProcessed(state.iterations() * chains.total_draws());
}

}  // namespace

BENCHMARK(BM_bridge_conjugate)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
