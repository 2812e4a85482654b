#include <benchmark/benchmark.h>

#include <vector>

#include "bfw/design.hpp"
#include "bfw/model.hpp"
#include "bfw/rng.hpp"
#include "bfw/simulate.hpp"

using namespace bfw;

namespace {

Dataset bench_data(int n_subjects, int n_items) {
  DesignSpec d;
  d.replications = 2;
  d.n_subjects = n_subjects;
  d.n_items = n_items;
  SimTruth truth;
  truth.beta0 = 6.0;
  truth.beta1 = -0.3;
  truth.vc_subject = {0.4, 0.3, 0.3};
  if (n_items > 0) truth.vc_item = VarianceComponents{0.2, 0.1, 0.0};
  truth.sigma = 0.5;
  return sim_lmm(generate_design(d), truth, 1);
}

void BM_log_joint_gradient(benchmark::State& state) {
  const auto data = bench_data(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  LmmModelSpec spec;
  spec.item_random = state.range(1) > 0 ? RandomStructure::InterceptSlope : RandomStructure::None;
  LmmModel model(data, spec, PriorSpec{});
  auto rng = derive_stream(2, "bench");
  auto theta = model.initial_point(rng);
  std::vector<double> grad(model.dim());
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.log_joint(theta, grad));
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data.size()));
}

}  // namespace

BENCHMARK(BM_log_joint_gradient)->Args({15, 0})->Args({30, 16})->Args({180, 48});
