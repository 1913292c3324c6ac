#include <benchmark/benchmark.h>

#include <vector>

#include "singular_bound/gibbs_pacbayes.hpp"
#include "singular_bound/kernels.hpp"
#include "singular_bound/model_losses.hpp"
#include "singular_bound/partition.hpp"

namespace {

sb::Exec exec_of(const benchmark::State& state) {
    return state.range(0) == 0 ? sb::Exec::serial : sb::Exec::parallel;
}

void BM_TensorQuadrature2D(benchmark::State& state) {
    const auto rule = sb::composite_gauss_legendre(0.0, 1.0, 1024);
    const auto risk = sb::monomial_risk({1, 1});
    const sb::Integrand f = [&](std::span<const double> u) { return std::exp(-500.0 * risk(u)); };
    for (auto _ : state) benchmark::DoNotOptimize(sb::tensor_integral(f, 2, rule, exec_of(state)));
}
BENCHMARK(BM_TensorQuadrature2D)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

sb::ReluRegressionModel relu_model() {
    std::vector<double> theta{1.0, -0.5, 0.5, 0.8, 0.1, -0.2, 0.7, -0.6, 0.05};
    auto truth = sb::ReluNetwork::unflatten({2, 2, 1}, theta);
    return sb::ReluRegressionModel(truth, {2, 4, 4, 1}, 0.1, -1.0, 1.0);
}

void BM_ReluEmpiricalRisk(benchmark::State& state) {
    const auto model = relu_model();
    const auto data = model.generate(static_cast<std::size_t>(state.range(1)), 3);
    const auto theta = model.truth_parameters();
    for (auto _ : state) benchmark::DoNotOptimize(model.empirical_risk(theta, data, exec_of(state)));
}
BENCHMARK(BM_ReluEmpiricalRisk)->Args({0, 3200})->Args({1, 3200})->Args({0, 51200})->Args({1, 51200});

void BM_GibbsChains(benchmark::State& state) {
    const auto truth = sb::MatrixCompletionTruth::random(2, 2, 1, 2, 0.5, 2.0, 0.8, 1);
    const sb::CompletionModel model(truth);
    const auto data = model.generate(2000, 5);
    sb::GibbsConfig g;
    g.omega = 0.01;
    g.prior = sb::Box::cube(model.dimension(), -1.0, 1.0);
    g.chain_length = 5000;
    g.burn_in = 1000;
    g.chains = 4;
    for (auto _ : state) benchmark::DoNotOptimize(sb::sample_gibbs_posterior(model, data, g, exec_of(state)));
}
BENCHMARK(BM_GibbsChains)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
