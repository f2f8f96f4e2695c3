#include "smpkit/forward_see.hpp"
#include "smpkit/kernels.hpp"
#include "smpkit/scenarios.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using smpkit::kernels::Backend;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
    return m;
}

void BM_NormalEquations(benchmark::State& state, Backend backend) {
    const auto rows = static_cast<Eigen::Index>(state.range(0));
    const Eigen::MatrixXd x = random_matrix(rows, 15, 1);
    const Eigen::MatrixXd y = random_matrix(rows, 4, 2);
    smpkit::kernels::set_backend(backend);
    for (auto _ : state) {
        benchmark::DoNotOptimize(smpkit::kernels::normal_equations(x, y));
    }
    smpkit::kernels::set_backend(Backend::kOpenMP);
    state.SetItemsProcessed(state.iterations() * rows);
}

void BM_SimulateHeat(benchmark::State& state, Backend backend) {
    const auto sc = smpkit::make_heat_scenario(4, 2, {});
    const smpkit::TimeGrid grid = smpkit::TimeGrid::from_dt(1.0, 0.01);
    const auto ens = smpkit::sample_brownian(grid, static_cast<std::size_t>(state.range(0)), 7);
    const auto control = smpkit::ControlProcess::constant(Eigen::VectorXd::Ones(2), grid.n_steps());
    const smpkit::InitialState x0(Eigen::VectorXd::Ones(4));
    smpkit::kernels::set_backend(backend);
    for (auto _ : state) {
        benchmark::DoNotOptimize(smpkit::simulate_controlled(sc, x0, control, ens));
    }
    smpkit::kernels::set_backend(Backend::kOpenMP);
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_NormalEquations, serial, Backend::kSerial)->Arg(10000)->Arg(40000);
BENCHMARK_CAPTURE(BM_NormalEquations, openmp, Backend::kOpenMP)->Arg(10000)->Arg(40000);
BENCHMARK_CAPTURE(BM_SimulateHeat, serial, Backend::kSerial)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SimulateHeat, openmp, Backend::kOpenMP)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
