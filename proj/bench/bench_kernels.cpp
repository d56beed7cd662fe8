// Serial reference versus OpenMP kernels: Tobit log-likelihood over rows and
// batch simulation over replications.

#include <benchmark/benchmark.h>
#include <random>

#include "vcm/econometrics/tobit.hpp"
#include "vcm/simulator.hpp"

namespace {

struct Data {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd beta;
};

Data make_data(int rows) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 100);
    std::normal_distribution<double> e(0, 20);
    Data d;
    d.X.resize(rows, 8);
    d.y.resize(rows);
    d.beta = Eigen::VectorXd::Zero(8);
    d.beta << -10, 0.3, 0.8, 0.3, -0.4, 0.2, -1, -1;
    for (int i = 0; i < rows; ++i) {
        d.X(i, 0) = 1;
        for (int j = 1; j < 8; ++j) d.X(i, j) = j < 6 ? u(rng) : u(rng) / 10;
        d.y(i) = std::clamp(d.X.row(i).dot(d.beta) + e(rng), 0.0, 100.0);
    }
    return d;
}

void loglik_serial(benchmark::State& state) {
    const auto d = make_data(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vcm::tobit_loglik_serial(d.beta, 20, d.X, d.y, 0, 100));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void loglik_openmp(benchmark::State& state) {
    const auto d = make_data(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vcm::tobit_loglik(d.beta, 20, d.X, d.y, 0, 100));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

vcm::RunSpec batch_spec(int reps) {
    vcm::RunSpec spec;
    spec.config.treatment = vcm::Treatment::SessionFeedback;
    spec.seed = 3;
    spec.replications = reps;
    vcm::AgentSpec a;
    a.kind = vcm::AgentKind::TobitLatent;
    a.coefficients = vcm::coefficient_preset("us_session");
    spec.roster.assign(12, a);
    return spec;
}

void batch_serial(benchmark::State& state) {
    const auto spec = batch_spec(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vcm::run_batch_serial(spec));
}

void batch_openmp(benchmark::State& state) {
    const auto spec = batch_spec(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(vcm::run_batch(spec));
}

}  // namespace

BENCHMARK(loglik_serial)->Arg(2808)->Arg(37440)->Arg(374400);
BENCHMARK(loglik_openmp)->Arg(2808)->Arg(37440)->Arg(374400);
BENCHMARK(batch_serial)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(batch_openmp)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
