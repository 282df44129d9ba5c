#include <random>

#include <benchmark/benchmark.h>

#include <netoed/eig.hpp>
#include <netoed/optimize.hpp>

#include "test_support.hpp"

using namespace netoed;

namespace {

SensorNetwork grid_network(int n) {
    SensorNetwork net;
    for (int i = 0; i < n; ++i) net.stations.push_back({{40.2 + 1.6 * (i % 3) / 2.0, -111.8 + 3.2 * (i / 3) / 3.0}, 0.0});
    return net;
}

void BM_MarginalLikelihood(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0, 1);
    Eigen::MatrixXd a(n, n);
    for (auto& x : a.reshaped()) x = g(rng);
    const Eigen::MatrixXd sigma = a * a.transpose() / n + Eigen::MatrixXd::Identity(n, n);
    std::vector<int> idx(n);
    std::vector<double> resid(n);
    for (int i = 0; i < n; ++i) idx[i] = i, resid[i] = g(rng);
    MarginalWorkspace ws;
    for (auto _ : state) benchmark::DoNotOptimize(ws.marginal(sigma.data(), n, idx, resid));
}
BENCHMARK(BM_MarginalLikelihood)->Arg(2)->Arg(5)->Arg(10)->Arg(20);

void BM_EigTotal(benchmark::State& state) {
    const auto bundle = netoed::testing::simple_bundle(0.5);
    const auto support = build_support(PriorSpec::uniform(Domain{}), static_cast<std::size_t>(state.range(0)), 1);
    const auto net = grid_network(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(eig_total(support, net, bundle, {8, 1, 1}).total_eig);
    state.SetItemsProcessed(state.iterations() * state.range(0) * 8);
}
BENCHMARK(BM_EigTotal)->Args({128, 5})->Args({512, 5})->Args({512, 9})->Unit(benchmark::kMillisecond);

void BM_GpFit(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> la(40, 42), lo(-112, -110);
    std::vector<GeoPoint> pts;
    std::vector<double> vals;
    for (int i = 0; i < state.range(0); ++i) {
        pts.push_back({la(rng), lo(rng)});
        vals.push_back(std::sin(pts.back().lat) * std::cos(pts.back().lon));
    }
    const GpInputBox box{40, 42, -112, -110};
    for (auto _ : state) benchmark::DoNotOptimize(gp_fit(pts, vals, box).hyper().length_lat);
}
BENCHMARK(BM_GpFit)->Arg(10)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
