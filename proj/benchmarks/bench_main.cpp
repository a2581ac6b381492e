// libbenchmark_main.a ships as LTO bytecode on some distros; define main here instead.
#include <benchmark/benchmark.h>

#include "hypergen/linmodel.hpp"
#include "hypergen/scorediff.hpp"
#include "hypergen/simgen.hpp"

using namespace hypergen;

namespace {

GroundTruth truth(std::size_t mn) {
    SimConfig c;
    c.m = c.n = mn;
    return generate_ground_truth(c);
}

void BM_LogLikelihood(benchmark::State& state) {
    const auto g = truth(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(log_likelihood(g.hypergraph, g.embeddings, g.params));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_LogLikelihood)->Arg(100)->Arg(300)->Arg(1000);

void BM_Gradient(benchmark::State& state) {
    const auto g = truth(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(grad_log_likelihood(g.hypergraph, g.embeddings, g.params));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Gradient)->Arg(100)->Arg(300)->Arg(1000);

void BM_ScoreNetForward(benchmark::State& state) {
    const ScoreNet net = make_score_net(2, 1);
    const auto batch = state.range(0);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, batch);
    const Eigen::VectorXd t = Eigen::VectorXd::Constant(batch, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(net.predict_noise(x, t));
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ScoreNetForward)->Arg(1)->Arg(128)->Arg(4096);

// One reverse step per trajectory: N = 1 with the schedule's horizon.
void BM_SamplerStep(benchmark::State& state) {
    const ScoreNet net = make_score_net(2, 1);
    DiffusionSchedule one;
    one.N = 1;
    const auto count = static_cast<std::size_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample(net, one, count, seed++));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SamplerStep)->Arg(128)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
