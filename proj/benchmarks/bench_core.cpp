#include <benchmark/benchmark.h>

#include "kdlab/harness.hpp"
#include "kdlab/kd.hpp"
#include "kdlab/metrics.hpp"
#include "kdlab/nn.hpp"
#include "kdlab/rng.hpp"
#include "kdlab/scaling.hpp"

namespace {

std::vector<kdlab::scaling::LogitRecord> records_for(int classes, std::size_t n) {
    return kdlab::harness::synthetic_logits(n, classes, 42);
}

void BM_SoftmaxTs(benchmark::State& state) {
    auto records = records_for(static_cast<int>(state.range(0)), 256);
    std::size_t i = 0;
    for (auto _ : state) {
        auto p = kdlab::scaling::softmax_ts(records[i % records.size()], 4.0);
        benchmark::DoNotOptimize(p.probs.data());
        ++i;
    }
}
BENCHMARK(BM_SoftmaxTs)->Arg(10)->Arg(100)->Arg(1000);

void BM_SoftmaxAts(benchmark::State& state) {
    auto records = records_for(static_cast<int>(state.range(0)), 256);
    kdlab::scaling::TemperaturePair taus(4.0, 2.0);
    std::size_t i = 0;
    for (auto _ : state) {
        auto p = kdlab::scaling::softmax_ats(records[i % records.size()], taus);
        benchmark::DoNotOptimize(p.probs.data());
        ++i;
    }
}
BENCHMARK(BM_SoftmaxAts)->Arg(10)->Arg(100)->Arg(1000);

void BM_DecompositionStats(benchmark::State& state) {
    auto records = records_for(static_cast<int>(state.range(0)), 256);
    std::size_t i = 0;
    for (auto _ : state) {
        auto s = kdlab::metrics::decomposition_stats(records[i % records.size()], 4.0);
        benchmark::DoNotOptimize(s.derived_var);
        ++i;
    }
}
BENCHMARK(BM_DecompositionStats)->Arg(10)->Arg(100);

void BM_KdDecompose(benchmark::State& state) {
    auto records = records_for(static_cast<int>(state.range(0)), 256);
    kdlab::kd::LossConfig cfg;
    cfg.teacher_temps = 4.0;
    cfg.student_temp = 4.0;
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& t = records[i % records.size()];
        kdlab::scaling::LogitRecord s(records[(i + 1) % records.size()].logits, t.label);
        auto terms = kdlab::kd::kd_decompose(t, s, cfg);
        benchmark::DoNotOptimize(terms.total);
        ++i;
    }
}
BENCHMARK(BM_KdDecompose)->Arg(10)->Arg(100);

void BM_Kendall(benchmark::State& state) {
    auto records = records_for(static_cast<int>(state.range(0)), 64);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& a = records[i % records.size()].logits;
        const auto& b = records[(i + 1) % records.size()].logits;
        benchmark::DoNotOptimize(kdlab::metrics::kendall(a, b));
        ++i;
    }
}
BENCHMARK(BM_Kendall)->Arg(10)->Arg(100);

void BM_MlpForwardBackward(benchmark::State& state) {
    auto model = kdlab::nn::init_model({20, 128, 128, 10}, 7);
    kdlab::rng::Engine engine(3);
    std::vector<double> x(20);
    for (double& v : x) {
        v = engine.normal();
    }
    std::vector<double> grad(10, 0.1);
    grad[0] = -0.9;
    for (auto _ : state) {
        auto g = kdlab::nn::backward(model, x, grad);
        benchmark::DoNotOptimize(g.weights[0].data());
    }
}
BENCHMARK(BM_MlpForwardBackward);

}  // namespace

BENCHMARK_MAIN();
