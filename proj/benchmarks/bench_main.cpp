#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "support/fixtures.hpp"
#include "trafprof/baselines/forest.hpp"
#include "trafprof/dataset.hpp"
#include "trafprof/models.hpp"
#include "trafprof/pcap.hpp"
#include "trafprof/preprocess.hpp"
#include "trafprof/rng.hpp"
#include "trafprof/tls.hpp"

using namespace trafprof;

namespace {

NormalizedSeries random_series(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u{0.0, 1.0};
    NormalizedSeries s;
    for (std::size_t i = 0; i < kSeriesLength; ++i) s.entries.push_back({u(rng), (rng() & 1) ? 1.0 : 0.0, u(rng)});
    return s;
}

void BM_ExpPool(benchmark::State& state) {
    std::mt19937_64 rng{1};
    const auto s = random_series(rng);
    for (auto _ : state) benchmark::DoNotOptimize(exp_pool(s));
}
BENCHMARK(BM_ExpPool);

/// One forward and backward pass of the app classifier over a batch.
void BM_AppBatchGradients(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    auto rng = make_rng(2, "bench");
    const auto model = AppClassifier::initialized(Taxonomy::standard().app_names(), kDefaultHidden, rng);
    std::vector<PooledSeries> data;
    std::vector<int> labels;
    for (int b = 0; b < batch; ++b) {
        data.push_back(exp_pool(random_series(rng)));
        labels.push_back(b % model.class_count());
    }
    std::vector<const PooledSeries*> ptrs;
    for (const auto& p : data) ptrs.push_back(&p);
    for (auto _ : state) {
        AppClassifier grads = AppClassifier::zeros(model.classes, kDefaultHidden);
        benchmark::DoNotOptimize(app_loss_and_grads(model, ptrs, labels, &grads));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_AppBatchGradients)->Arg(1)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ReadPcap(benchmark::State& state) {
    std::mt19937_64 rng{3};
    std::vector<PacketRecord> records;
    while (records.size() < 10000) {
        auto more = fixture::random_records(rng, 64);
        records.insert(records.end(), more.begin(), more.end());
    }
    const auto bytes = write_pcap(records);
    for (auto _ : state) benchmark::DoNotOptimize(read_pcap(bytes));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ReadPcap)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0)), d = 15, k = 5;
    std::mt19937_64 rng{4};
    std::normal_distribution<double> noise{0.0, 1.0};
    FeatureMatrix x(n, d);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i % k;
        for (int f = 0; f < d; ++f) x(i, f) = noise(rng) + (f % k == i % k ? 2.0 : 0.0);
    }
    for (auto _ : state) benchmark::DoNotOptimize(forest_train(x, y, k, ForestConfig{}));
}
BENCHMARK(BM_ForestTrain)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_ClientHelloSni(benchmark::State& state) {
    const auto hello = fixture::client_hello("media.example-cdn.com");
    for (auto _ : state) benchmark::DoNotOptimize(tls::client_hello_sni(hello));
}
BENCHMARK(BM_ClientHelloSni);

}  // namespace

BENCHMARK_MAIN();
