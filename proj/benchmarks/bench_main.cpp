#include <benchmark/benchmark.h>

#include "esgmix/adamw.hpp"
#include "esgmix/classifier.hpp"
#include "esgmix/evaluation.hpp"
#include "esgmix/fixtures.hpp"
#include "esgmix/labels.hpp"
#include "esgmix/random.hpp"

using namespace esgmix;

namespace {

RegistryPtr registry() {
    static const auto reg = std::make_shared<LabelRegistry>(LabelRegistry::builtin());
    return reg;
}

void BM_featurize(benchmark::State& state) {
    FeaturizerConfig cfg;
    cfg.ngram_order = static_cast<std::size_t>(state.range(0));
    const auto text = fixtures::synthetic_text(*registry(), "Carbon Emissions", Language::en, 1, 0.15);
    for (auto _ : state) benchmark::DoNotOptimize(featurize(text, cfg));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_featurize)->Arg(1)->Arg(2);

void BM_adamw_update(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    std::vector<double> params(n), grads(n);
    for (auto& g : grads) g = rng.normal();
    AdamWState s(n);
    const AdamWConfig cfg;
    for (auto _ : state) {
        adamw_update(params, grads, s, cfg);
        benchmark::ClobberMemory();
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_adamw_update)->Arg(1 << 12)->Arg(35 << 14);

std::pair<std::vector<GoldLabel>, std::vector<PredictionRecord>> votes(std::size_t n, std::size_t members) {
    const auto names = registry()->names();
    Rng rng(2);
    std::vector<GoldLabel> golds;
    std::vector<PredictionRecord> records(members);
    for (std::size_t m = 0; m < members; ++m) records[m].model_name = "m" + std::to_string(m);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = "d" + std::to_string(i);
        golds.push_back({id, names[rng.index(names.size())]});
        for (auto& r : records) {
            r.pairs.push_back({id, rng.uniform() < 0.7 ? golds.back().label : names[rng.index(names.size())], std::nullopt});
        }
    }
    return {golds, records};
}

void BM_weighted_f1(benchmark::State& state) {
    const auto [golds, records] = votes(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(weighted_f1(golds, records[0]));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * golds.size()));
}
BENCHMARK(BM_weighted_f1)->Arg(300)->Arg(10000);

void BM_hard_vote(benchmark::State& state) {
    const auto [golds, records] = votes(static_cast<std::size_t>(state.range(0)), 5);
    for (auto _ : state) benchmark::DoNotOptimize(hard_vote(records));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * golds.size()));
}
BENCHMARK(BM_hard_vote)->Arg(300)->Arg(10000);

} // namespace
BENCHMARK_MAIN();
