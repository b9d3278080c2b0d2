#include <benchmark/benchmark.h>

#include "weavematch/dataset.hpp"
#include "weavematch/model.hpp"
#include "weavematch/preprocess.hpp"
#include "weavematch/rng.hpp"
#include "weavematch/similarity.hpp"
#include "weavematch/synthweave.hpp"

using namespace weavematch;

namespace {

WeaveSpec bench_spec() {
    WeaveSpec w;
    w.warp_density = 12.0;
    w.weft_density = 14.0;
    w.density_jitter = 0.02;
    w.noise_level = 0.05;
    w.seed = 7;
    return w;
}

void BM_GenerateWeave(benchmark::State& state) {
    const double side = static_cast<double>(state.range(0));
    for (auto _ : state) {
        Image img = generate_weave(bench_spec(), side, side);
        benchmark::DoNotOptimize(img.pix.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GenerateWeave)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_EncoderEmbed(benchmark::State& state) {
    const bool compact = state.range(0) != 0;
    Encoder enc(compact ? EncoderSpec::compact() : EncoderSpec{}, 11);
    Rng rng(13);
    std::vector<Instance> batch(16);
    std::vector<const float*> ptrs;
    for (auto& inst : batch) {
        inst.pix.resize(kInstanceSide * kInstanceSide);
        for (auto& v : inst.pix) v = static_cast<float>(rng.uniform());
        ptrs.push_back(inst.pix.data());
    }
    for (auto _ : state) {
        auto emb = embed_batch(enc, ptrs);
        benchmark::DoNotOptimize(emb.data());
    }
    state.SetItemsProcessed(state.iterations() * batch.size());
}
BENCHMARK(BM_EncoderEmbed)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_Jsd(benchmark::State& state) {
    SimilarityConfig cfg;
    Rng rng(17);
    std::vector<double> oa(cfg.pair_count), ob(cfg.pair_count);
    for (auto& v : oa) v = rng.uniform() * cfg.support;
    for (auto& v : ob) v = rng.uniform() * cfg.support;
    OutcomePdf p = estimate_pdf(oa, cfg.bins, cfg.support);
    OutcomePdf q = estimate_pdf(ob, cfg.bins, cfg.support);
    for (auto _ : state) {
        double j = jsd(p, q);
        benchmark::DoNotOptimize(j);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Jsd);

void BM_LocalNormalize(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    Image img;
    img.rows = img.cols = side;
    img.resolution = 200.0;
    img.pix.resize(static_cast<size_t>(side) * side);
    Rng rng(23);
    for (auto& v : img.pix) v = static_cast<float>(rng.uniform());
    for (auto _ : state) {
        Image out = local_normalize(img, 0.5);
        benchmark::DoNotOptimize(out.pix.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_LocalNormalize)->Arg(400)->Arg(600)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
