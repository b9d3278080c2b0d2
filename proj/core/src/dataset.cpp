#include "weavematch/dataset.hpp"

#include <algorithm>
#include <map>

#include "weavematch/errors.hpp"
#include "weavematch/rng.hpp"

namespace weavematch {

std::vector<Sample> draw_samples(const Image& img, int m, uint64_t seed) {
    if (m < 0) throw ConfigError("draw_samples: negative sample count");
    if (img.rows < kSampleSide || img.cols < kSampleSide)
        throw DataError("draw_samples: canvas " + img.canvas_id +
                        " smaller than the sample size");
    if (!img.class_label)
        throw DataError("draw_samples: canvas " + img.canvas_id +
                        " has no class label");

    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(m);
    for (int i = 0; i < m; ++i) {
        Sample s;
        s.origin_row =
            static_cast<int>(rng.uniform_int(img.rows - kSampleSide + 1));
        s.origin_col =
            static_cast<int>(rng.uniform_int(img.cols - kSampleSide + 1));
        s.canvas_id = img.canvas_id;
        s.class_label = *img.class_label;
        s.pix.resize(static_cast<size_t>(kSampleSide) * kSampleSide);
        for (int r = 0; r < kSampleSide; ++r) {
            const float* src = img.row(s.origin_row + r) + s.origin_col;
            std::copy(src, src + kSampleSide,
                      s.pix.data() + static_cast<size_t>(r) * kSampleSide);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

Instance cut_instance(const Sample& s, int r0, int c0) {
    Instance inst;
    inst.canvas_id = s.canvas_id;
    inst.class_label = s.class_label;
    inst.pix.resize(static_cast<size_t>(kInstanceSide) * kInstanceSide);
    for (int r = 0; r < kInstanceSide; ++r) {
        const float* src =
            s.pix.data() + static_cast<size_t>(r0 + r) * kSampleSide + c0;
        std::copy(src, src + kInstanceSide,
                  inst.pix.data() + static_cast<size_t>(r) * kInstanceSide);
    }
    return inst;
}

}  // namespace

std::array<Instance, 10> expand_instances(const Sample& s) {
    if (s.pix.size() != static_cast<size_t>(kSampleSide) * kSampleSide)
        throw DataError("expand_instances: sample has wrong size");
    constexpr int e = kSampleSide - kInstanceSide;          // far corner origin
    constexpr int c = (kSampleSide - kInstanceSide) / 2;    // centered origin

    std::array<Instance, 10> out{
        cut_instance(s, 0, 0), cut_instance(s, 0, e), cut_instance(s, e, 0),
        cut_instance(s, e, e), cut_instance(s, c, c),
        Instance{},            Instance{},            Instance{},
        Instance{},            Instance{}};
    for (int i = 0; i < 5; ++i) {
        out[5 + i] = out[i];
        imgops::flip_cols(out[5 + i].pix.data(), kInstanceSide, kInstanceSide);
    }
    return out;
}

Instance augment(const Instance& inst, uint64_t seed) {
    if (inst.pix.size() != static_cast<size_t>(kInstanceSide) * kInstanceSide)
        throw DataError("augment: instance has wrong size");
    Rng rng(seed);
    bool vflip = rng.bernoulli(0.5);
    bool rot = rng.bernoulli(0.5);

    Instance out = inst;
    if (vflip) imgops::flip_rows(out.pix.data(), kInstanceSide, kInstanceSide);
    if (rot) {
        std::vector<float> tmp(out.pix.size());
        imgops::rot90_cw(out.pix.data(), tmp.data(), kInstanceSide,
                         kInstanceSide);
        out.pix.swap(tmp);
    }
    return out;
}

size_t InstancePools::total() const {
    size_t n = 0;
    for (const auto& p : pools) n += p.size();
    return n;
}

void InstancePools::validate_for_pairs() const {
    if (labels.size() < 2)
        throw ConfigError("pair sampling needs at least two classes");
    for (size_t i = 0; i < pools.size(); ++i)
        if (pools[i].size() < 2)
            throw ConfigError("class " + std::to_string(labels[i]) +
                              " has fewer than two instances");
}

InstancePools build_pools(const std::vector<Image>& canvases, int m,
                          uint64_t seed) {
    std::map<int, std::vector<Instance>> by_class;
    for (const auto& img : canvases) {
        auto samples =
            draw_samples(img, m, derive_seed(seed, img.canvas_id));
        for (const auto& s : samples) {
            auto insts = expand_instances(s);
            auto& pool = by_class[s.class_label];
            for (auto& inst : insts) pool.push_back(std::move(inst));
        }
    }
    InstancePools out;
    for (auto& [label, pool] : by_class) {
        out.labels.push_back(label);
        out.pools.push_back(std::move(pool));
    }
    return out;
}

double PairBatch::same_fraction() const {
    if (pairs.empty()) return 0.0;
    size_t same = 0;
    for (const auto& p : pairs) same += (p.label == 0);
    return static_cast<double>(same) / pairs.size();
}

PairBatch make_pair_batch(const InstancePools& pools, double p_same,
                          int batch_size, uint64_t seed,
                          bool augment_instances) {
    if (batch_size <= 0) throw ConfigError("make_pair_batch: batch_size <= 0");
    if (!(p_same >= 0.0 && p_same <= 1.0))
        throw ConfigError("make_pair_batch: p_same out of [0,1]");
    pools.validate_for_pairs();

    Rng rng(seed);
    const size_t nc = pools.pools.size();

    PairBatch batch;
    batch.pairs.reserve(batch_size);
    for (int k = 0; k < batch_size; ++k) {
        PairExample ex;
        if (rng.bernoulli(p_same)) {
            ex.label = 0;
            const auto& pool = pools.pools[rng.uniform_int(nc)];
            // two distinct draws: pick j uniformly among the others
            size_t i = rng.uniform_int(pool.size());
            size_t j = rng.uniform_int(pool.size() - 1);
            if (j >= i) ++j;
            ex.a = pool[i];
            ex.b = pool[j];
        } else {
            ex.label = 1;
            size_t ca = rng.uniform_int(nc);
            size_t cb = rng.uniform_int(nc - 1);
            if (cb >= ca) ++cb;
            const auto& pa = pools.pools[ca];
            const auto& pb = pools.pools[cb];
            ex.a = pa[rng.uniform_int(pa.size())];
            ex.b = pb[rng.uniform_int(pb.size())];
        }
        if (augment_instances) {
            ex.a = augment(ex.a, derive_seed(seed, "aug-a", k));
            ex.b = augment(ex.b, derive_seed(seed, "aug-b", k));
        }
        batch.pairs.push_back(std::move(ex));
    }
    return batch;
}

}  // namespace weavematch
