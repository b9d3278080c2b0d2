#include "weavematch/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "weavematch/errors.hpp"

using nlohmann::json;

namespace weavematch {

EncoderSpec EncoderSpec::compact() {
    EncoderSpec s;
    s.inception_filters = {2, 4, 8, 8, 16};
    s.conv6_filters = 32;
    return s;
}

void EncoderSpec::validate() const {
    for (int f : inception_filters)
        if (f < 1) throw ConfigError("EncoderSpec: inception filters must be >= 1");
    if (conv6_filters < 1 || fc1_units < 1 || fc2_units < 1)
        throw ConfigError("EncoderSpec: layer widths must be >= 1");
    if (embedding_dim < 1)
        throw ConfigError("EncoderSpec: embedding_dim must be >= 1");
}

Encoder::Encoder(const EncoderSpec& spec, uint64_t init_seed) : spec_(spec) {
    spec_.validate();
    Rng rng(derive_seed(init_seed, "encoder-init"));
    int in_c = 1;
    for (int s = 0; s < 5; ++s) {
        inc_[s].init("inc" + std::to_string(s + 1), in_c,
                     spec_.inception_filters[s], rng);
        in_c = 3 * spec_.inception_filters[s];
    }
    conv6_.init("conv6", in_c, spec_.conv6_filters, 3, true, rng);
    const int flat = spec_.flatten_units();
    fc1_.init("fc1", flat, spec_.fc1_units, std::sqrt(2.0 / flat), rng);
    fc2_.init("fc2", spec_.fc1_units, spec_.fc2_units,
              std::sqrt(2.0 / spec_.fc1_units), rng);
    // final layer is linear; Xavier keeps embedding scales moderate
    fc3_.init("fc3", spec_.fc2_units, spec_.embedding_dim,
              std::sqrt(1.0 / spec_.fc2_units), rng);
}

void Encoder::check_input(const nn::Tensor& x) const {
    if (x.n < 1 || x.c != 1 || x.h != kInstanceSide || x.w != kInstanceSide)
        throw ConfigError("Encoder: expected [N,1," +
                          std::to_string(kInstanceSide) + "," +
                          std::to_string(kInstanceSide) + "] input");
}

void Encoder::forward_train(const nn::Tensor& x, std::vector<float>& emb,
                            TrainCache& cache) {
    check_input(x);
    cache.batch = x.n;
    cache.stage_in[0] = x;

    nn::Tensor concat;
    for (int s = 0; s < 5; ++s) {
        inc_[s].forward_train(cache.stage_in[s], concat, cache.inc[s], cache.ws);
        nn::MaxPool2::forward(concat, cache.stage_in[s + 1], cache.pool_idx[s]);
    }

    const nn::Tensor& c6in = cache.stage_in[5];
    cache.conv6_out.resize(x.n, spec_.conv6_filters, c6in.h, c6in.w);
    for (int i = 0; i < x.n; ++i)
        conv6_.forward(c6in.item(i), c6in.h, c6in.w, cache.conv6_out.item(i),
                       cache.ws);
    nn::relu_forward(cache.conv6_out.v.data(), cache.conv6_out.v.size());

    // conv6_out is [B][C][3][3] contiguous, which is exactly the flattened
    // FC input block.
    cache.fc1_out.resize(static_cast<size_t>(x.n) * spec_.fc1_units);
    fc1_.forward(cache.conv6_out.v.data(), x.n, cache.fc1_out.data());
    nn::relu_forward(cache.fc1_out.data(), cache.fc1_out.size());

    cache.fc2_out.resize(static_cast<size_t>(x.n) * spec_.fc2_units);
    fc2_.forward(cache.fc1_out.data(), x.n, cache.fc2_out.data());
    nn::relu_forward(cache.fc2_out.data(), cache.fc2_out.size());

    emb.resize(static_cast<size_t>(x.n) * spec_.embedding_dim);
    fc3_.forward(cache.fc2_out.data(), x.n, emb.data());
}

void Encoder::forward_eval(const nn::Tensor& x, std::vector<float>& emb) const {
    check_input(x);
    nn::ConvWorkspace ws;
    nn::Tensor cur = x, concat, pooled;
    std::vector<uint32_t> idx;
    for (int s = 0; s < 5; ++s) {
        inc_[s].forward_eval(cur, concat, ws);
        nn::MaxPool2::forward(concat, pooled, idx);
        cur = pooled;
    }
    nn::Tensor c6;
    c6.resize(x.n, spec_.conv6_filters, cur.h, cur.w);
    for (int i = 0; i < x.n; ++i)
        conv6_.forward(cur.item(i), cur.h, cur.w, c6.item(i), ws);
    nn::relu_forward(c6.v.data(), c6.v.size());

    // The dense stages run item by item through the same scratch buffers.
    // A whole-batch product would round each row slightly differently
    // depending on its position, and identical inputs must embed
    // identically no matter how they are batched.
    std::vector<float> fin(c6.item_size());
    std::vector<float> f1(spec_.fc1_units), f2(spec_.fc2_units);
    std::vector<float> out(spec_.embedding_dim);
    emb.resize(static_cast<size_t>(x.n) * spec_.embedding_dim);
    for (int i = 0; i < x.n; ++i) {
        std::copy(c6.item(i), c6.item(i) + fin.size(), fin.begin());
        fc1_.forward(fin.data(), 1, f1.data());
        nn::relu_forward(f1.data(), f1.size());
        fc2_.forward(f1.data(), 1, f2.data());
        nn::relu_forward(f2.data(), f2.size());
        fc3_.forward(f2.data(), 1, out.data());
        std::copy(out.begin(), out.end(),
                  emb.begin() + static_cast<size_t>(i) * spec_.embedding_dim);
    }
}

void Encoder::backward(const TrainCache& cache, const std::vector<float>& demb) {
    const int B = cache.batch;
    if (demb.size() != static_cast<size_t>(B) * spec_.embedding_dim)
        throw ConfigError("Encoder::backward: gradient size mismatch");

    std::vector<float> g2(static_cast<size_t>(B) * spec_.fc2_units);
    fc3_.backward(cache.fc2_out.data(), B, demb.data(), g2.data());
    nn::relu_backward(cache.fc2_out.data(), g2.data(), g2.size());

    std::vector<float> g1(static_cast<size_t>(B) * spec_.fc1_units);
    fc2_.backward(cache.fc1_out.data(), B, g2.data(), g1.data());
    nn::relu_backward(cache.fc1_out.data(), g1.data(), g1.size());

    nn::Tensor gconv6;
    gconv6.resize(B, spec_.conv6_filters, cache.stage_in[5].h,
                  cache.stage_in[5].w);
    fc1_.backward(cache.conv6_out.v.data(), B, g1.data(), gconv6.v.data());
    nn::relu_backward(cache.conv6_out.v.data(), gconv6.v.data(),
                      gconv6.v.size());

    // mutable workspace: backward reuses the cache's scratch buffers
    auto& ws = const_cast<TrainCache&>(cache).ws;

    nn::Tensor gstage;
    gstage.resize(B, cache.stage_in[5].c, cache.stage_in[5].h,
                  cache.stage_in[5].w);
    for (int i = 0; i < B; ++i)
        conv6_.backward(cache.stage_in[5].item(i), cache.stage_in[5].h,
                        cache.stage_in[5].w, gconv6.item(i), gstage.item(i),
                        ws);

    for (int s = 4; s >= 0; --s) {
        nn::Tensor gconcat;
        gconcat.resize(B, cache.inc[s].concat.c, cache.inc[s].concat.h,
                       cache.inc[s].concat.w);
        nn::MaxPool2::backward(gstage, cache.pool_idx[s], gconcat);

        if (s > 0) {
            nn::Tensor gx;
            gx.resize(B, cache.stage_in[s].c, cache.stage_in[s].h,
                      cache.stage_in[s].w);
            inc_[s].backward(cache.stage_in[s], cache.inc[s], gconcat, &gx, ws);
            gstage = std::move(gx);
        } else {
            inc_[0].backward(cache.stage_in[0], cache.inc[0], gconcat, nullptr,
                             ws);
        }
    }
}

void Encoder::zero_grads() {
    for (auto* p : params()) std::fill(p->g.begin(), p->g.end(), 0.0f);
}

std::vector<nn::Param*> Encoder::params() {
    std::vector<nn::Param*> out;
    for (auto& blk : inc_)
        for (auto* p : blk.params()) out.push_back(p);
    out.push_back(&conv6_.w);
    out.push_back(&conv6_.b);
    for (nn::Dense* d : {&fc1_, &fc2_, &fc3_}) {
        out.push_back(&d->w);
        out.push_back(&d->b);
    }
    return out;
}

size_t Encoder::param_count() const {
    size_t n = 0;
    for (auto* p : const_cast<Encoder*>(this)->params()) n += p->w.size();
    return n;
}

std::vector<std::pair<std::string, std::vector<float>*>>
Encoder::state_tensors() {
    std::vector<std::pair<std::string, std::vector<float>*>> out;
    for (auto* p : params()) out.emplace_back(p->name, &p->w);
    for (int s = 0; s < 5; ++s) {
        auto& blk = inc_[s];
        for (auto [suffix, bn] :
             {std::pair{".bn3", &blk.bn3}, {".bn5", &blk.bn5}, {".bn7", &blk.bn7}}) {
            std::string base = "inc" + std::to_string(s + 1) + suffix;
            out.emplace_back(base + ".run_mean", &bn->run_mean);
            out.emplace_back(base + ".run_var", &bn->run_var);
        }
    }
    return out;
}

std::vector<float> Encoder::embed(const Instance& inst) const {
    if (inst.pix.size() != static_cast<size_t>(kInstanceSide) * kInstanceSide)
        throw DataError("embed: instance has wrong size");
    nn::Tensor x;
    x.resize(1, 1, kInstanceSide, kInstanceSide);
    std::copy(inst.pix.begin(), inst.pix.end(), x.v.begin());
    std::vector<float> emb;
    forward_eval(x, emb);
    return emb;
}

double pairwise_distance(const float* a, const float* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double pairwise_distance(const std::vector<float>& a,
                         const std::vector<float>& b) {
    if (a.size() != b.size())
        throw ConfigError("pairwise_distance: dimension mismatch");
    return pairwise_distance(a.data(), b.data(), static_cast<int>(a.size()));
}

std::vector<float> embed_batch(const Encoder& enc,
                               const std::vector<const float*>& instances) {
    constexpr int kChunk = 128;
    const int d = enc.spec().embedding_dim;
    const size_t plane = static_cast<size_t>(kInstanceSide) * kInstanceSide;
    std::vector<float> out(instances.size() * d);

    nn::Tensor x;
    std::vector<float> emb;
    for (size_t off = 0; off < instances.size(); off += kChunk) {
        const int b = static_cast<int>(
            std::min<size_t>(kChunk, instances.size() - off));
        x.resize(b, 1, kInstanceSide, kInstanceSide);
        for (int i = 0; i < b; ++i)
            std::copy(instances[off + i], instances[off + i] + plane, x.item(i));
        enc.forward_eval(x, emb);
        std::copy(emb.begin(), emb.end(), out.begin() + off * d);
    }
    return out;
}

std::vector<double> siamese_forward(const Encoder& enc, const PairBatch& batch) {
    std::vector<const float*> items;
    items.reserve(batch.pairs.size() * 2);
    for (const auto& p : batch.pairs) items.push_back(p.a.pix.data());
    for (const auto& p : batch.pairs) items.push_back(p.b.pix.data());
    std::vector<float> emb = embed_batch(enc, items);

    const int d = enc.spec().embedding_dim;
    const size_t n = batch.pairs.size();
    std::vector<double> dist(n);
    for (size_t i = 0; i < n; ++i)
        dist[i] = pairwise_distance(emb.data() + i * d,
                                    emb.data() + (n + i) * d, d);
    return dist;
}

// --- checkpoint container -------------------------------------------------

namespace {

constexpr char kMagic[4] = {'W', 'M', 'C', 'K'};
constexpr uint32_t kVersion = 1;

json spec_to_json(const EncoderSpec& s) {
    return json{{"inception_filters", s.inception_filters},
                {"conv6_filters", s.conv6_filters},
                {"fc1_units", s.fc1_units},
                {"fc2_units", s.fc2_units},
                {"embedding_dim", s.embedding_dim}};
}

EncoderSpec spec_from_json(const json& j) {
    EncoderSpec s;
    auto filters = j.at("inception_filters").get<std::vector<int>>();
    if (filters.size() != 5)
        throw DataError("checkpoint: inception_filters must have 5 entries");
    std::copy(filters.begin(), filters.end(), s.inception_filters.begin());
    s.conv6_filters = j.at("conv6_filters").get<int>();
    s.fc1_units = j.at("fc1_units").get<int>();
    s.fc2_units = j.at("fc2_units").get<int>();
    s.embedding_dim = j.at("embedding_dim").get<int>();
    return s;
}

void ensure_finite(const std::vector<float>& v, const std::string& name) {
    for (float x : v)
        if (!std::isfinite(x))
            throw NumericError("checkpoint tensor '" + name +
                               "' contains non-finite values");
}

}  // namespace

void save_checkpoint(const std::string& path, Encoder& enc,
                     const CheckpointMeta& meta) {
    auto tensors = enc.state_tensors();

    json dir = json::array();
    uint64_t offset = 0;
    for (auto& [name, vec] : tensors) {
        ensure_finite(*vec, name);
        dir.push_back({{"name", name}, {"count", vec->size()}, {"offset", offset}});
        offset += vec->size() * sizeof(float);
    }
    json header{{"spec", spec_to_json(enc.spec())},
                {"meta",
                 {{"preprocess_hash", meta.preprocess_hash},
                  {"train_seed", meta.train_seed},
                  {"epoch", meta.epoch},
                  {"val_loss", meta.val_loss}}},
                {"tensors", dir}};
    std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kMagic, 4);
    uint32_t ver = kVersion;
    out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (auto& [name, vec] : tensors)
        out.write(reinterpret_cast<const char*>(vec->data()),
                  static_cast<std::streamsize>(vec->size() * sizeof(float)));
    if (!out) throw IoError("checkpoint write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw DataError("not a checkpoint file: " + path);
    uint32_t ver = 0;
    in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    if (ver != kVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(ver));
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen > (1u << 20))
        throw DataError("corrupt checkpoint header: " + path);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));

    json header;
    try {
        header = json::parse(hs);
    } catch (const json::exception& e) {
        throw DataError("corrupt checkpoint header: " + std::string(e.what()));
    }

    LoadedCheckpoint lc;
    lc.encoder = std::make_unique<Encoder>(spec_from_json(header.at("spec")), 0);
    const auto& m = header.at("meta");
    lc.meta.version = ver;
    lc.meta.preprocess_hash = m.at("preprocess_hash").get<uint64_t>();
    lc.meta.train_seed = m.at("train_seed").get<uint64_t>();
    lc.meta.epoch = m.at("epoch").get<int>();
    lc.meta.val_loss = m.at("val_loss").get<double>();

    auto tensors = lc.encoder->state_tensors();
    const auto& dir = header.at("tensors");
    if (dir.size() != tensors.size())
        throw DataError("checkpoint tensor directory mismatch");
    for (size_t i = 0; i < tensors.size(); ++i) {
        const auto& entry = dir[i];
        if (entry.at("name").get<std::string>() != tensors[i].first)
            throw DataError("checkpoint tensor order mismatch at '" +
                            tensors[i].first + "'");
        if (entry.at("count").get<size_t>() != tensors[i].second->size())
            throw DataError("checkpoint tensor size mismatch at '" +
                            tensors[i].first + "'");
        in.read(reinterpret_cast<char*>(tensors[i].second->data()),
                static_cast<std::streamsize>(tensors[i].second->size() *
                                             sizeof(float)));
        if (!in) throw DataError("checkpoint truncated at '" +
                                 tensors[i].first + "'");
        ensure_finite(*tensors[i].second, tensors[i].first);
    }
    return lc;
}

}  // namespace weavematch
