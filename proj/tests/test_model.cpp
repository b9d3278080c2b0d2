#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <vector>

#include "weavematch/errors.hpp"
#include "weavematch/model.hpp"
#include "weavematch/rng.hpp"

using namespace weavematch;
namespace fs = std::filesystem;

namespace {

// A deliberately tiny topology so whole-network probes stay cheap.
EncoderSpec tiny_spec() {
    EncoderSpec s;
    s.inception_filters = {1, 1, 1, 1, 1};
    s.conv6_filters = 2;
    s.fc1_units = 8;
    s.fc2_units = 8;
    s.embedding_dim = 4;
    return s;
}

Instance random_instance(uint64_t seed) {
    Instance inst;
    inst.canvas_id = "t";
    inst.class_label = 0;
    inst.pix.resize(size_t(kInstanceSide) * kInstanceSide);
    Rng rng(seed);
    for (auto& v : inst.pix) v = static_cast<float>(rng.uniform());
    return inst;
}

nn::Tensor batch_of(const std::vector<Instance>& insts) {
    nn::Tensor x;
    x.resize(static_cast<int>(insts.size()), 1, kInstanceSide, kInstanceSide);
    for (size_t i = 0; i < insts.size(); ++i)
        std::copy(insts[i].pix.begin(), insts[i].pix.end(),
                  x.item(static_cast<int>(i)));
    return x;
}

}  // namespace

TEST_CASE("encoder spec validation and derived sizes") {
    CHECK_NOTHROW(EncoderSpec{}.validate());
    CHECK_NOTHROW(EncoderSpec::compact().validate());
    CHECK(EncoderSpec{}.flatten_units() == 64 * 9);
    CHECK(EncoderSpec::compact().flatten_units() == 32 * 9);

    EncoderSpec bad;
    bad.embedding_dim = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = EncoderSpec{};
    bad.inception_filters[2] = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parameter counts match the architecture arithmetic") {
    // Per inception stage with n filters on in_c channels:
    //   convs (bias-free, k = 3/5/7): n*in_c*(9+25+49) = 83*n*in_c
    //   batch norm scale+shift per branch: 6n
    // Plain conv6 (k=3, bias): out*in*9 + out. Dense: in*out + out.
    Encoder full(EncoderSpec{}, 1);
    CHECK(full.param_count() == 1922664);

    Encoder compact(EncoderSpec::compact(), 1);
    CHECK(compact.param_count() == 663250);
}

TEST_CASE("embeddings are finite, sized and deterministic") {
    Encoder enc(tiny_spec(), 42);
    Instance inst = random_instance(7);
    std::vector<float> e1 = enc.embed(inst);
    std::vector<float> e2 = enc.embed(inst);
    REQUIRE(e1.size() == 4);
    CHECK(e1 == e2);
    for (float v : e1) CHECK(std::isfinite(v));

    // different initialization seed, different function
    Encoder other(tiny_spec(), 43);
    CHECK(other.embed(inst) != e1);
}

TEST_CASE("check_input rejects wrong shapes") {
    Encoder enc(tiny_spec(), 1);
    nn::Tensor bad;
    bad.resize(1, 1, 50, 100);
    std::vector<float> emb;
    CHECK_THROWS_AS(enc.forward_eval(bad, emb), ConfigError);
    bad.resize(1, 3, 100, 100);
    CHECK_THROWS_AS(enc.forward_eval(bad, emb), ConfigError);
}

TEST_CASE("batch embedding agrees with single-instance embedding") {
    Encoder enc(tiny_spec(), 5);
    std::vector<Instance> insts;
    for (int i = 0; i < 7; ++i) insts.push_back(random_instance(100 + i));
    std::vector<const float*> ptrs;
    for (const auto& in : insts) ptrs.push_back(in.pix.data());

    std::vector<float> block = embed_batch(enc, ptrs);
    REQUIRE(block.size() == insts.size() * 4);
    for (size_t i = 0; i < insts.size(); ++i) {
        std::vector<float> single = enc.embed(insts[i]);
        for (int d = 0; d < 4; ++d)
            CHECK(block[i * 4 + d] ==
                  doctest::Approx(single[d]).epsilon(1e-6));
    }
}

TEST_CASE("pairwise distance is a plain euclidean norm") {
    std::vector<float> a{1.0f, 2.0f, 2.0f};
    std::vector<float> b{1.0f, 0.0f, 0.0f};
    CHECK(pairwise_distance(a, b) == doctest::Approx(std::sqrt(8.0)));
    CHECK(pairwise_distance(a, a) == 0.0);
}

TEST_CASE("siamese forward ties the weights by construction") {
    Encoder enc(tiny_spec(), 9);
    PairBatch batch;
    Instance x = random_instance(1);
    Instance y = random_instance(2);
    batch.pairs.push_back({x, x, 0});  // identical sides
    batch.pairs.push_back({x, y, 1});
    batch.pairs.push_back({y, x, 1});

    std::vector<double> d = siamese_forward(enc, batch);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == d[2]);  // symmetric regardless of pair order
    CHECK(d[1] >= 0.0);

    // perturbing the shared parameters moves both branches together:
    // identical inputs keep distance zero no matter the weights
    for (nn::Param* p : enc.params())
        for (auto& w : p->w) w += 0.01f;
    std::vector<double> d2 = siamese_forward(enc, batch);
    CHECK(d2[0] == 0.0);
    CHECK(d2[1] != doctest::Approx(d[1]).epsilon(1e-12));
}

TEST_CASE("training backward matches finite differences through the net") {
    Encoder enc(tiny_spec(), 77);
    std::vector<Instance> insts = {random_instance(11), random_instance(12)};
    nn::Tensor x = batch_of(insts);

    Rng prng(13);
    std::vector<float> proj(2 * 4);
    for (auto& v : proj) v = static_cast<float>(prng.uniform() * 2.0 - 1.0);

    auto loss = [&]() {
        // fresh encoder copy so running stats cannot drift between probes
        Encoder probe = enc;
        Encoder::TrainCache cache;
        std::vector<float> emb;
        probe.forward_train(x, emb, cache);
        double s = 0.0;
        for (size_t i = 0; i < emb.size(); ++i) s += double(emb[i]) * proj[i];
        return s;
    };

    Encoder work = enc;
    Encoder::TrainCache cache;
    std::vector<float> emb;
    work.forward_train(x, emb, cache);
    work.zero_grads();
    work.backward(cache, proj);

    std::vector<nn::Param*> probe_params = enc.params();
    std::vector<nn::Param*> work_params = work.params();
    REQUIRE(probe_params.size() == work_params.size());

    // A weight in the first stages feeds ~10^4 activations, so at any usable
    // step some ReLU or pool argmax flips inside the probe interval and the
    // float forward pass drowns smaller steps. Late layers are nearly kink
    // free and get a tight check; the early stages (whose backward math is
    // covered layer by layer elsewhere) get a loose check that still catches
    // mis-wired plumbing, which corrupts gradients by far more than a kink.
    const double hh = 2e-3;
    const size_t late_from = 27;  // stage 4 onward, then conv6 and the FCs
    int late_checked = 0, late_ok = 0, early_checked = 0, early_ok = 0;
    for (size_t pi = 0; pi < probe_params.size(); ++pi) {
        const bool late = pi >= late_from;
        const double tol = late ? 6e-3 : 0.15;
        auto& pw = probe_params[pi]->w;
        size_t stride = std::max<size_t>(1, pw.size() / 6);
        for (size_t i = 0; i < pw.size(); i += stride) {
            const float keep = pw[i];
            pw[i] = static_cast<float>(keep + hh);
            double up = loss();
            pw[i] = static_cast<float>(keep - hh);
            double down = loss();
            pw[i] = keep;
            double numeric = (up - down) / (2.0 * hh);
            double analytic = work_params[pi]->g[i];
            bool close = std::abs(analytic - numeric) <=
                         tol * (1.0 + std::abs(analytic) + std::abs(numeric));
            (late ? late_ok : early_ok) += close;
            ++(late ? late_checked : early_checked);
        }
    }
    CHECK(late_checked >= 40);
    CHECK(late_ok >= late_checked - 1);
    CHECK(early_checked >= 60);
    CHECK(early_ok >= early_checked * 9 / 10);
}

TEST_CASE("checkpoints round-trip weights, stats and metadata") {
    const fs::path path =
        fs::temp_directory_path() / "weavematch_ckpt_test.wmck";
    Encoder enc(tiny_spec(), 21);
    Instance probe = random_instance(3);

    // move the running statistics off their initial values first
    nn::Tensor x = batch_of({probe, random_instance(4)});
    Encoder::TrainCache cache;
    std::vector<float> emb;
    enc.forward_train(x, emb, cache);

    CheckpointMeta meta;
    meta.preprocess_hash = 0xabcdef;
    meta.train_seed = 31337;
    meta.epoch = 17;
    meta.val_loss = 0.125;
    save_checkpoint(path.string(), enc, meta);

    LoadedCheckpoint lc = load_checkpoint(path.string());
    CHECK(lc.meta.preprocess_hash == 0xabcdef);
    CHECK(lc.meta.train_seed == 31337);
    CHECK(lc.meta.epoch == 17);
    CHECK(lc.meta.val_loss == 0.125);
    CHECK(lc.encoder->spec() == enc.spec());
    CHECK(lc.encoder->embed(probe) == enc.embed(probe));
    fs::remove(path);
}

TEST_CASE("checkpoint loader rejects corruption") {
    const fs::path dir = fs::temp_directory_path();
    const fs::path good = dir / "weavematch_ckpt_good.wmck";
    Encoder enc(tiny_spec(), 22);
    save_checkpoint(good.string(), enc, CheckpointMeta{});

    // not a checkpoint at all
    const fs::path junk = dir / "weavematch_ckpt_junk.wmck";
    {
        std::ofstream out(junk, std::ios::binary);
        out << "PNG not really";
    }
    CHECK_THROWS_AS(load_checkpoint(junk.string()), DataError);
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.wmck").string()), IoError);

    // flip one byte inside the tensor blob region
    std::vector<char> bytes;
    {
        std::ifstream in(good, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>{});
    }
    // corrupt the version field (bytes 4..7 after the magic)
    const fs::path tampered = dir / "weavematch_ckpt_tampered.wmck";
    bytes[4] = static_cast<char>(0x7f);
    {
        std::ofstream out(tampered, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(tampered.string()), DataError);

    fs::remove(good);
    fs::remove(junk);
    fs::remove(tampered);
}

TEST_CASE("non-finite weights cannot be saved") {
    const fs::path path = fs::temp_directory_path() / "weavematch_ckpt_nan.wmck";
    Encoder enc(tiny_spec(), 23);
    enc.params()[0]->w[0] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(save_checkpoint(path.string(), enc, CheckpointMeta{}),
                    NumericError);
    fs::remove(path);
}
