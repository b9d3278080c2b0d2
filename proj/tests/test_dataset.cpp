#include <doctest.h>

#include <algorithm>
#include <map>
#include <vector>

#include "weavematch/dataset.hpp"
#include "weavematch/errors.hpp"
#include "weavematch/rng.hpp"

using namespace weavematch;

namespace {

Image labeled_canvas(int rows, int cols, int label, uint64_t seed,
                     const std::string& id) {
    Image img(rows, cols, 200.0);
    img.canvas_id = id;
    img.class_label = label;
    Rng rng(seed);
    for (auto& v : img.pix) v = static_cast<float>(rng.uniform());
    return img;
}

bool same_pixels(const std::vector<float>& a, const std::vector<float>& b) {
    return a == b;
}

}  // namespace

TEST_CASE("draw_samples stays inside the canvas and is reproducible") {
    Image img = labeled_canvas(320, 340, 1, 10, "cv");
    auto samples = draw_samples(img, 25, 99);
    REQUIRE(samples.size() == 25);
    for (const auto& s : samples) {
        CHECK(s.origin_row >= 0);
        CHECK(s.origin_col >= 0);
        CHECK(s.origin_row + kSampleSide <= img.rows);
        CHECK(s.origin_col + kSampleSide <= img.cols);
        CHECK(s.canvas_id == "cv");
        CHECK(s.class_label == 1);
        REQUIRE(s.pix.size() == size_t(kSampleSide) * kSampleSide);
        // spot-check the copied window
        CHECK(s.pix[0] == img.at(s.origin_row, s.origin_col));
        CHECK(s.pix.back() == img.at(s.origin_row + kSampleSide - 1,
                                     s.origin_col + kSampleSide - 1));
    }
    auto again = draw_samples(img, 25, 99);
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(samples[i].origin_row == again[i].origin_row);
        CHECK(samples[i].origin_col == again[i].origin_col);
    }

    Image narrow = labeled_canvas(299, 340, 1, 10, "cv");
    CHECK_THROWS_AS(draw_samples(narrow, 1, 0), DataError);
    Image unlabeled = labeled_canvas(320, 320, 1, 10, "cv");
    unlabeled.class_label.reset();
    CHECK_THROWS_AS(draw_samples(unlabeled, 1, 0), DataError);
}

TEST_CASE("expand_instances produces the five crops and their mirrors") {
    Image img = labeled_canvas(300, 300, 2, 11, "cv");
    Sample s;
    s.origin_row = 0;
    s.origin_col = 0;
    s.canvas_id = "cv";
    s.class_label = 2;
    s.pix = img.pix;

    auto inst = expand_instances(s);
    const int side = kInstanceSide;
    const int far = kSampleSide - side;
    const int mid = (kSampleSide - side) / 2;
    const std::pair<int, int> origin[5] = {
        {0, 0}, {0, far}, {far, 0}, {far, far}, {mid, mid}};

    for (int k = 0; k < 5; ++k) {
        const auto [r0, c0] = origin[k];
        REQUIRE(inst[k].pix.size() == size_t(side) * side);
        CHECK(inst[k].canvas_id == "cv");
        CHECK(inst[k].class_label == 2);
        float max_err = 0.0f;
        for (int r = 0; r < side; ++r)
            for (int c = 0; c < side; ++c)
                max_err = std::max(max_err,
                                   std::abs(inst[k].pix[r * side + c] -
                                            img.at(r0 + r, c0 + c)));
        CHECK(max_err == 0.0f);

        // element 5+k is the horizontal mirror of element k
        std::vector<float> mirrored = inst[k].pix;
        imgops::flip_cols(mirrored.data(), side, side);
        CHECK(same_pixels(inst[5 + k].pix, mirrored));
    }
}

TEST_CASE("augment applies seeded flips and rotations uniformly") {
    Image img = labeled_canvas(300, 300, 0, 12, "cv");
    Sample s;
    s.pix = img.pix;
    s.canvas_id = "cv";
    s.class_label = 0;
    Instance base = expand_instances(s)[0];

    // the four reachable variants
    const int side = kInstanceSide;
    std::vector<float> vflip = base.pix;
    imgops::flip_rows(vflip.data(), side, side);
    std::vector<float> rot(base.pix.size());
    imgops::rot90_cw(base.pix.data(), rot.data(), side, side);
    std::vector<float> vflip_rot(base.pix.size());
    imgops::rot90_cw(vflip.data(), vflip_rot.data(), side, side);

    std::map<int, int> counts;  // variant -> occurrences
    const int trials = 800;
    for (int t = 0; t < trials; ++t) {
        Instance a = augment(base, 1000 + t);
        REQUIRE(a.pix.size() == base.pix.size());
        if (same_pixels(a.pix, base.pix))
            ++counts[0];
        else if (same_pixels(a.pix, vflip))
            ++counts[1];
        else if (same_pixels(a.pix, rot))
            ++counts[2];
        else if (same_pixels(a.pix, vflip_rot))
            ++counts[3];
        else
            FAIL("augment produced a variant outside the expected group");

        // multiset of pixel values is untouched
        std::vector<float> sa = a.pix, sb = base.pix;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        REQUIRE(sa == sb);
    }
    for (int v = 0; v < 4; ++v)
        CHECK(counts[v] ==
              doctest::Approx(trials / 4.0).epsilon(0.25));  // ~200 each

    // determinism
    Instance x = augment(base, 77);
    Instance y = augment(base, 77);
    CHECK(same_pixels(x.pix, y.pix));
}

TEST_CASE("pools group instances by class and enforce pairability") {
    std::vector<Image> canvases = {
        labeled_canvas(310, 310, 4, 20, "a"),
        labeled_canvas(310, 310, 2, 21, "b"),
        labeled_canvas(310, 310, 4, 22, "c"),
    };
    InstancePools pools = build_pools(canvases, 3, 500);
    REQUIRE(pools.labels.size() == 2);
    CHECK(pools.labels[0] == 2);
    CHECK(pools.labels[1] == 4);
    CHECK(pools.pools[0].size() == 30);   // one canvas x 3 samples x 10
    CHECK(pools.pools[1].size() == 60);   // two canvases
    CHECK(pools.total() == 90);
    CHECK_NOTHROW(pools.validate_for_pairs());

    InstancePools single;
    single.labels = {1};
    single.pools = {pools.pools[0]};
    CHECK_THROWS_AS(single.validate_for_pairs(), ConfigError);

    InstancePools thin;
    thin.labels = {1, 2};
    thin.pools = {{pools.pools[0][0]}, pools.pools[1]};
    CHECK_THROWS_AS(thin.validate_for_pairs(), ConfigError);
}

TEST_CASE("pair batches honor p_same and label semantics") {
    std::vector<Image> canvases = {
        labeled_canvas(310, 310, 0, 30, "a"),
        labeled_canvas(310, 310, 1, 31, "b"),
        labeled_canvas(310, 310, 2, 32, "c"),
    };
    InstancePools pools = build_pools(canvases, 4, 501);

    PairBatch batch = make_pair_batch(pools, 0.75, 10000, 777, false);
    REQUIRE(batch.pairs.size() == 10000);
    CHECK(batch.same_fraction() >= 0.73);
    CHECK(batch.same_fraction() <= 0.77);

    for (const auto& p : batch.pairs) {
        if (p.label == 0) {
            REQUIRE(p.a.class_label == p.b.class_label);
            // distinct draws: same-class sides are never the same instance
            REQUIRE(!same_pixels(p.a.pix, p.b.pix));
        } else {
            REQUIRE(p.label == 1);
            REQUIRE(p.a.class_label != p.b.class_label);
        }
    }

    // extremes
    PairBatch all_same = make_pair_batch(pools, 1.0, 64, 778, false);
    CHECK(all_same.same_fraction() == 1.0);
    PairBatch all_diff = make_pair_batch(pools, 0.0, 64, 779, false);
    CHECK(all_diff.same_fraction() == 0.0);

    // determinism (with augmentation on)
    PairBatch b1 = make_pair_batch(pools, 0.5, 32, 780, true);
    PairBatch b2 = make_pair_batch(pools, 0.5, 32, 780, true);
    REQUIRE(b1.pairs.size() == b2.pairs.size());
    for (size_t i = 0; i < b1.pairs.size(); ++i) {
        CHECK(b1.pairs[i].label == b2.pairs[i].label);
        CHECK(same_pixels(b1.pairs[i].a.pix, b2.pairs[i].a.pix));
        CHECK(same_pixels(b1.pairs[i].b.pix, b2.pairs[i].b.pix));
    }
}
