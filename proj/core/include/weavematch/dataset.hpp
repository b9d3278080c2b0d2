#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "weavematch/image.hpp"

namespace weavematch {

// Crop geometry: square samples cut from a canvas, each expanded into square
// instances (four corners + center, and their horizontal mirrors).
inline constexpr int kSampleSide = 300;
inline constexpr int kInstanceSide = 100;

struct Sample {
    int origin_row = 0;
    int origin_col = 0;
    std::string canvas_id;
    int class_label = -1;
    std::vector<float> pix;  // kSampleSide x kSampleSide
};

struct Instance {
    std::string canvas_id;
    int class_label = -1;
    std::vector<float> pix;  // kInstanceSide x kInstanceSide
};

// m samples with uniformly random origins, drawn independently (with
// replacement). Requires both image sides >= kSampleSide and a class label.
std::vector<Sample> draw_samples(const Image& img, int m, uint64_t seed);

// Deterministic 10-fold expansion: corners TL,TR,BL,BR, center, then the
// horizontal mirror of each, in that order.
std::array<Instance, 10> expand_instances(const Sample& s);

// Random vertical flip (p=1/2) then random 90-degree rotation (p=1/2),
// decided by the seed. Square instances only.
Instance augment(const Instance& inst, uint64_t seed);

// Instances grouped by class, ready for pair sampling.
struct InstancePools {
    std::vector<int> labels;                      // distinct class labels
    std::vector<std::vector<Instance>> pools;     // parallel to labels

    size_t total() const;
    void validate_for_pairs() const;  // >=2 classes, >=2 instances per class
};

// Builds pools from preprocessed canvases: m samples per canvas, each
// expanded tenfold. Canvases must carry class labels.
InstancePools build_pools(const std::vector<Image>& canvases, int m,
                          uint64_t seed);

struct PairExample {
    Instance a, b;
    int label = 0;  // 0: same class, 1: different class
};

struct PairBatch {
    std::vector<PairExample> pairs;
    double same_fraction() const;
};

// Random pair batch. Each pair is independently "same class" with
// probability p_same; the two sides of a same-class pair are distinct
// instance draws. With augment_instances, both sides receive independent
// seeded augmentation.
PairBatch make_pair_batch(const InstancePools& pools, double p_same,
                          int batch_size, uint64_t seed,
                          bool augment_instances = true);

}  // namespace weavematch
