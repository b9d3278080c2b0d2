#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "weavematch/dataset.hpp"
#include "weavematch/nn.hpp"

namespace weavematch {

// Topology of the embedding network: five inception stages (each followed by
// 2x2 max pooling), one plain 3x3 convolution, then three fully connected
// layers ending in a linear embedding. For 100 px instances the spatial track
// is 100 -> 50 -> 25 -> 12 -> 6 -> 3.
struct EncoderSpec {
    std::array<int, 5> inception_filters{8, 16, 32, 32, 64};
    int conv6_filters = 64;
    int fc1_units = 1024;
    int fc2_units = 256;
    int embedding_dim = 128;

    // Slimmed-down preset sized for CPU-only runs; same topology, fewer
    // filters per stage.
    static EncoderSpec compact();

    void validate() const;  // throws ConfigError
    int flatten_units() const { return conv6_filters * 3 * 3; }
    bool operator==(const EncoderSpec&) const = default;
};

class Encoder {
public:
    Encoder(const EncoderSpec& spec, uint64_t init_seed);

    const EncoderSpec& spec() const { return spec_; }

    struct TrainCache;

    // Batch of instances [B, 1, 100, 100] -> embeddings [B x D] row-major.
    // The train pass updates batch-norm running statistics and fills the
    // cache needed by backward(); the eval pass uses running statistics.
    void forward_train(const nn::Tensor& x, std::vector<float>& emb,
                       TrainCache& cache);
    void forward_eval(const nn::Tensor& x, std::vector<float>& emb) const;

    // Accumulates parameter gradients from embedding gradients [B x D].
    void backward(const TrainCache& cache, const std::vector<float>& demb);

    void zero_grads();
    std::vector<nn::Param*> params();
    size_t param_count() const;

    // Name -> array map of everything a checkpoint must carry (parameters
    // plus batch-norm running statistics).
    std::vector<std::pair<std::string, std::vector<float>*>> state_tensors();

    // Single-instance embedding (eval mode).
    std::vector<float> embed(const Instance& inst) const;

private:
    EncoderSpec spec_;
    std::array<nn::InceptionBlock, 5> inc_;
    nn::Conv2d conv6_;
    nn::Dense fc1_, fc2_, fc3_;

    void check_input(const nn::Tensor& x) const;
};

struct Encoder::TrainCache {
    std::array<nn::Tensor, 6> stage_in;  // input to each stage; [5] feeds conv6
    std::array<nn::InceptionBlock::Cache, 5> inc;
    std::array<std::vector<uint32_t>, 5> pool_idx;
    nn::Tensor conv6_out;            // post-ReLU; its buffer is the FC input
    std::vector<float> fc1_out, fc2_out;
    int batch = 0;
    nn::ConvWorkspace ws;
};

// Euclidean distance between two embeddings (double accumulation).
double pairwise_distance(const float* a, const float* b, int dim);
double pairwise_distance(const std::vector<float>& a,
                         const std::vector<float>& b);

// Embeddings for many instances, eval mode, processed in fixed-size chunks.
// Returns a [count x D] row-major block.
std::vector<float> embed_batch(const Encoder& enc,
                               const std::vector<const float*>& instances);

// Runs both sides of every pair through the same encoder (weights are
// shared by construction) and returns the per-pair embedding distances.
std::vector<double> siamese_forward(const Encoder& enc, const PairBatch& batch);

// --- checkpoints ---------------------------------------------------------

struct CheckpointMeta {
    uint32_t version = 1;
    uint64_t preprocess_hash = 0;
    uint64_t train_seed = 0;
    int epoch = 0;          // epoch the weights were taken from
    double val_loss = 0.0;  // its validation loss
};

// Binary container: magic, format version, JSON header (topology + metadata
// + tensor directory), float32 blobs. Non-finite values are refused on both
// write and read.
void save_checkpoint(const std::string& path, Encoder& enc,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
    std::unique_ptr<Encoder> encoder;
    CheckpointMeta meta;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace weavematch
