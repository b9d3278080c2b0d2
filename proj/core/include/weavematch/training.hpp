#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "weavematch/dataset.hpp"
#include "weavematch/image.hpp"
#include "weavematch/model.hpp"

namespace weavematch {

struct TrainConfig {
    double margin = 1.0;
    int batch_size = 256;  // pairs per SGD step
    double lr0 = 6e-5;
    double lr_decay_factor = 3.0;  // divide the rate by this ...
    int lr_decay_epochs = 25;      // ... every this many epochs
    double momentum = 0.9;
    int early_stop_patience = 20;  // epochs without improvement before stopping
    double p_same = 0.75;
    int samples_per_canvas = 80;   // samples cut from each training canvas
    int batches_per_epoch = 50;    // virtual epoch length
    int max_epochs = 200;
    int val_pairs = 1024;          // size of the frozen validation pair set
    bool freeze_updates = false;   // run the full loop without changing weights
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Stepwise decay: lr0 / factor^floor(epoch / decay_epochs).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

// Margin contrastive loss for one pair of embeddings. label 0 penalizes
// distance quadratically; label 1 penalizes closeness inside the margin.
template <typename T>
double contrastive_loss(const T* a, const T* b, int dim, int label,
                        double margin) {
    double d = 0.0;
    for (int i = 0; i < dim; ++i) {
        double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        d += t * t;
    }
    d = std::sqrt(d);
    if (label == 0) return d * d;
    double gap = margin - d;
    return gap > 0.0 ? gap * gap : 0.0;
}

double contrastive_loss(const std::vector<float>& a,
                        const std::vector<float>& b, int label, double margin);

// Loss plus analytic gradients with respect to both embeddings. At d = 0 the
// dissimilar-pair direction is undefined; the zero subgradient is used.
template <typename T>
double contrastive_loss_grad(const T* a, const T* b, int dim, int label,
                             double margin, T* ga, T* gb) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        d2 += t * t;
    }
    double d = std::sqrt(d2);
    double coef;  // dL/dd / d  (so grad_a = coef * (a - b))
    double loss;
    if (label == 0) {
        loss = d2;
        coef = 2.0;
    } else {
        double gap = margin - d;
        if (gap <= 0.0 || d < 1e-300) {
            loss = gap > 0.0 ? gap * gap : 0.0;
            coef = 0.0;
        } else {
            loss = gap * gap;
            coef = -2.0 * gap / d;
        }
    }
    for (int i = 0; i < dim; ++i) {
        double t = coef * (static_cast<double>(a[i]) - static_cast<double>(b[i]));
        ga[i] = static_cast<T>(t);
        gb[i] = static_cast<T>(-t);
    }
    return loss;
}

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();
    bool early_stopped = false;
    double wall_seconds = 0.0;
};

struct TrainResult {
    std::unique_ptr<Encoder> encoder;  // weights from the best epoch
    TrainReport report;
};

// Mean contrastive loss of a frozen pair set, evaluated with running
// batch-norm statistics.
double validate(const Encoder& enc, const PairBatch& pairs, double margin);

// SGD with momentum over seeded pair batches. Canvases must already be
// preprocessed to the working resolution and carry class labels. Validation
// canvases may be the training canvases themselves; the validation pool then
// uses an independent crop stream. Every random choice derives from
// cfg.seed, so a rerun reproduces the returned weights exactly. Throws
// NumericError if the loss turns non-finite.
TrainResult train(const std::vector<Image>& train_canvases,
                  const std::vector<Image>& val_canvases,
                  const EncoderSpec& spec, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

// epoch,train_loss,val_loss,lr rows; values printed with %.17g so parsing
// them back is lossless.
void write_report_csv(const TrainReport& report, const std::string& path);
TrainReport read_report_csv(const std::string& path);

}  // namespace weavematch
