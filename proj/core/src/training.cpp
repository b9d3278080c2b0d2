#include "weavematch/training.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "weavematch/errors.hpp"
#include "weavematch/log.hpp"
#include "weavematch/rng.hpp"

namespace weavematch {

void TrainConfig::validate() const {
    if (!(margin > 0.0)) throw ConfigError("train: margin must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size < 1");
    if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be positive");
    if (!(lr_decay_factor >= 1.0))
        throw ConfigError("train: lr_decay_factor must be >= 1");
    if (lr_decay_epochs < 1) throw ConfigError("train: lr_decay_epochs < 1");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("train: momentum out of [0,1)");
    if (early_stop_patience < 1) throw ConfigError("train: patience < 1");
    // both pair kinds must appear, or the loss degenerates
    if (!(p_same > 0.0 && p_same < 1.0))
        throw ConfigError("train: p_same out of (0,1)");
    if (samples_per_canvas < 1) throw ConfigError("train: samples_per_canvas < 1");
    if (batches_per_epoch < 1) throw ConfigError("train: batches_per_epoch < 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs < 1");
    if (val_pairs < 1) throw ConfigError("train: val_pairs < 1");
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    if (epoch < 0) throw ConfigError("lr_at_epoch: negative epoch");
    return cfg.lr0 /
           std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_epochs);
}

double contrastive_loss(const std::vector<float>& a,
                        const std::vector<float>& b, int label, double margin) {
    if (a.size() != b.size())
        throw ConfigError("contrastive_loss: dimension mismatch");
    return contrastive_loss(a.data(), b.data(), static_cast<int>(a.size()),
                            label, margin);
}

double validate(const Encoder& enc, const PairBatch& pairs, double margin) {
    if (pairs.pairs.empty()) throw ConfigError("validate: empty pair set");
    std::vector<double> dist = siamese_forward(enc, pairs);
    double total = 0.0;
    for (size_t i = 0; i < dist.size(); ++i) {
        double d = dist[i];
        if (pairs.pairs[i].label == 0) {
            total += d * d;
        } else {
            double gap = margin - d;
            if (gap > 0.0) total += gap * gap;
        }
    }
    return total / static_cast<double>(dist.size());
}

namespace {

void fill_pair_tensor(const PairBatch& batch, nn::Tensor& x) {
    const int b = static_cast<int>(batch.pairs.size());
    const size_t plane = static_cast<size_t>(kInstanceSide) * kInstanceSide;
    x.resize(2 * b, 1, kInstanceSide, kInstanceSide);
    for (int i = 0; i < b; ++i) {
        std::copy(batch.pairs[i].a.pix.begin(), batch.pairs[i].a.pix.end(),
                  x.item(i));
        std::copy(batch.pairs[i].b.pix.begin(), batch.pairs[i].b.pix.end(),
                  x.item(b + i));
        (void)plane;
    }
}

using Snapshot = std::vector<std::vector<float>>;

Snapshot take_snapshot(Encoder& enc) {
    Snapshot s;
    for (auto& [name, vec] : enc.state_tensors()) s.push_back(*vec);
    return s;
}

void restore_snapshot(Encoder& enc, const Snapshot& s) {
    auto tensors = enc.state_tensors();
    for (size_t i = 0; i < tensors.size(); ++i) *tensors[i].second = s[i];
}

}  // namespace

TrainResult train(const std::vector<Image>& train_canvases,
                  const std::vector<Image>& val_canvases,
                  const EncoderSpec& spec, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    spec.validate();
    if (train_canvases.empty()) throw DataError("train: no training canvases");
    if (val_canvases.empty()) throw DataError("train: no validation canvases");

    const auto t0 = std::chrono::steady_clock::now();

    InstancePools train_pools =
        build_pools(train_canvases, cfg.samples_per_canvas,
                    derive_seed(cfg.seed, "train-pool"));
    InstancePools val_pools =
        build_pools(val_canvases, cfg.samples_per_canvas,
                    derive_seed(cfg.seed, "val-pool"));
    train_pools.validate_for_pairs();
    val_pools.validate_for_pairs();

    // The validation set is frozen once per run; every epoch sees the same
    // pairs, so the loss curve is comparable across epochs.
    PairBatch val_set = make_pair_batch(val_pools, cfg.p_same, cfg.val_pairs,
                                        derive_seed(cfg.seed, "val-pairs"));

    auto result = std::make_unique<Encoder>(spec, derive_seed(cfg.seed, "init"));
    Encoder& enc = *result;

    Snapshot frozen_stats;  // batch-norm running stats, for freeze_updates
    if (cfg.freeze_updates) frozen_stats = take_snapshot(enc);

    TrainReport report;
    Snapshot best;
    int since_best = 0;
    const int dim = spec.embedding_dim;

    Encoder::TrainCache cache;
    nn::Tensor x;
    std::vector<float> emb, demb;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        double epoch_loss = 0.0;

        for (int bi = 0; bi < cfg.batches_per_epoch; ++bi) {
            PairBatch batch = make_pair_batch(
                train_pools, cfg.p_same, cfg.batch_size,
                derive_seed(cfg.seed, "batch",
                            static_cast<uint64_t>(epoch) *
                                    cfg.batches_per_epoch +
                                bi));
            fill_pair_tensor(batch, x);
            enc.forward_train(x, emb, cache);

            const int b = cfg.batch_size;
            demb.assign(static_cast<size_t>(2 * b) * dim, 0.0f);
            double batch_loss = 0.0;
            for (int i = 0; i < b; ++i) {
                batch_loss += contrastive_loss_grad(
                    emb.data() + static_cast<size_t>(i) * dim,
                    emb.data() + static_cast<size_t>(b + i) * dim, dim,
                    batch.pairs[i].label, cfg.margin,
                    demb.data() + static_cast<size_t>(i) * dim,
                    demb.data() + static_cast<size_t>(b + i) * dim);
            }
            batch_loss /= b;
            if (!std::isfinite(batch_loss))
                throw NumericError("train: loss diverged at epoch " +
                                   std::to_string(epoch));
            // mean-over-batch scaling
            const float inv_b = 1.0f / static_cast<float>(b);
            for (auto& g : demb) g *= inv_b;

            epoch_loss += batch_loss;

            if (!cfg.freeze_updates) {
                enc.zero_grads();
                enc.backward(cache, demb);
                for (auto* p : enc.params()) {
                    const float m = static_cast<float>(cfg.momentum);
                    const float step = static_cast<float>(lr);
                    for (size_t j = 0; j < p->w.size(); ++j) {
                        p->vel[j] = m * p->vel[j] - step * p->g[j];
                        p->w[j] += p->vel[j];
                    }
                }
            }
        }
        epoch_loss /= cfg.batches_per_epoch;

        // A frozen run must be stationary: put the running stats back so the
        // validation loss cannot drift with batch-norm updates.
        if (cfg.freeze_updates) restore_snapshot(enc, frozen_stats);

        const double val_loss = validate(enc, val_set, cfg.margin);
        if (!std::isfinite(val_loss))
            throw NumericError("train: validation loss diverged at epoch " +
                               std::to_string(epoch));

        report.epochs.push_back({epoch, epoch_loss, val_loss, lr});
        if (on_epoch) on_epoch(report.epochs.back());

        if (val_loss < report.best_val_loss) {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best = take_snapshot(enc);
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.early_stop_patience) {
            report.early_stopped = true;
            break;
        }
    }

    restore_snapshot(enc, best);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    return {std::move(result), std::move(report)};
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << "epoch,train_loss,val_loss,lr\n";
    char buf[128];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", e.epoch,
                      e.train_loss, e.val_loss, e.lr);
        out << buf;
    }
    if (!out) throw IoError("report write failed: " + path);
}

TrainReport read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_loss,val_loss,lr")
        throw DataError("bad report header in " + path);
    TrainReport r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EpochStats e;
        std::istringstream is(line);
        char comma;
        if (!(is >> e.epoch >> comma >> e.train_loss >> comma >> e.val_loss >>
              comma >> e.lr))
            throw DataError("bad report row in " + path + ": " + line);
        r.epochs.push_back(e);
        if (e.val_loss < r.best_val_loss) {
            r.best_val_loss = e.val_loss;
            r.best_epoch = e.epoch;
        }
    }
    return r;
}

}  // namespace weavematch
