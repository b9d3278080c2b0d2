#include <CLI11.hpp>

#include "weavematch/cli.hpp"

using namespace weavematch;

namespace {

void add_preprocess_flags(CLI::App* c, PreprocessConfig& p) {
    c->add_option("--target-res", p.target_resolution,
                  "resample target, px/cm")
        ->capture_default_str();
    c->add_option("--norm-window-cm", p.norm_window_cm,
                  "local normalization window in cm")
        ->capture_default_str();
    c->add_option("--equalize-bins", p.equalize_bins,
                  "histogram equalization bins")
        ->capture_default_str();
}

void add_sim_flags(CLI::App* c, SimilarityConfig& s) {
    c->add_option("--pairs", s.pair_count, "paired crops per outcome vector")
        ->capture_default_str();
    c->add_option("--bins", s.bins, "histogram bins per PDF")
        ->capture_default_str();
    c->add_option("--support", s.support, "histogram support (0, t]")
        ->capture_default_str();
    c->add_option("--clip", s.clip, "similarity clipping ceiling")
        ->capture_default_str();
    c->add_flag("--half-kl", s.half_kl,
                "legacy aggregation: half KL against the mixture");
}

void add_train_flags(CLI::App* c, TrainConfig& t) {
    c->add_option("--batch", t.batch_size, "pairs per batch")
        ->capture_default_str();
    c->add_option("--lr0", t.lr0, "initial learning rate")
        ->capture_default_str();
    c->add_option("--lr-decay-epochs", t.lr_decay_epochs,
                  "epochs per decay step")
        ->capture_default_str();
    c->add_option("--lr-decay-factor", t.lr_decay_factor,
                  "divide the rate by this each step")
        ->capture_default_str();
    c->add_option("--margin", t.margin, "contrastive margin")
        ->capture_default_str();
    c->add_option("--momentum", t.momentum, "SGD momentum")
        ->capture_default_str();
    c->add_option("--patience", t.early_stop_patience,
                  "epochs without improvement before stopping")
        ->capture_default_str();
    c->add_option("--p-same", t.p_same, "same-class share of each batch")
        ->capture_default_str();
    c->add_option("--samples-per-canvas", t.samples_per_canvas,
                  "300 px samples drawn per canvas")
        ->capture_default_str();
    c->add_option("--batches-per-epoch", t.batches_per_epoch,
                  "batches per virtual epoch")
        ->capture_default_str();
    c->add_option("--max-epochs", t.max_epochs, "hard epoch ceiling")
        ->capture_default_str();
    c->add_option("--val-pairs", t.val_pairs, "frozen validation pair count")
        ->capture_default_str();
    c->add_flag("--freeze-updates", t.freeze_updates,
                "evaluate the schedule without changing weights");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weavematch: canvas weave rendering, matching and analysis"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --seed appear after the subcommand name
    uint64_t seed = 0;
    app.add_option("--seed", seed, "root seed for every random stream")
        ->capture_default_str();

    cli::SynthOptions synth;
    auto* cs = app.add_subcommand("synth", "render synthetic weave canvases");
    cs->add_option("--out", synth.out_dir, "output directory")->required();
    cs->add_option("--preset", synth.preset,
                   "six-class | hard-pair | two-class");
    cs->add_option("--classes", synth.classes_json, "class roster JSON file");
    cs->add_option("--size-cm", synth.canvas_cm, "square canvas side in cm")
        ->capture_default_str();

    cli::PreprocessOptions pre;
    auto* cp = app.add_subcommand("preprocess",
                                  "warm the preprocessing cache for a manifest");
    cp->add_option("--manifest", pre.manifest, "manifest CSV")->required();
    cp->add_option("--cache", pre.cache_dir, "cache directory")->required();
    add_preprocess_flags(cp, pre.config);

    cli::TrainOptions tr;
    auto* ct = app.add_subcommand("train", "train encoders with restarts");
    ct->add_option("--manifest", tr.manifest, "manifest CSV")->required();
    ct->add_option("--out", tr.out_dir, "run directory")->required();
    ct->add_option("--cache", tr.cache_dir,
                   "preprocess cache (default: <out>/cache)");
    ct->add_option("--encoder", tr.encoder, "default | compact")
        ->capture_default_str();
    ct->add_option("--restarts", tr.restarts, "independent training restarts")
        ->capture_default_str();
    ct->add_flag("--val-from-train", tr.val_from_train,
                 "no val split: validate on crops from the training canvases");
    ct->add_flag("--verbose", tr.verbose, "per-epoch progress");
    add_train_flags(ct, tr.train);
    add_preprocess_flags(ct, tr.preprocess);

    cli::CompareOptions cmp;
    auto* cc = app.add_subcommand("compare", "score one canvas pair");
    cc->add_option("--checkpoint", cmp.checkpoint, "trained encoder")
        ->required();
    cc->add_option("--manifest", cmp.manifest, "manifest CSV")->required();
    cc->add_option("--a", cmp.id_a, "first canvas id")->required();
    cc->add_option("--b", cmp.id_b, "second canvas id")->required();
    cc->add_option("--cache", cmp.cache_dir, "preprocess cache");
    cc->add_option("--out-json", cmp.out_json, "optional score record");
    add_preprocess_flags(cc, cmp.preprocess);
    add_sim_flags(cc, cmp.sim);

    cli::MatrixOptions mat;
    auto* cm = app.add_subcommand("matrix",
                                  "score every canvas pair in a split");
    cm->add_option("--checkpoint", mat.checkpoint, "trained encoder")
        ->required();
    cm->add_option("--manifest", mat.manifest, "manifest CSV")->required();
    cm->add_option("--out", mat.out_dir, "output directory")->required();
    cm->add_option("--split", mat.split, "test | train | val | all")
        ->capture_default_str();
    cm->add_option("--cache", mat.cache_dir,
                   "preprocess cache (default: <out>/cache)");
    add_preprocess_flags(cm, mat.preprocess);
    add_sim_flags(cm, mat.sim);

    cli::ReproduceOptions rep;
    auto* cr = app.add_subcommand(
        "reproduce", "re-run a recorded run and compare artifact hashes");
    cr->add_option("--run", rep.run_dir, "directory with run_config.json")
        ->required();
    cr->add_option("--work", rep.work_dir,
                   "scratch directory (default: <run>/reproduce-check)");

    CLI11_PARSE(app, argc, argv);

    if (cs->parsed()) {
        synth.seed = seed;
        return cli::cmd_synth(synth);
    }
    if (cp->parsed()) return cli::cmd_preprocess(pre);
    if (ct->parsed()) {
        tr.seed = seed;
        return cli::cmd_train(tr);
    }
    if (cc->parsed()) {
        cmp.sim.seed = seed;
        return cli::cmd_compare(cmp);
    }
    if (cm->parsed()) {
        mat.sim.seed = seed;
        return cli::cmd_matrix(mat);
    }
    if (cr->parsed()) return cli::cmd_reproduce(rep);
    return cli::kUnexpected;
}
