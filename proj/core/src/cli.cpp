#include "weavematch/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <nlohmann/json.hpp>

#include "weavematch/image_io.hpp"
#include "weavematch/log.hpp"
#include "weavematch/manifest.hpp"
#include "weavematch/rng.hpp"
#include "weavematch/synthweave.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace weavematch::cli {

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Config: return kConfigError;
        case ErrorKind::Data: return kDataError;
        case ErrorKind::Numeric: return kNumericError;
        case ErrorKind::Io: return kIoError;
    }
    return kUnexpected;
}

namespace {

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kUnexpected;
    }
}

uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    char buf[1 << 16];
    uint64_t h = 14695981039346656037ULL;
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    }
    return h;
}

std::string absolutize(const std::string& p) {
    return p.empty() ? p : fs::absolute(p).string();
}

void write_run_record(const std::string& out_dir, const std::string& command,
                      json options, const std::vector<std::string>& outputs,
                      json extras = json::object()) {
    json rec{{"command", command}, {"options", std::move(options)}};
    json oh = json::object();
    for (const auto& rel : outputs)
        oh[rel] = hex64(hash_file((fs::path(out_dir) / rel).string()));
    rec["outputs"] = oh;
    for (auto& [k, v] : extras.items()) rec[k] = v;

    std::ofstream out(fs::path(out_dir) / "run_config.json");
    if (!out) throw IoError("cannot write run_config.json in " + out_dir);
    out << rec.dump(2) << "\n";
}

// --- option (de)serialization ----------------------------------------------

json to_json(const PreprocessConfig& c) {
    return json{{"target_resolution", c.target_resolution},
                {"norm_window_cm", c.norm_window_cm},
                {"norm_epsilon", c.norm_epsilon},
                {"equalize_bins", c.equalize_bins}};
}

PreprocessConfig preprocess_from_json(const json& j) {
    PreprocessConfig c;
    c.target_resolution = j.at("target_resolution").get<double>();
    c.norm_window_cm = j.at("norm_window_cm").get<double>();
    c.norm_epsilon = j.at("norm_epsilon").get<double>();
    c.equalize_bins = j.at("equalize_bins").get<int>();
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"margin", c.margin},
                {"batch_size", c.batch_size},
                {"lr0", c.lr0},
                {"lr_decay_factor", c.lr_decay_factor},
                {"lr_decay_epochs", c.lr_decay_epochs},
                {"momentum", c.momentum},
                {"early_stop_patience", c.early_stop_patience},
                {"p_same", c.p_same},
                {"samples_per_canvas", c.samples_per_canvas},
                {"batches_per_epoch", c.batches_per_epoch},
                {"max_epochs", c.max_epochs},
                {"val_pairs", c.val_pairs},
                {"freeze_updates", c.freeze_updates}};
}

TrainConfig trainconfig_from_json(const json& j) {
    TrainConfig c;
    c.margin = j.at("margin").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.lr0 = j.at("lr0").get<double>();
    c.lr_decay_factor = j.at("lr_decay_factor").get<double>();
    c.lr_decay_epochs = j.at("lr_decay_epochs").get<int>();
    c.momentum = j.at("momentum").get<double>();
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
    c.p_same = j.at("p_same").get<double>();
    c.samples_per_canvas = j.at("samples_per_canvas").get<int>();
    c.batches_per_epoch = j.at("batches_per_epoch").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.val_pairs = j.at("val_pairs").get<int>();
    c.freeze_updates = j.at("freeze_updates").get<bool>();
    return c;
}

json to_json(const SimilarityConfig& c) {
    return json{{"pair_count", c.pair_count}, {"bins", c.bins},
                {"support", c.support},       {"clip", c.clip},
                {"half_kl", c.half_kl},       {"seed", c.seed}};
}

SimilarityConfig simconfig_from_json(const json& j) {
    SimilarityConfig c;
    c.pair_count = j.at("pair_count").get<int>();
    c.bins = j.at("bins").get<int>();
    c.support = j.at("support").get<double>();
    c.clip = j.at("clip").get<double>();
    c.half_kl = j.at("half_kl").get<bool>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

// --- synthetic class rosters ------------------------------------------------

struct ClassSpec {
    int label = 0;
    int canvases = 3;
    std::vector<std::string> splits;  // per-canvas split; padded with "test"
    double size_cm = 0.0;             // 0 -> use the global canvas size
    WeaveSpec weave;                  // seed is derived per canvas
};

WeaveSpec base_weave(double warp, double weft, double ww, double fw, double r) {
    WeaveSpec w;
    w.warp_density = warp;
    w.weft_density = weft;
    w.warp_width = ww;
    w.weft_width = fw;
    w.tension_ratio = r;
    w.density_jitter = 0.015;
    w.noise_level = 0.05;
    return w;
}

std::vector<ClassSpec> preset_classes(const std::string& name) {
    auto cls = [](int label, WeaveSpec w) {
        ClassSpec c;
        c.label = label;
        c.weave = w;
        c.splits = {"train", "test", "test"};
        return c;
    };
    if (name == "six-class") {
        // A spread of plain-weave looks: plain, tension-skewed, coarse,
        // fine, mixed, and one with wide horizontal threads.
        return {cls(0, base_weave(12.12, 13.68, 0.55, 0.55, 1.0)),
                cls(1, base_weave(10.16, 12.90, 0.55, 0.55, 2.5)),
                cls(2, base_weave(6.65, 8.98, 0.60, 0.60, 1.0)),
                cls(3, base_weave(20.71, 21.10, 0.50, 0.50, 1.0)),
                cls(4, base_weave(14.85, 18.36, 0.55, 0.50, 1.3)),
                cls(5, base_weave(10.75, 13.09, 0.90, 0.50, 1.0))};
    }
    if (name == "hard-pair") {
        // Identical thread counts; only the relative thread prominence
        // separates the classes, so spectra alone cannot.
        return {cls(0, base_weave(10.7, 13.0, 0.55, 0.55, 1.0)),
                cls(1, base_weave(10.7, 13.0, 0.55, 0.55, 3.0))};
    }
    if (name == "two-class") {
        ClassSpec a = cls(0, base_weave(6.0, 6.8, 0.60, 0.60, 1.0));
        ClassSpec b = cls(1, base_weave(22.0, 21.2, 0.50, 0.50, 1.0));
        a.canvases = b.canvases = 2;
        a.splits = b.splits = {"train", "test"};
        return {a, b};
    }
    throw ConfigError("unknown preset '" + name +
                      "' (want six-class, hard-pair or two-class)");
}

std::vector<ClassSpec> load_classes_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open class roster: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("bad class roster JSON: " + std::string(e.what()));
    }
    if (!j.is_array() || j.empty())
        throw DataError("class roster must be a non-empty array");

    std::vector<ClassSpec> out;
    for (const auto& e : j) {
        ClassSpec c;
        c.label = e.at("label").get<int>();
        c.canvases = e.value("canvases", 3);
        c.splits = e.value("splits", std::vector<std::string>{});
        c.size_cm = e.value("size_cm", 0.0);
        c.weave.warp_density = e.at("warp_density").get<double>();
        c.weave.weft_density = e.at("weft_density").get<double>();
        c.weave.warp_width = e.value("warp_width", 0.55);
        c.weave.weft_width = e.value("weft_width", 0.55);
        c.weave.tension_ratio = e.value("tension_ratio", 1.0);
        c.weave.density_jitter = e.value("density_jitter", 0.015);
        c.weave.noise_level = e.value("noise_level", 0.05);
        c.weave.rotation_deg = e.value("rotation_deg", 0.0);
        c.weave.blotch_density = e.value("blotch_density", 0.0);
        out.push_back(std::move(c));
    }
    return out;
}

json weave_to_json(const WeaveSpec& w) {
    return json{{"warp_density", w.warp_density},
                {"weft_density", w.weft_density},
                {"warp_width", w.warp_width},
                {"weft_width", w.weft_width},
                {"tension_ratio", w.tension_ratio},
                {"density_jitter", w.density_jitter},
                {"noise_level", w.noise_level},
                {"rotation_deg", w.rotation_deg},
                {"blotch_density", w.blotch_density},
                {"seed", w.seed}};
}

// --- shared loading helpers -------------------------------------------------

Image load_preprocessed(const Manifest& man, const ManifestEntry& e,
                        const PreprocessConfig& cfg,
                        const std::string& cache_dir) {
    Image raw = load_image(man.resolve_path(e), e.resolution);
    raw.canvas_id = e.canvas_id;
    raw.class_label = e.class_label;
    return preprocess_cached(raw, cfg, cache_dir);
}

}  // namespace

// --- synth ------------------------------------------------------------------

int cmd_synth(const SynthOptions& opt) {
    return guarded([&]() {
        if (opt.out_dir.empty()) throw ConfigError("synth: --out is required");
        if (opt.preset.empty() == opt.classes_json.empty())
            throw ConfigError(
                "synth: give exactly one of --preset or --classes");
        if (!(opt.canvas_cm >= 2.0))
            throw ConfigError("synth: canvas size must be >= 2 cm");

        auto classes = opt.preset.empty() ? load_classes_json(opt.classes_json)
                                          : preset_classes(opt.preset);

        fs::create_directories(opt.out_dir);
        Manifest man;
        man.base_dir = opt.out_dir;
        json specs = json::object();
        std::vector<std::string> outputs;

        for (const auto& c : classes) {
            const double side = c.size_cm > 0.0 ? c.size_cm : opt.canvas_cm;
            for (int k = 0; k < c.canvases; ++k) {
                WeaveSpec w = c.weave;
                w.seed = derive_seed(derive_seed(opt.seed, "class", c.label),
                                     "canvas", k);
                const std::string id =
                    "c" + std::to_string(c.label) + "_" + std::to_string(k);
                Image img = generate_weave(w, side, side);
                img.canvas_id = id;
                img.class_label = c.label;

                const std::string file = id + ".png";
                save_png(img, (fs::path(opt.out_dir) / file).string());
                outputs.push_back(file);

                ManifestEntry e;
                e.path = file;
                e.canvas_id = id;
                e.class_label = c.label;
                e.split = split_from_string(
                    k < static_cast<int>(c.splits.size()) ? c.splits[k]
                                                          : "test");
                e.resolution = kRenderResolution;
                e.warp_density = w.warp_density;
                e.weft_density = w.weft_density;
                e.seed = w.seed;
                man.entries.push_back(e);
                specs[id] = weave_to_json(w);
            }
        }
        man.validate();
        save_manifest(man, (fs::path(opt.out_dir) / "manifest.csv").string());
        outputs.push_back("manifest.csv");
        {
            std::ofstream out(fs::path(opt.out_dir) / "weave_specs.json");
            out << specs.dump(2) << "\n";
        }
        outputs.push_back("weave_specs.json");

        json options{{"out_dir", absolutize(opt.out_dir)},
                     {"classes_json", absolutize(opt.classes_json)},
                     {"preset", opt.preset},
                     {"canvas_cm", opt.canvas_cm},
                     {"seed", opt.seed}};
        write_run_record(opt.out_dir, "synth", options, outputs);
        std::cout << "synth: wrote " << man.entries.size() << " canvases to "
                  << opt.out_dir << "\n";
        return kOk;
    });
}

// --- preprocess ---------------------------------------------------------------

int cmd_preprocess(const PreprocessOptions& opt) {
    return guarded([&]() {
        if (opt.manifest.empty() || opt.cache_dir.empty())
            throw ConfigError("preprocess: --manifest and --cache are required");
        opt.config.validate();

        Manifest man = load_manifest(opt.manifest);
        fs::create_directories(opt.cache_dir);
        size_t done = 0;
        for (const auto& e : man.entries) {
            load_preprocessed(man, e, opt.config, opt.cache_dir);
            ++done;
        }
        json options{{"manifest", absolutize(opt.manifest)},
                     {"cache_dir", absolutize(opt.cache_dir)},
                     {"preprocess", to_json(opt.config)}};
        write_run_record(opt.cache_dir, "preprocess", options, {});
        std::cout << "preprocess: cached " << done << " images in "
                  << opt.cache_dir << "\n";
        return kOk;
    });
}

// --- train --------------------------------------------------------------------

namespace {

// type-7 quantile of a sorted sample
double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    double pos = p * (sorted.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, sorted.size() - 1);
    double f = pos - lo;
    return sorted[lo] + (sorted[hi] - sorted[lo]) * f;
}

}  // namespace

int cmd_train(const TrainOptions& opt) {
    return guarded([&]() {
        if (opt.manifest.empty() || opt.out_dir.empty())
            throw ConfigError("train: --manifest and --out are required");
        if (opt.restarts < 1) throw ConfigError("train: restarts < 1");
        opt.preprocess.validate();

        EncoderSpec spec;
        if (opt.encoder == "compact")
            spec = EncoderSpec::compact();
        else if (opt.encoder != "default")
            throw ConfigError("train: unknown encoder '" + opt.encoder + "'");

        Manifest man = load_manifest(opt.manifest);
        const std::string cache = opt.cache_dir.empty()
                                      ? (fs::path(opt.out_dir) / "cache").string()
                                      : opt.cache_dir;
        fs::create_directories(opt.out_dir);

        std::vector<Image> train_canvases, val_canvases;
        for (const auto& e : man.rows_in(Split::Train))
            train_canvases.push_back(
                load_preprocessed(man, e, opt.preprocess, cache));
        for (const auto& e : man.rows_in(Split::Val))
            val_canvases.push_back(
                load_preprocessed(man, e, opt.preprocess, cache));

        if (val_canvases.empty()) {
            if (!opt.val_from_train)
                throw ConfigError(
                    "train: manifest has no val split; add one or pass "
                    "--val-from-train to draw validation crops from the "
                    "training canvases");
            log_info("train: validation pools drawn from the training "
                     "canvases (independent crop stream)");
            val_canvases = train_canvases;
        }

        std::vector<std::string> outputs;
        std::vector<double> best_losses;
        int best_restart = -1;
        double best_overall = std::numeric_limits<double>::infinity();

        for (int r = 0; r < opt.restarts; ++r) {
            TrainConfig cfg = opt.train;
            cfg.seed = derive_seed(opt.seed, "restart", r);

            auto echo = [&](const EpochStats& s) {
                if (!opt.verbose) return;
                std::printf("restart %d epoch %3d train %.5f val %.5f lr %g\n",
                            r, s.epoch, s.train_loss, s.val_loss, s.lr);
                std::fflush(stdout);
            };
            TrainResult res =
                train(train_canvases, val_canvases, spec, cfg, echo);

            const std::string rdir = "restart_" + std::to_string(r);
            fs::create_directories(fs::path(opt.out_dir) / rdir);
            CheckpointMeta meta;
            meta.preprocess_hash = opt.preprocess.hash();
            meta.train_seed = cfg.seed;
            meta.epoch = res.report.best_epoch;
            meta.val_loss = res.report.best_val_loss;
            const std::string ckpt = rdir + "/checkpoint.wmck";
            save_checkpoint((fs::path(opt.out_dir) / ckpt).string(),
                            *res.encoder, meta);
            write_report_csv(res.report,
                             (fs::path(opt.out_dir) / rdir / "report.csv")
                                 .string());
            outputs.push_back(ckpt);
            outputs.push_back(rdir + "/report.csv");

            best_losses.push_back(res.report.best_val_loss);
            if (res.report.best_val_loss < best_overall) {
                best_overall = res.report.best_val_loss;
                best_restart = r;
            }
            std::printf(
                "restart %d: best val %.6f at epoch %d (%d epochs, %.1fs)%s\n",
                r, res.report.best_val_loss, res.report.best_epoch,
                static_cast<int>(res.report.epochs.size()),
                res.report.wall_seconds,
                res.report.early_stopped ? " [early stop]" : "");
            std::fflush(stdout);
        }

        // best-checkpoint link (falls back to a copy on odd filesystems)
        const fs::path link = fs::path(opt.out_dir) / "best.wmck";
        const std::string target =
            "restart_" + std::to_string(best_restart) + "/checkpoint.wmck";
        std::error_code ec;
        fs::remove(link, ec);
        fs::create_symlink(target, link, ec);
        if (ec) fs::copy_file(fs::path(opt.out_dir) / target, link);
        outputs.push_back("best.wmck");

        std::vector<double> sorted = best_losses;
        std::sort(sorted.begin(), sorted.end());
        json stats{{"min", sorted.front()},
                   {"q1", quantile(sorted, 0.25)},
                   {"median", quantile(sorted, 0.5)},
                   {"q3", quantile(sorted, 0.75)},
                   {"max", sorted.back()},
                   {"best_restart", best_restart}};
        std::printf(
            "restarts: min %.6f  q1 %.6f  median %.6f  q3 %.6f  max %.6f  "
            "(best: restart %d)\n",
            sorted.front(), quantile(sorted, 0.25), quantile(sorted, 0.5),
            quantile(sorted, 0.75), sorted.back(), best_restart);

        json options{{"manifest", absolutize(opt.manifest)},
                     {"out_dir", absolutize(opt.out_dir)},
                     {"cache_dir", absolutize(opt.cache_dir)},
                     {"encoder", opt.encoder},
                     {"train", to_json(opt.train)},
                     {"preprocess", to_json(opt.preprocess)},
                     {"restarts", opt.restarts},
                     {"val_from_train", opt.val_from_train},
                     {"seed", opt.seed}};
        write_run_record(opt.out_dir, "train", options, outputs,
                         json{{"restart_stats", stats}});
        return kOk;
    });
}

// --- compare --------------------------------------------------------------------

int cmd_compare(const CompareOptions& opt) {
    return guarded([&]() {
        if (opt.checkpoint.empty() || opt.manifest.empty() ||
            opt.id_a.empty() || opt.id_b.empty())
            throw ConfigError(
                "compare: --checkpoint, --manifest, --a and --b are required");
        opt.preprocess.validate();
        opt.sim.validate();
        for (const auto& w : opt.sim.warnings()) log_warn("compare: " + w);

        LoadedCheckpoint lc = load_checkpoint(opt.checkpoint);
        if (lc.meta.preprocess_hash != opt.preprocess.hash())
            log_warn(
                "compare: preprocess configuration differs from the one the "
                "checkpoint was trained with");

        Manifest man = load_manifest(opt.manifest);
        auto find = [&](const std::string& id) -> const ManifestEntry& {
            for (const auto& e : man.entries)
                if (e.canvas_id == id) return e;
            throw DataError("compare: canvas '" + id + "' not in manifest");
        };
        Image a = load_preprocessed(man, find(opt.id_a), opt.preprocess,
                                    opt.cache_dir);
        Image b = load_preprocessed(man, find(opt.id_b), opt.preprocess,
                                    opt.cache_dir);

        PairScore ps = symmetric_indicator(*lc.encoder, a, b, opt.sim);
        const bool clipped = ps.s >= opt.sim.clip;
        std::printf("j_ab=%.6g j_ba=%.6g s=%.6g clip=%.6g\n", ps.j_ab, ps.j_ba,
                    ps.s, opt.sim.clip);
        std::printf("verdict: %s\n",
                    clipped ? "at clip: weaves look distinct"
                            : "below clip: consistent with the same weave");

        if (!opt.out_json.empty()) {
            json rec{{"a", opt.id_a},     {"b", opt.id_b},
                     {"j_ab", ps.j_ab},   {"j_ba", ps.j_ba},
                     {"s", ps.s},         {"clipped", clipped},
                     {"sim", to_json(opt.sim)}};
            std::ofstream out(opt.out_json);
            if (!out) throw IoError("cannot write " + opt.out_json);
            out << rec.dump(2) << "\n";
        }
        return kOk;
    });
}

// --- matrix ---------------------------------------------------------------------

int cmd_matrix(const MatrixOptions& opt) {
    return guarded([&]() {
        if (opt.checkpoint.empty() || opt.manifest.empty() ||
            opt.out_dir.empty())
            throw ConfigError(
                "matrix: --checkpoint, --manifest and --out are required");
        opt.preprocess.validate();
        opt.sim.validate();
        for (const auto& w : opt.sim.warnings()) log_warn("matrix: " + w);

        LoadedCheckpoint lc = load_checkpoint(opt.checkpoint);
        if (lc.meta.preprocess_hash != opt.preprocess.hash())
            log_warn(
                "matrix: preprocess configuration differs from the one the "
                "checkpoint was trained with");

        Manifest man = load_manifest(opt.manifest);
        std::vector<ManifestEntry> rows;
        if (opt.split == "all")
            rows = man.entries;
        else
            rows = man.rows_in(split_from_string(opt.split));
        if (rows.size() < 2)
            throw DataError("matrix: need at least two canvases in split '" +
                            opt.split + "'");

        fs::create_directories(opt.out_dir);
        const std::string cache = opt.cache_dir.empty()
                                      ? (fs::path(opt.out_dir) / "cache").string()
                                      : opt.cache_dir;

        std::vector<Image> canvases;
        for (const auto& e : rows)
            canvases.push_back(load_preprocessed(man, e, opt.preprocess, cache));

        SimilarityMatrix m = similarity_matrix(*lc.encoder, canvases, opt.sim);
        write_matrix_csv(m, (fs::path(opt.out_dir) / "matrix.csv").string());
        save_png(render_matrix(m, opt.sim.clip),
                 (fs::path(opt.out_dir) / "matrix.png").string());

        for (const auto& f : m.failures) log_warn("matrix: pair failed: " + f);
        std::cout << "matrix: " << m.n() << " canvases, "
                  << (m.n() * (m.n() + 1)) / 2 << " pair computations, "
                  << m.failures.size() << " failures\n";

        json options{{"checkpoint", absolutize(opt.checkpoint)},
                     {"manifest", absolutize(opt.manifest)},
                     {"out_dir", absolutize(opt.out_dir)},
                     {"split", opt.split},
                     {"cache_dir", absolutize(opt.cache_dir)},
                     {"preprocess", to_json(opt.preprocess)},
                     {"sim", to_json(opt.sim)}};
        write_run_record(opt.out_dir, "matrix", options,
                         {"matrix.csv", "matrix.png"},
                         json{{"failures", m.failures}});
        return m.failures.empty() ? kOk : kPartialFailure;
    });
}

// --- reproduce ------------------------------------------------------------------

int cmd_reproduce(const ReproduceOptions& opt) {
    return guarded([&]() {
        if (opt.run_dir.empty())
            throw ConfigError("reproduce: --run is required");
        const fs::path rec_path = fs::path(opt.run_dir) / "run_config.json";
        std::ifstream in(rec_path);
        if (!in) throw IoError("cannot open " + rec_path.string());
        json rec;
        try {
            in >> rec;
        } catch (const json::exception& e) {
            throw DataError("bad run_config.json: " + std::string(e.what()));
        }

        std::string work = opt.work_dir;
        if (work.empty()) {
            work = (fs::path(opt.run_dir) / "reproduce-check").string();
            fs::remove_all(work);
        } else if (fs::exists(work) && !fs::is_empty(work)) {
            throw ConfigError("reproduce: work dir exists and is not empty: " +
                              work);
        }
        fs::create_directories(work);

        const std::string command = rec.at("command").get<std::string>();
        const json& o = rec.at("options");
        int rc;
        if (command == "synth") {
            SynthOptions s;
            s.out_dir = work;
            s.classes_json = o.at("classes_json").get<std::string>();
            s.preset = o.at("preset").get<std::string>();
            s.canvas_cm = o.at("canvas_cm").get<double>();
            s.seed = o.at("seed").get<uint64_t>();
            rc = cmd_synth(s);
        } else if (command == "train") {
            TrainOptions t;
            t.manifest = o.at("manifest").get<std::string>();
            t.out_dir = work;
            t.cache_dir = (fs::path(work) / "cache").string();
            t.encoder = o.at("encoder").get<std::string>();
            t.train = trainconfig_from_json(o.at("train"));
            t.preprocess = preprocess_from_json(o.at("preprocess"));
            t.restarts = o.at("restarts").get<int>();
            t.val_from_train = o.at("val_from_train").get<bool>();
            t.seed = o.at("seed").get<uint64_t>();
            rc = cmd_train(t);
        } else if (command == "matrix") {
            MatrixOptions m;
            m.checkpoint = o.at("checkpoint").get<std::string>();
            m.manifest = o.at("manifest").get<std::string>();
            m.out_dir = work;
            m.split = o.at("split").get<std::string>();
            m.cache_dir = (fs::path(work) / "cache").string();
            m.preprocess = preprocess_from_json(o.at("preprocess"));
            m.sim = simconfig_from_json(o.at("sim"));
            rc = cmd_matrix(m);
        } else {
            throw ConfigError("reproduce: command '" + command +
                              "' is not re-runnable");
        }
        if (rc != kOk && rc != kPartialFailure) return rc;

        int mismatches = 0;
        for (const auto& [rel, want] : rec.at("outputs").items()) {
            const std::string got =
                hex64(hash_file((fs::path(work) / rel).string()));
            const bool match = got == want.get<std::string>();
            std::printf("%s %s\n", match ? "match   " : "MISMATCH", rel.c_str());
            mismatches += !match;
        }
        std::printf("reproduce: %d mismatching artifact(s)\n", mismatches);
        return mismatches == 0 ? kOk : kUnexpected;
    });
}

}  // namespace weavematch::cli
