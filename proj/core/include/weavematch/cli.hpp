#pragma once

#include <cstdint>
#include <string>

#include "weavematch/errors.hpp"
#include "weavematch/preprocess.hpp"
#include "weavematch/similarity.hpp"
#include "weavematch/training.hpp"

namespace weavematch::cli {

// Process exit codes. Every subcommand writes a run_config.json record into
// its output directory with enough information to re-run it, plus content
// hashes of everything it wrote.
inline constexpr int kOk = 0;
inline constexpr int kUnexpected = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kNumericError = 4;
inline constexpr int kIoError = 5;
inline constexpr int kPartialFailure = 6;  // some matrix pairs failed

int exit_code_for(const Error& e);

struct SynthOptions {
    std::string out_dir;
    std::string classes_json;  // class roster file; empty when preset is used
    std::string preset;        // "six-class", "hard-pair" or "two-class"
    double canvas_cm = 3.0;    // square canvas side
    uint64_t seed = 0;
};
int cmd_synth(const SynthOptions& opt);

struct PreprocessOptions {
    std::string manifest;
    std::string cache_dir;
    PreprocessConfig config;
};
int cmd_preprocess(const PreprocessOptions& opt);

struct TrainOptions {
    std::string manifest;
    std::string out_dir;
    std::string cache_dir;          // preprocess cache; empty -> out_dir/cache
    std::string encoder = "default";  // "default" or "compact"
    TrainConfig train;
    PreprocessConfig preprocess;
    int restarts = 10;
    bool val_from_train = false;  // no val split: crop validation pools from
                                  // the training canvases instead
    bool verbose = false;         // per-epoch progress on stdout
    uint64_t seed = 0;
};
int cmd_train(const TrainOptions& opt);

struct CompareOptions {
    std::string checkpoint;
    std::string manifest;
    std::string id_a, id_b;
    std::string cache_dir;
    std::string out_json;  // optional score record
    PreprocessConfig preprocess;
    SimilarityConfig sim;
};
int cmd_compare(const CompareOptions& opt);

struct MatrixOptions {
    std::string checkpoint;
    std::string manifest;
    std::string out_dir;
    std::string split = "test";  // test/train/val/all
    std::string cache_dir;       // empty -> out_dir/cache
    PreprocessConfig preprocess;
    SimilarityConfig sim;
};
int cmd_matrix(const MatrixOptions& opt);

struct ReproduceOptions {
    std::string run_dir;   // directory holding run_config.json
    std::string work_dir;  // scratch output; empty -> run_dir/reproduce-check
};
// Re-executes the recorded run and compares output hashes; exits kOk when
// every artifact matches, kUnexpected otherwise.
int cmd_reproduce(const ReproduceOptions& opt);

}  // namespace weavematch::cli
