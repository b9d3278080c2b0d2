#pragma once

#include <cstdint>
#include <string>

#include "weavematch/image.hpp"

namespace weavematch {

struct PreprocessConfig {
    double target_resolution = 200.0;  // px per cm
    double norm_window_cm = 0.5;       // local-statistics window side
    double norm_epsilon = 1e-6;        // sigma regularizer
    int equalize_bins = 256;

    void validate() const;   // throws ConfigError
    uint64_t hash() const;   // stable across runs, stored in checkpoints
};

// Bilinear resampling to the target resolution. Output size is
// round(physical extent * target); resampling to the same resolution is an
// exact copy. Enlargement beyond 4x aborts: the interpolation would
// fabricate detail the scan never had.
Image resample(const Image& img, double target_resolution);

// Local contrast normalization: per pixel z-score over a centered square
// window (side = round(window_cm * resolution), forced odd, clipped at the
// borders), then an affine map of [-3sigma, 3sigma] onto [0,1], clamped.
// Window statistics come from double-precision integral images.
Image local_normalize(const Image& img, double window_cm, double epsilon = 1e-6);

// Global histogram equalization over `bins` gray levels. Monotone
// non-decreasing value mapping; a constant image is returned unchanged
// (and flagged in the log).
Image equalize(const Image& img, int bins = 256);

// resample -> local_normalize -> equalize.
Image preprocess_pipeline(const Image& img, const PreprocessConfig& cfg);

// Cached pipeline: results are stored as 8-bit PNG under cache_dir, keyed
// by content hash + config hash. Always returns the quantized version so
// cold and warm cache runs produce identical pixels. Empty cache_dir means
// "quantize but do not store".
Image preprocess_cached(const Image& img, const PreprocessConfig& cfg,
                        const std::string& cache_dir);

// The 8-bit quantization applied by the cache (exposed for tests).
Image quantize8(const Image& img);

}  // namespace weavematch
