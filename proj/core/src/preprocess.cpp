#include "weavematch/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "weavematch/errors.hpp"
#include "weavematch/image_io.hpp"
#include "weavematch/log.hpp"
#include "weavematch/rng.hpp"

namespace fs = std::filesystem;

namespace weavematch {

void PreprocessConfig::validate() const {
    if (!(target_resolution > 0.0))
        throw ConfigError("preprocess: target_resolution must be positive");
    if (!(norm_window_cm > 0.0))
        throw ConfigError("preprocess: norm_window_cm must be positive");
    if (!(norm_epsilon > 0.0))
        throw ConfigError("preprocess: norm_epsilon must be positive");
    if (equalize_bins < 2) throw ConfigError("preprocess: equalize_bins < 2");
}

uint64_t PreprocessConfig::hash() const {
    uint64_t h = fnv1a64(&target_resolution, sizeof(target_resolution));
    h = fnv1a64(&norm_window_cm, sizeof(norm_window_cm), h);
    h = fnv1a64(&norm_epsilon, sizeof(norm_epsilon), h);
    h = fnv1a64(&equalize_bins, sizeof(equalize_bins), h);
    return h;
}

Image resample(const Image& img, double target_resolution) {
    img.validate();
    if (!(target_resolution > 0.0))
        throw ConfigError("resample: target resolution must be positive");
    double scale = img.resolution / target_resolution;  // src px per dst px
    if (scale < 0.25)
        throw DataError("resample: enlargement beyond 4x not supported");

    if (img.resolution == target_resolution) return img;

    int rows = static_cast<int>(std::lround(img.height_cm() * target_resolution));
    int cols = static_cast<int>(std::lround(img.width_cm() * target_resolution));
    if (rows < 1 || cols < 1)
        throw DataError("resample: output would be empty");

    Image out(rows, cols, target_resolution);
    out.canvas_id = img.canvas_id;
    out.class_label = img.class_label;

    // Center-aligned mapping: dst pixel centers land at
    // src = (dst + 0.5) * scale - 0.5, clamped bilinear.
    for (int r = 0; r < rows; ++r) {
        double sr = (r + 0.5) * scale - 0.5;
        int r0 = static_cast<int>(std::floor(sr));
        double fr = sr - r0;
        int ra = std::clamp(r0, 0, img.rows - 1);
        int rb = std::clamp(r0 + 1, 0, img.rows - 1);
        float* dst = out.row(r);
        const float* rowa = img.row(ra);
        const float* rowb = img.row(rb);
        for (int c = 0; c < cols; ++c) {
            double sc = (c + 0.5) * scale - 0.5;
            int c0 = static_cast<int>(std::floor(sc));
            double fc = sc - c0;
            int ca = std::clamp(c0, 0, img.cols - 1);
            int cb = std::clamp(c0 + 1, 0, img.cols - 1);
            double top = rowa[ca] + (rowa[cb] - rowa[ca]) * fc;
            double bot = rowb[ca] + (rowb[cb] - rowb[ca]) * fc;
            dst[c] = static_cast<float>(top + (bot - top) * fr);
        }
    }
    return out;
}

Image local_normalize(const Image& img, double window_cm, double epsilon) {
    img.validate();
    if (!(window_cm > 0.0) || !(epsilon > 0.0))
        throw ConfigError("local_normalize: window and epsilon must be positive");
    int w = static_cast<int>(std::lround(window_cm * img.resolution));
    if (w % 2 == 0) ++w;
    if (w < 3) w = 3;
    if (w >= img.rows || w >= img.cols)
        throw ConfigError("local_normalize: window covers the whole image");
    const int half = w / 2;

    // Integral images of value and value^2, double precision: the naive
    // per-window sums would cost w^2 per pixel and drift in float.
    const int R = img.rows, C = img.cols;
    std::vector<double> s1(static_cast<size_t>(R + 1) * (C + 1), 0.0);
    std::vector<double> s2(s1.size(), 0.0);
    for (int r = 0; r < R; ++r) {
        const float* src = img.row(r);
        double acc1 = 0.0, acc2 = 0.0;
        const size_t above = static_cast<size_t>(r) * (C + 1);
        const size_t here = static_cast<size_t>(r + 1) * (C + 1);
        for (int c = 0; c < C; ++c) {
            double v = src[c];
            acc1 += v;
            acc2 += v * v;
            s1[here + c + 1] = s1[above + c + 1] + acc1;
            s2[here + c + 1] = s2[above + c + 1] + acc2;
        }
    }
    auto window_sum = [&](const std::vector<double>& s, int r0, int c0, int r1,
                          int c1) {
        // inclusive box [r0,r1]x[c0,c1]
        const size_t a = static_cast<size_t>(r0) * (C + 1);
        const size_t b = static_cast<size_t>(r1 + 1) * (C + 1);
        return s[b + c1 + 1] - s[b + c0] - s[a + c1 + 1] + s[a + c0];
    };

    Image out(R, C, img.resolution);
    out.canvas_id = img.canvas_id;
    out.class_label = img.class_label;
    for (int r = 0; r < R; ++r) {
        int r0 = std::max(0, r - half), r1 = std::min(R - 1, r + half);
        const float* src = img.row(r);
        float* dst = out.row(r);
        for (int c = 0; c < C; ++c) {
            int c0 = std::max(0, c - half), c1 = std::min(C - 1, c + half);
            double n = static_cast<double>(r1 - r0 + 1) * (c1 - c0 + 1);
            double mean = window_sum(s1, r0, c0, r1, c1) / n;
            double var = window_sum(s2, r0, c0, r1, c1) / n - mean * mean;
            double sigma = std::sqrt(std::max(var, 0.0));
            double z = (src[c] - mean) / (sigma + epsilon);
            // [-3, 3] standard deviations onto [0, 1]
            dst[c] = static_cast<float>(std::clamp(z / 6.0 + 0.5, 0.0, 1.0));
        }
    }
    return out;
}

Image equalize(const Image& img, int bins) {
    img.validate();
    if (bins < 2) throw ConfigError("equalize: need at least 2 bins");

    auto bin_of = [&](float v) {
        int b = static_cast<int>(v * bins);
        return std::min(b, bins - 1);
    };
    std::vector<size_t> hist(bins, 0);
    for (float v : img.pix) ++hist[bin_of(v)];

    size_t occupied = 0;
    for (size_t h : hist) occupied += (h != 0);
    if (occupied <= 1) {
        log_warn("equalize: constant image '" + img.canvas_id +
                 "', returned unchanged");
        return img;
    }

    std::vector<float> map(bins);
    double total = static_cast<double>(img.pix.size());
    size_t cum = 0;
    for (int b = 0; b < bins; ++b) {
        cum += hist[b];
        map[b] = static_cast<float>(cum / total);
    }

    Image out(img.rows, img.cols, img.resolution);
    out.canvas_id = img.canvas_id;
    out.class_label = img.class_label;
    for (size_t i = 0; i < img.pix.size(); ++i) out.pix[i] = map[bin_of(img.pix[i])];
    return out;
}

Image preprocess_pipeline(const Image& img, const PreprocessConfig& cfg) {
    cfg.validate();
    Image a = resample(img, cfg.target_resolution);
    Image b = local_normalize(a, cfg.norm_window_cm, cfg.norm_epsilon);
    return equalize(b, cfg.equalize_bins);
}

Image quantize8(const Image& img) {
    Image out = img;
    for (size_t i = 0; i < img.pix.size(); ++i) {
        float c = std::clamp(img.pix[i], 0.0f, 1.0f);
        // same byte-to-float mapping as load_image, so a PNG round trip
        // through the cache reproduces these pixels bit for bit
        out.pix[i] =
            static_cast<float>(std::lround(c * 255.0f)) * (1.0f / 255.0f);
    }
    return out;
}

Image preprocess_cached(const Image& img, const PreprocessConfig& cfg,
                        const std::string& cache_dir) {
    cfg.validate();
    std::string key;
    if (!cache_dir.empty()) {
        uint64_t h = content_hash(img);
        h = fnv1a64(&h, sizeof(h), cfg.hash());
        key = (fs::path(cache_dir) / (hex64(h) + ".png")).string();
        if (fs::exists(key)) {
            Image cached = load_image(key, cfg.target_resolution);
            cached.canvas_id = img.canvas_id;
            cached.class_label = img.class_label;
            return cached;
        }
    }
    Image result = quantize8(preprocess_pipeline(img, cfg));
    if (!key.empty()) {
        fs::create_directories(cache_dir);
        save_png(result, key);
    }
    return result;
}

}  // namespace weavematch
