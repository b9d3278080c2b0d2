#include "weavematch/image.hpp"

#include <algorithm>
#include <cmath>

#include "weavematch/errors.hpp"
#include "weavematch/rng.hpp"

namespace weavematch {

void Image::validate() const {
    if (rows <= 0 || cols <= 0)
        throw DataError("image has non-positive dimensions");
    if (!(resolution > 0.0))
        throw DataError("image resolution must be positive");
    if (pix.size() != static_cast<size_t>(rows) * static_cast<size_t>(cols))
        throw DataError("image buffer size does not match dimensions");
    for (float v : pix) {
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw DataError("image pixels must be finite and in [0,1]");
    }
}

Image crop(const Image& img, int r0, int c0, int h, int w) {
    if (h <= 0 || w <= 0 || r0 < 0 || c0 < 0 || r0 + h > img.rows ||
        c0 + w > img.cols)
        throw DataError("crop window outside image bounds");
    Image out(h, w, img.resolution);
    out.canvas_id = img.canvas_id;
    out.class_label = img.class_label;
    for (int r = 0; r < h; ++r) {
        const float* src = img.row(r0 + r) + c0;
        std::copy(src, src + w, out.row(r));
    }
    return out;
}

namespace imgops {

void flip_cols(float* p, int rows, int cols) {
    for (int r = 0; r < rows; ++r)
        std::reverse(p + static_cast<size_t>(r) * cols,
                     p + static_cast<size_t>(r) * cols + cols);
}

void flip_rows(float* p, int rows, int cols) {
    for (int r = 0; r < rows / 2; ++r)
        std::swap_ranges(p + static_cast<size_t>(r) * cols,
                         p + static_cast<size_t>(r) * cols + cols,
                         p + static_cast<size_t>(rows - 1 - r) * cols);
}

void rot90_cw(const float* src, float* dst, int rows, int cols) {
    // (r, c) -> (c, rows-1-r) in an output of shape cols x rows.
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            dst[static_cast<size_t>(c) * rows + (rows - 1 - r)] =
                src[static_cast<size_t>(r) * cols + c];
}

}  // namespace imgops

uint64_t content_hash(const Image& img) {
    uint64_t h = fnv1a64(&img.rows, sizeof(img.rows));
    h = fnv1a64(&img.cols, sizeof(img.cols), h);
    h = fnv1a64(&img.resolution, sizeof(img.resolution), h);
    h = fnv1a64(img.pix.data(), img.pix.size() * sizeof(float), h);
    return h;
}

}  // namespace weavematch
