#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace weavematch {

// Grayscale image, row-major float32 in [0, 1], with the acquisition
// resolution in pixels per centimetre. Resolution always comes from the
// manifest or generator, never from file metadata.
struct Image {
    int rows = 0;
    int cols = 0;
    double resolution = 0.0;  // px per cm
    std::string canvas_id;
    std::optional<int> class_label;
    std::vector<float> pix;

    Image() = default;
    Image(int r, int c, double res)
        : rows(r), cols(c), resolution(res),
          pix(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0f) {}

    float& at(int r, int c) { return pix[static_cast<size_t>(r) * cols + c]; }
    float at(int r, int c) const {
        return pix[static_cast<size_t>(r) * cols + c];
    }
    const float* row(int r) const { return pix.data() + static_cast<size_t>(r) * cols; }
    float* row(int r) { return pix.data() + static_cast<size_t>(r) * cols; }

    double height_cm() const { return rows / resolution; }
    double width_cm() const { return cols / resolution; }

    // Throws DataError unless dimensions, resolution and pixel range are sane.
    void validate() const;
};

// Rectangular crop; throws DataError when the window leaves the image.
Image crop(const Image& img, int r0, int c0, int h, int w);

// In-place buffer transforms used by instance expansion and augmentation.
namespace imgops {
void flip_cols(float* p, int rows, int cols);       // mirror across vertical axis
void flip_rows(float* p, int rows, int cols);       // mirror across horizontal axis
void rot90_cw(const float* src, float* dst, int rows, int cols);  // dst is cols x rows
}  // namespace imgops

uint64_t content_hash(const Image& img);

}  // namespace weavematch
