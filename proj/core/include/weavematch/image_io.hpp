#pragma once

#include <string>

#include "weavematch/image.hpp"

namespace weavematch {

// Reads 8- or 16-bit grayscale PNG/TIFF. Color inputs are rejected: radiograph
// scans are single channel and silent conversion would hide pipeline bugs.
// The caller supplies the resolution (px/cm); file metadata is ignored.
Image load_image(const std::string& path, double resolution);

// Writes 8-bit grayscale PNG; values are clamped to [0,1] and quantized.
void save_png(const Image& img, const std::string& path);

}  // namespace weavematch
