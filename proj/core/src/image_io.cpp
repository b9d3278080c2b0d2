#include "weavematch/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "weavematch/errors.hpp"

namespace weavematch {

Image load_image(const std::string& path, double resolution) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image: " + path);
    if (m.channels() != 1)
        throw DataError("expected single-channel grayscale image: " + path);

    Image out(m.rows, m.cols, resolution);
    if (m.depth() == CV_8U) {
        for (int r = 0; r < m.rows; ++r) {
            const uint8_t* src = m.ptr<uint8_t>(r);
            float* dst = out.row(r);
            for (int c = 0; c < m.cols; ++c) dst[c] = src[c] * (1.0f / 255.0f);
        }
    } else if (m.depth() == CV_16U) {
        for (int r = 0; r < m.rows; ++r) {
            const uint16_t* src = m.ptr<uint16_t>(r);
            float* dst = out.row(r);
            for (int c = 0; c < m.cols; ++c)
                dst[c] = src[c] * (1.0f / 65535.0f);
        }
    } else {
        throw DataError("unsupported bit depth (want 8 or 16 bit): " + path);
    }
    return out;
}

void save_png(const Image& img, const std::string& path) {
    cv::Mat m(img.rows, img.cols, CV_8U);
    for (int r = 0; r < img.rows; ++r) {
        const float* src = img.row(r);
        uint8_t* dst = m.ptr<uint8_t>(r);
        for (int c = 0; c < img.cols; ++c) {
            float v = std::clamp(src[c], 0.0f, 1.0f);
            dst[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
    }
    if (!cv::imwrite(path, m)) throw IoError("cannot write PNG: " + path);
}

}  // namespace weavematch
