#include <doctest.h>

#include <cmath>
#include <vector>

#include "weavematch/errors.hpp"
#include "weavematch/image.hpp"
#include "weavematch/synthweave.hpp"

using namespace weavematch;

namespace {

WeaveSpec clean_spec(double warp, double weft) {
    WeaveSpec w;
    w.warp_density = warp;
    w.weft_density = weft;
    w.density_jitter = 0.0;
    w.noise_level = 0.0;
    w.seed = 5;
    return w;
}

}  // namespace

TEST_CASE("weave spec validation enforces the documented ranges") {
    CHECK_NOTHROW(clean_spec(5.0, 25.0).validate());

    auto bad = [](auto mutate) {
        WeaveSpec w = clean_spec(12.0, 12.0);
        mutate(w);
        return w;
    };
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.warp_density = 4.9; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.weft_density = 25.1; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.warp_width = 0.0; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.weft_width = 1.01; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.tension_ratio = 0.0; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.density_jitter = 0.31; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.noise_level = 0.51; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.rotation_deg = 10.5; }).validate(),
                    ConfigError);
    CHECK_THROWS_AS(bad([](WeaveSpec& w) { w.blotch_density = -1.0; }).validate(),
                    ConfigError);
}

TEST_CASE("generation is deterministic and bounded") {
    WeaveSpec w = clean_spec(11.0, 13.0);
    w.density_jitter = 0.02;
    w.noise_level = 0.08;
    w.blotch_density = 0.3;
    Image a = generate_weave(w, 2.0, 2.5);
    Image b = generate_weave(w, 2.0, 2.5);

    CHECK(a.rows == 400);
    CHECK(a.cols == 500);
    CHECK(a.resolution == kRenderResolution);
    CHECK(a.pix == b.pix);
    CHECK_NOTHROW(a.validate());

    w.seed += 1;
    Image c = generate_weave(w, 2.0, 2.5);
    CHECK(a.pix != c.pix);

    CHECK_THROWS_AS(generate_weave(w, 1.5, 3.0), DataError);
    WeaveSpec bad = w;
    bad.warp_density = 1.0;
    CHECK_THROWS_AS(generate_weave(bad, 3.0, 3.0), ConfigError);
}

TEST_CASE("density_spectrum recovers a known pure grating") {
    // Ground truth needs no generator: a separable cosine at chosen
    // frequencies per axis. Column direction = warp, row direction = weft.
    const double f_row = 9.4, f_col = 16.8;  // cycles/cm
    const int n = 320;                       // 1.6 cm at render resolution
    Image img(n, n, kRenderResolution);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            double y = r / kRenderResolution, x = c / kRenderResolution;
            img.at(r, c) = static_cast<float>(
                0.5 + 0.2 * std::cos(2.0 * M_PI * f_row * y) +
                0.2 * std::cos(2.0 * M_PI * f_col * x));
        }

    SpectrumPeaks p = density_spectrum(img);
    CHECK(p.warp_cycles_per_cm == doctest::Approx(f_row).epsilon(0.01));
    CHECK(p.weft_cycles_per_cm == doctest::Approx(f_col).epsilon(0.01));
}

TEST_CASE("density_spectrum rejects degenerate input") {
    Image flat(300, 300, kRenderResolution);
    for (auto& v : flat.pix) v = 0.5f;
    CHECK_THROWS_AS(density_spectrum(flat), NumericError);

    Image tiny(100, 300, kRenderResolution);  // 0.5 cm tall
    CHECK_THROWS_AS(density_spectrum(tiny), DataError);
}

TEST_CASE("spectral fidelity across the plausible density range") {
    // One FFT bin at a 3 cm canvas is 1/3 cycle/cm.
    const double bin = kRenderResolution / (3.0 * kRenderResolution);
    for (double d : {6.0, 10.0, 14.0, 18.0, 22.0}) {
        WeaveSpec w = clean_spec(d, d + 1.0);
        w.density_jitter = 0.02;
        w.noise_level = 0.1;
        w.seed = 21;
        Image img = generate_weave(w, 3.0, 3.0);
        SpectrumPeaks p = density_spectrum(img);
        CHECK(std::abs(p.warp_cycles_per_cm - d) < bin);
        CHECK(std::abs(p.weft_cycles_per_cm - (d + 1.0)) < bin);
    }
}

TEST_CASE("rotating the image by 90 degrees swaps the recovered peaks") {
    WeaveSpec w = clean_spec(8.0, 14.0);
    Image img = generate_weave(w, 3.0, 3.0);
    SpectrumPeaks before = density_spectrum(img);

    Image rot(img.cols, img.rows, img.resolution);
    imgops::rot90_cw(img.pix.data(), rot.pix.data(), img.rows, img.cols);
    SpectrumPeaks after = density_spectrum(rot);

    CHECK(after.warp_cycles_per_cm ==
          doctest::Approx(before.weft_cycles_per_cm).epsilon(0.01));
    CHECK(after.weft_cycles_per_cm ==
          doctest::Approx(before.warp_cycles_per_cm).epsilon(0.01));
}

TEST_CASE("one-pitch shift is a symmetry of the balanced weave") {
    // warp density 8/cm at 200 px/cm -> exactly 25 px pitch. With equal
    // tension both crossing states have the same intensity, so shifting by
    // one pitch (which flips the interlace parity) changes nothing.
    WeaveSpec w = clean_spec(8.0, 10.0);
    w.tension_ratio = 1.0;
    Image img = generate_weave(w, 3.0, 3.0);
    const int pitch = 25;
    float max_diff = 0.0f;
    for (int r = 0; r + pitch < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c)
            max_diff =
                std::max(max_diff, std::abs(img.at(r, c) - img.at(r + pitch, c)));
    CHECK(max_diff < 1e-5f);
}

TEST_CASE("unbalanced tension needs a two-pitch shift") {
    WeaveSpec w = clean_spec(8.0, 10.0);
    w.tension_ratio = 2.0;
    Image img = generate_weave(w, 3.0, 3.0);
    const int pitch = 25;

    float one = 0.0f, two = 0.0f;
    for (int r = 0; r + 2 * pitch < img.rows; ++r)
        for (int c = 0; c < img.cols; ++c) {
            one = std::max(one, std::abs(img.at(r, c) - img.at(r + pitch, c)));
            two = std::max(two,
                           std::abs(img.at(r, c) - img.at(r + 2 * pitch, c)));
        }
    CHECK(two < 1e-5f);   // full interlace period
    CHECK(one > 0.05f);   // half period exposes the tension asymmetry
}

TEST_CASE("blotches darken and noise perturbs") {
    WeaveSpec w = clean_spec(10.0, 12.0);
    Image plain = generate_weave(w, 2.0, 2.0);

    WeaveSpec wb = w;
    wb.blotch_density = 2.0;
    Image blotched = generate_weave(wb, 2.0, 2.0);
    double mean_plain = 0.0, mean_blotched = 0.0;
    for (auto v : plain.pix) mean_plain += v;
    for (auto v : blotched.pix) mean_blotched += v;
    CHECK(mean_blotched < mean_plain);

    WeaveSpec wn = w;
    wn.noise_level = 0.05;
    Image noisy = generate_weave(wn, 2.0, 2.0);
    CHECK(noisy.pix != plain.pix);
    CHECK_NOTHROW(noisy.validate());
}

TEST_CASE("rotation changes the pattern but keeps it valid") {
    WeaveSpec w = clean_spec(10.0, 12.0);
    WeaveSpec wr = w;
    wr.rotation_deg = 4.0;
    Image straight = generate_weave(w, 2.0, 2.0);
    Image rotated = generate_weave(wr, 2.0, 2.0);
    CHECK(straight.pix != rotated.pix);
    CHECK_NOTHROW(rotated.validate());

    // small rotations keep the spectral peaks near the requested densities
    Image big = generate_weave(wr, 3.0, 3.0);
    SpectrumPeaks p = density_spectrum(big);
    CHECK(p.warp_cycles_per_cm == doctest::Approx(10.0).epsilon(0.03));
    CHECK(p.weft_cycles_per_cm == doctest::Approx(12.0).epsilon(0.03));
}
