#pragma once

#include <cstdint>

#include "weavematch/image.hpp"

namespace weavematch {

// Parameters of one synthetic plain-weave canvas.
//
// Axis conventions, fixed by the spectral contract:
//   warp_density  - threads/cm of the horizontal threads; their repetition
//                   runs down the image, so the peak shows up in the
//                   column-direction (vertical) spectrum.
//   weft_density  - threads/cm of the vertical threads; peak in the
//                   row-direction (horizontal) spectrum.
// tension_ratio scales the visual prominence of the weft relative to the
// warp (tighter warp flattens the weft's relief). density_jitter is the
// relative standard deviation of a smooth low-frequency pitch drift, the
// kind introduced by uneven loom beat-up.
struct WeaveSpec {
    double warp_density = 12.0;   // threads per cm, [5, 25]
    double weft_density = 12.0;   // threads per cm, [5, 25]
    double warp_width = 0.55;     // thread width as a fraction of pitch, (0, 1]
    double weft_width = 0.55;
    double tension_ratio = 1.0;   // weft/warp prominence, > 0
    double density_jitter = 0.0;  // relative stddev of pitch drift, [0, 0.3]
    double noise_level = 0.0;     // additive Gaussian sigma, [0, 0.5]
    double rotation_deg = 0.0;    // pattern rotation, [-10, 10]
    double blotch_density = 0.0;  // dark blotches per cm^2 (0 disables)
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Output resolution of the generator, px per cm.
inline constexpr double kRenderResolution = 200.0;

// Renders a synthetic radiograph-like canvas crop of the given physical
// size. Deterministic: identical spec and size give identical pixels.
// Throws ConfigError for invalid spec, DataError for sizes below 2 cm.
Image generate_weave(const WeaveSpec& spec, double height_cm, double width_cm);

struct SpectrumPeaks {
    double warp_cycles_per_cm = 0.0;  // column-direction peak
    double weft_cycles_per_cm = 0.0;  // row-direction peak
};

// Dominant spatial frequency per axis, estimated from Hann-windowed 1-D
// power spectra averaged over all rows (and all columns), searched in the
// plausible thread-count band [4, 30] cycles/cm with parabolic refinement.
// Throws DataError for images smaller than 1 cm per side and NumericError
// when an axis has no convincing peak (e.g. a featureless image).
SpectrumPeaks density_spectrum(const Image& img);

}  // namespace weavematch
