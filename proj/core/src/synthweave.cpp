#include "weavematch/synthweave.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "weavematch/errors.hpp"
#include "weavematch/rng.hpp"

namespace weavematch {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Spacing of the coarse drift grid in cm. Nodes 2.5 cm apart keep the pitch
// modulation below 0.2 cycles/cm, well separated from thread frequencies.
constexpr double kDriftGridCm = 2.5;

// Raised-cosine thread profile. t is the phase fraction within one pitch
// cell, width the covered fraction of the pitch.
inline double bump(double t, double width) {
    double d = std::fabs(t - 0.5);
    if (d >= 0.5 * width) return 0.0;
    double c = std::cos(kPi * d / width);
    return c * c;
}

// Smooth unit-variance random field, built by Catmull-Rom upsampling of a
// coarse white-noise grid, then integrated to a phase lookup. The lookup is
// evaluated on a pixel-pitch grid over [u0,u1]x[v0,v1] in pattern space.
struct DriftIntegral {
    double u0 = 0.0, v0 = 0.0, h = 0.0;
    int nu = 0, nv = 0;
    std::vector<double> g;  // accumulated phase-progress, nu x nv row-major (v major)

    double value(double u, double v) const {
        double su = (u - u0) / h;
        double sv = (v - v0) / h;
        int iu = static_cast<int>(std::floor(su));
        int iv = static_cast<int>(std::floor(sv));
        iu = std::clamp(iu, 0, nu - 2);
        iv = std::clamp(iv, 0, nv - 2);
        double fu = std::clamp(su - iu, 0.0, 1.0);
        double fv = std::clamp(sv - iv, 0.0, 1.0);
        const double* r0 = g.data() + static_cast<size_t>(iv) * nu + iu;
        const double* r1 = r0 + nu;
        double a = r0[0] + (r0[1] - r0[0]) * fu;
        double b = r1[0] + (r1[1] - r1[0]) * fu;
        return a + (b - a) * fv;
    }
};

double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                  (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t);
}

// Generates the smooth relative pitch-drift field over the given pattern-
// space box and integrates phase progress along the given axis (0: along u
// per v-row -> modulates the weft; 1: along v per u-column -> warp).
DriftIntegral make_drift_integral(uint64_t seed, double jitter, double u0,
                                  double u1, double v0, double v1, double h,
                                  int axis) {
    DriftIntegral d;
    d.u0 = u0;
    d.v0 = v0;
    d.h = h;
    d.nu = static_cast<int>(std::ceil((u1 - u0) / h)) + 2;
    d.nv = static_cast<int>(std::ceil((v1 - v0) / h)) + 2;
    d.g.assign(static_cast<size_t>(d.nu) * d.nv, 0.0);

    std::vector<double> field(d.g.size(), 0.0);
    if (jitter > 0.0) {
        // Coarse white noise with a margin for the 4-tap cubic stencil.
        Rng rng(seed);
        int cu = static_cast<int>(std::ceil((u1 - u0) / kDriftGridCm)) + 5;
        int cv = static_cast<int>(std::ceil((v1 - v0) / kDriftGridCm)) + 5;
        std::vector<double> coarse(static_cast<size_t>(cu) * cv);
        for (auto& x : coarse) x = rng.normal();
        const double cu0 = u0 - 2.0 * kDriftGridCm;
        const double cv0 = v0 - 2.0 * kDriftGridCm;

        double sum = 0.0, sq = 0.0;
        for (int j = 0; j < d.nv; ++j) {
            double v = v0 + j * h;
            double sv = (v - cv0) / kDriftGridCm;
            int jv = std::clamp(static_cast<int>(std::floor(sv)), 1, cv - 3);
            double tv = sv - jv;
            for (int i = 0; i < d.nu; ++i) {
                double u = u0 + i * h;
                double su = (u - cu0) / kDriftGridCm;
                int ju = std::clamp(static_cast<int>(std::floor(su)), 1, cu - 3);
                double tu = su - ju;
                double col[4];
                for (int k = -1; k <= 2; ++k) {
                    const double* row =
                        coarse.data() + static_cast<size_t>(jv + k) * cu + ju;
                    col[k + 1] = catmull_rom(row[-1], row[0], row[1], row[2], tu);
                }
                double val = catmull_rom(col[0], col[1], col[2], col[3], tv);
                field[static_cast<size_t>(j) * d.nu + i] = val;
                sum += val;
                sq += val * val;
            }
        }
        // Standardize so the field's std over this box is exactly 1; the
        // pitch then varies with relative std = jitter as specified.
        double n = static_cast<double>(field.size());
        double mean = sum / n;
        double var = std::max(sq / n - mean * mean, 1e-30);
        double inv = 1.0 / std::sqrt(var);
        for (auto& x : field) x = (x - mean) * inv;
    }

    // Integrate phase progress d(phi)/ds = 1/(1 + jitter*g) with trapezoids.
    // g is clamped at +-3 sigma so the pitch multiplier stays positive.
    auto rate = [&](size_t idx) {
        double g = std::clamp(field[idx], -3.0, 3.0);
        return 1.0 / (1.0 + jitter * g);
    };
    if (axis == 0) {
        for (int j = 0; j < d.nv; ++j) {
            size_t base = static_cast<size_t>(j) * d.nu;
            double acc = 0.0;
            d.g[base] = 0.0;
            for (int i = 1; i < d.nu; ++i) {
                acc += 0.5 * h * (rate(base + i - 1) + rate(base + i));
                d.g[base + i] = acc;
            }
        }
    } else {
        for (int i = 0; i < d.nu; ++i) {
            double acc = 0.0;
            d.g[i] = 0.0;
            for (int j = 1; j < d.nv; ++j) {
                size_t idx = static_cast<size_t>(j) * d.nu + i;
                acc += 0.5 * h * (rate(idx - d.nu) + rate(idx));
                d.g[idx] = acc;
            }
        }
    }
    return d;
}

}  // namespace

void WeaveSpec::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("WeaveSpec: " + m); };
    if (!(warp_density >= 5.0 && warp_density <= 25.0))
        fail("warp_density out of [5,25]");
    if (!(weft_density >= 5.0 && weft_density <= 25.0))
        fail("weft_density out of [5,25]");
    if (!(warp_width > 0.0 && warp_width <= 1.0)) fail("warp_width out of (0,1]");
    if (!(weft_width > 0.0 && weft_width <= 1.0)) fail("weft_width out of (0,1]");
    if (!(tension_ratio > 0.0)) fail("tension_ratio must be positive");
    if (!(density_jitter >= 0.0 && density_jitter <= 0.3))
        fail("density_jitter out of [0,0.3]");
    if (!(noise_level >= 0.0 && noise_level <= 0.5))
        fail("noise_level out of [0,0.5]");
    if (!(std::fabs(rotation_deg) <= 10.0)) fail("rotation_deg out of [-10,10]");
    if (!(blotch_density >= 0.0)) fail("blotch_density must be >= 0");
}

Image generate_weave(const WeaveSpec& spec, double height_cm, double width_cm) {
    spec.validate();
    if (!(height_cm >= 2.0) || !(width_cm >= 2.0))
        throw DataError("generate_weave: canvas must be at least 2 cm per side");

    const int rows = static_cast<int>(std::lround(height_cm * kRenderResolution));
    const int cols = static_cast<int>(std::lround(width_cm * kRenderResolution));
    Image img(rows, cols, kRenderResolution);

    const double px = 1.0 / kRenderResolution;
    const double cx = 0.5 * width_cm, cy = 0.5 * height_cm;
    const double th = spec.rotation_deg * kPi / 180.0;
    const double ct = std::cos(th), st = std::sin(th);

    // Pattern-space bounding box of the rotated sampling grid.
    double u0 = 1e30, u1 = -1e30, v0 = 1e30, v1 = -1e30;
    for (int k = 0; k < 4; ++k) {
        double x = (k & 1) ? width_cm : 0.0;
        double y = (k & 2) ? height_cm : 0.0;
        double u = cx + ct * (x - cx) + st * (y - cy);
        double v = cy - st * (x - cx) + ct * (y - cy);
        u0 = std::min(u0, u), u1 = std::max(u1, u);
        v0 = std::min(v0, v), v1 = std::max(v1, v);
    }
    u0 -= px, v0 -= px, u1 += px, v1 += px;

    const bool drifting = spec.density_jitter > 0.0;
    DriftIntegral warp_phase, weft_phase;
    if (drifting) {
        weft_phase = make_drift_integral(derive_seed(spec.seed, "weft-drift"),
                                         spec.density_jitter, u0, u1, v0, v1,
                                         px, 0);
        warp_phase = make_drift_integral(derive_seed(spec.seed, "warp-drift"),
                                         spec.density_jitter, u0, u1, v0, v1,
                                         px, 1);
    }

    Rng phase_rng(derive_seed(spec.seed, "phase"));
    const double ph_w = phase_rng.uniform();
    const double ph_f = phase_rng.uniform();

    const double r = spec.tension_ratio;
    const double inv_denom = 1.0 / std::max(1.0, r);

    for (int row = 0; row < rows; ++row) {
        double y = (row + 0.5) * px;
        float* out = img.row(row);
        for (int col = 0; col < cols; ++col) {
            double x = (col + 0.5) * px;
            double du = x - cx, dv = y - cy;
            double u = cx + ct * du + st * dv;
            double v = cy - st * du + ct * dv;

            double pw, pf;  // phase in thread pitches
            if (drifting) {
                pw = spec.warp_density * warp_phase.value(u, v) + ph_w;
                pf = spec.weft_density * weft_phase.value(u, v) + ph_f;
            } else {
                pw = spec.warp_density * (v - v0) + ph_w;
                pf = spec.weft_density * (u - u0) + ph_f;
            }

            double iw = std::floor(pw), jf = std::floor(pf);
            double w = bump(pw - iw, spec.warp_width);
            double f = bump(pf - jf, spec.weft_width);

            // Interlacing: the checkerboard parity decides which thread lies
            // on top at a crossing; the lower thread is occluded where the
            // upper one has material.
            bool warp_on_top =
                ((static_cast<long long>(iw) + static_cast<long long>(jf)) & 1) == 0;
            double val = warp_on_top ? (w + r * f * (1.0 - w))
                                     : (r * f + w * (1.0 - f));
            out[col] = static_cast<float>(val * inv_denom);
        }
    }

    // Occasional dark blotches (paint losses, repairs).
    if (spec.blotch_density > 0.0) {
        Rng brng(derive_seed(spec.seed, "blotch"));
        int count = static_cast<int>(
            std::lround(spec.blotch_density * height_cm * width_cm));
        for (int b = 0; b < count; ++b) {
            double bx = brng.uniform() * width_cm;
            double by = brng.uniform() * height_cm;
            double rad = 0.05 + 0.15 * brng.uniform();  // cm
            double depth = 0.3 + 0.5 * brng.uniform();
            double sigma2 = rad * rad * 0.5;
            int r0 = std::max(0, static_cast<int>((by - 3 * rad) / px));
            int r1 = std::min(rows - 1, static_cast<int>((by + 3 * rad) / px));
            int c0 = std::max(0, static_cast<int>((bx - 3 * rad) / px));
            int c1 = std::min(cols - 1, static_cast<int>((bx + 3 * rad) / px));
            for (int row = r0; row <= r1; ++row) {
                double dy = (row + 0.5) * px - by;
                for (int col = c0; col <= c1; ++col) {
                    double dx = (col + 0.5) * px - bx;
                    double fall = std::exp(-(dx * dx + dy * dy) / (2 * sigma2));
                    img.at(row, col) *= static_cast<float>(1.0 - depth * fall);
                }
            }
        }
    }

    if (spec.noise_level > 0.0) {
        Rng nrng(derive_seed(spec.seed, "noise"));
        for (auto& p : img.pix) {
            double v = p + spec.noise_level * nrng.normal();
            p = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }

    return img;
}

namespace {

std::mutex g_fftw_mutex;  // FFTW planning is not thread-safe

// Averaged 1-D power spectrum across `count` signals of length `n`, peak
// location in [4,30] cycles/cm with parabolic refinement. `fetch` copies
// signal s into the caller-provided buffer.
template <typename Fetch>
double axis_peak(int n, int count, double resolution, Fetch fetch,
                 const char* axis_name) {
    std::vector<double> window(n);
    for (int i = 0; i < n; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (n - 1));

    double* in;
    fftw_complex* out;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        in = fftw_alloc_real(n);
        out = fftw_alloc_complex(n / 2 + 1);
        plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    }

    std::vector<double> psd(n / 2 + 1, 0.0);
    std::vector<double> sig(n);
    for (int s = 0; s < count; ++s) {
        fetch(s, sig.data());
        double mean = 0.0;
        for (double v : sig) mean += v;
        mean /= n;
        for (int i = 0; i < n; ++i) in[i] = (sig[i] - mean) * window[i];
        fftw_execute(plan);
        for (int k = 0; k <= n / 2; ++k)
            psd[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
        fftw_free(in);
        fftw_free(out);
    }

    // f_k = k * resolution / n cycles/cm
    int k_lo = std::max(1, static_cast<int>(std::ceil(4.0 * n / resolution)));
    int k_hi = std::min(n / 2, static_cast<int>(std::floor(30.0 * n / resolution)));
    if (k_lo >= k_hi)
        throw DataError(std::string("density_spectrum: image too small to "
                                    "resolve the search band on the ") +
                        axis_name + " axis");

    int kp = k_lo;
    double total = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        total += psd[k];
        if (psd[k] > psd[kp]) kp = k;
    }
    std::vector<double> band(psd.begin() + k_lo, psd.begin() + k_hi + 1);
    std::nth_element(band.begin(), band.begin() + band.size() / 2, band.end());
    double median = band[band.size() / 2];

    // A featureless or pure-noise image has no convincing maximum.
    if (total <= 1e-9 * count || psd[kp] < 5.0 * median)
        throw NumericError(std::string("density_spectrum: no dominant "
                                       "frequency peak on the ") +
                           axis_name + " axis");

    double delta = 0.0;
    if (kp > k_lo && kp < k_hi && psd[kp - 1] > 0.0 && psd[kp + 1] > 0.0) {
        double l = std::log(psd[kp - 1]);
        double c = std::log(psd[kp]);
        double rr = std::log(psd[kp + 1]);
        double den = l - 2.0 * c + rr;
        if (den < 0.0) delta = std::clamp(0.5 * (l - rr) / den, -0.5, 0.5);
    }
    return (kp + delta) * resolution / n;
}

}  // namespace

SpectrumPeaks density_spectrum(const Image& img) {
    img.validate();
    if (img.height_cm() < 1.0 || img.width_cm() < 1.0)
        throw DataError("density_spectrum: need at least 1 cm per side");

    SpectrumPeaks peaks;
    // Horizontal threads repeat down the columns.
    peaks.warp_cycles_per_cm = axis_peak(
        img.rows, img.cols, img.resolution,
        [&](int c, double* buf) {
            for (int r = 0; r < img.rows; ++r) buf[r] = img.at(r, c);
        },
        "column");
    peaks.weft_cycles_per_cm = axis_peak(
        img.cols, img.rows, img.resolution,
        [&](int r, double* buf) {
            const float* row = img.row(r);
            for (int c = 0; c < img.cols; ++c) buf[c] = row[c];
        },
        "row");
    return peaks;
}

}  // namespace weavematch
