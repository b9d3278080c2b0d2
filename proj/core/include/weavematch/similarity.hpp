#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weavematch/image.hpp"
#include "weavematch/model.hpp"

namespace weavematch {

struct SimilarityConfig {
    int pair_count = 1000;  // crop pairs per outcome vector
    int bins = 50;          // histogram bins
    double support = 2.5;   // histogram covers (0, support]
    double clip = 0.03;     // ceiling applied to the final indicator
    bool half_kl = false;   // legacy aggregation, see symmetric_indicator
    uint64_t seed = 0;

    void validate() const;  // throws ConfigError on hard violations
    // Soft issues worth surfacing (e.g. fewer pairs than bins).
    std::vector<std::string> warnings() const;
};

// Distances between embeddings of paired random crops, one crop per image
// side. Each side's crop stream is derived from (seed, canvas_id), so the
// same id and seed produce identical crops: comparing an image with itself
// returns the all-zero vector. Requires both sides of each image >= the
// crop size.
std::vector<double> outcome_vector(const Encoder& enc, const Image& a,
                                   const Image& b, int pair_count,
                                   uint64_t seed);

struct OutcomePdf {
    int bins = 0;
    double support = 0.0;
    std::vector<double> p;  // sums to 1
};

// Histogram PDF of outcomes over (0, support], `bins` equal cells. Values
// beyond the support land in the last bin (truncating them would silently
// delete the evidence of a mismatch); zeros land in the first.
OutcomePdf estimate_pdf(const std::vector<double>& outcomes, int bins,
                        double support);

// KL divergence in nats with the 0*log(0/q)=0 convention. Throws
// NumericError when q lacks support where p has mass.
double kl_divergence(const OutcomePdf& p, const OutcomePdf& q);

// Jensen-Shannon divergence (natural log): always defined, symmetric,
// bounded by ln 2.
double jsd(const OutcomePdf& p, const OutcomePdf& q);

struct PairScore {
    double j_ab = 0.0;  // divergence of the cross PDF from A's self PDF
    double j_ba = 0.0;  // ... and from B's self PDF
    double s = 0.0;     // min(max(j_ab, j_ba), clip)
};

// The order-independent similarity indicator. Self PDFs come from two
// independent crop streams per canvas; a pair of the canvas with itself uses
// two further streams for the cross PDF, so the diagonal measures the
// sampling-noise floor instead of collapsing to an exact zero.
//
// With cfg.half_kl the aggregation follows the older recipe
// 0.5*KL(self || mix(self, cross)) instead of the full JSD.
PairScore symmetric_indicator(const Encoder& enc, const Image& a,
                              const Image& b, const SimilarityConfig& cfg);

struct SimilarityMatrix {
    std::vector<std::string> ids;
    std::vector<double> j_ab, j_ba, s;  // n x n row-major
    std::vector<uint8_t> ok;            // per-entry validity
    std::vector<std::string> failures;  // "idA vs idB: message"

    size_t n() const { return ids.size(); }
    size_t idx(size_t i, size_t j) const { return i * ids.size() + j; }
    int failed_pairs() const;
};

// All-pairs indicator matrix. Each canvas is embedded once per crop stream
// and the cached embeddings serve every pair, so the cost is linear in the
// number of canvases plus cheap vector math per pair. Individual pair
// failures are recorded and do not abort the rest of the matrix.
SimilarityMatrix similarity_matrix(const Encoder& enc,
                                   const std::vector<Image>& canvases,
                                   const SimilarityConfig& cfg);

// Upper-triangle CSV (canvas_a,canvas_b,j_ab,j_ba,s), fixed formatting so
// byte-identical reruns are comparable with a plain file diff.
void write_matrix_csv(const SimilarityMatrix& m, const std::string& path);

// Grayscale cell grid, darker = more similar, scaled by the clip ceiling.
Image render_matrix(const SimilarityMatrix& m, double clip, int cell_px = 24);

}  // namespace weavematch
