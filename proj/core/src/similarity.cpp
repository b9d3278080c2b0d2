#include "weavematch/similarity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "weavematch/errors.hpp"
#include "weavematch/rng.hpp"

namespace weavematch {

void SimilarityConfig::validate() const {
    if (pair_count < 1) throw ConfigError("similarity: pair_count < 1");
    if (bins < 2) throw ConfigError("similarity: bins < 2");
    if (!(support > 0.0)) throw ConfigError("similarity: support must be > 0");
    if (!(clip > 0.0)) throw ConfigError("similarity: clip must be > 0");
}

std::vector<std::string> SimilarityConfig::warnings() const {
    std::vector<std::string> w;
    if (pair_count < bins)
        w.push_back("pair_count (" + std::to_string(pair_count) +
                    ") below bin count (" + std::to_string(bins) +
                    "); the histogram will be sparse");
    return w;
}

namespace {

// Crop stream k of a canvas. Streams 0 and 1 feed the self-comparison PDF,
// 2 and 3 the cross PDF of a canvas paired with itself.
uint64_t crop_stream_seed(uint64_t seed, const std::string& canvas_id,
                          uint64_t k) {
    return derive_seed(derive_seed(seed, canvas_id), "crop-stream", k);
}

// n random crop origins; the pixel blocks are gathered on the fly.
std::vector<float> gather_crops(const Image& img, int n, uint64_t seed) {
    if (img.rows < kInstanceSide || img.cols < kInstanceSide)
        throw DataError("outcome_vector: image " + img.canvas_id +
                        " smaller than the crop size");
    Rng rng(seed);
    const size_t plane = static_cast<size_t>(kInstanceSide) * kInstanceSide;
    std::vector<float> out(plane * n);
    for (int i = 0; i < n; ++i) {
        int r0 = static_cast<int>(rng.uniform_int(img.rows - kInstanceSide + 1));
        int c0 = static_cast<int>(rng.uniform_int(img.cols - kInstanceSide + 1));
        float* dst = out.data() + plane * i;
        for (int r = 0; r < kInstanceSide; ++r) {
            const float* src = img.row(r0 + r) + c0;
            std::copy(src, src + kInstanceSide,
                      dst + static_cast<size_t>(r) * kInstanceSide);
        }
    }
    return out;
}

std::vector<float> embed_crops(const Encoder& enc, const Image& img, int n,
                               uint64_t stream_seed) {
    std::vector<float> crops = gather_crops(img, n, stream_seed);
    const size_t plane = static_cast<size_t>(kInstanceSide) * kInstanceSide;
    std::vector<const float*> ptrs(n);
    for (int i = 0; i < n; ++i) ptrs[i] = crops.data() + plane * i;
    return embed_batch(enc, ptrs);
}

std::vector<double> paired_distances(const std::vector<float>& ea,
                                     const std::vector<float>& eb, int n,
                                     int dim) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = pairwise_distance(ea.data() + static_cast<size_t>(i) * dim,
                                   eb.data() + static_cast<size_t>(i) * dim,
                                   dim);
    return out;
}

OutcomePdf mix_pdf(const OutcomePdf& p, const OutcomePdf& q) {
    OutcomePdf m;
    m.bins = p.bins;
    m.support = p.support;
    m.p.resize(p.p.size());
    for (size_t i = 0; i < p.p.size(); ++i) m.p[i] = 0.5 * (p.p[i] + q.p[i]);
    return m;
}

// Embeddings of up to four crop streams of one canvas.
struct CanvasEmbeddings {
    std::array<std::vector<float>, 4> stream;
};

CanvasEmbeddings embed_canvas(const Encoder& enc, const Image& img, int n,
                              uint64_t seed, bool self_streams) {
    CanvasEmbeddings ce;
    for (int k = 0; k < (self_streams ? 4 : 2); ++k)
        ce.stream[k] =
            embed_crops(enc, img, n, crop_stream_seed(seed, img.canvas_id, k));
    return ce;
}

PairScore score_from_embeddings(const CanvasEmbeddings& A,
                                const CanvasEmbeddings& B, bool self_pair,
                                const SimilarityConfig& cfg, int dim) {
    const int n = cfg.pair_count;
    std::vector<double> o_aa = paired_distances(A.stream[0], A.stream[1], n, dim);
    std::vector<double> o_ab =
        self_pair ? paired_distances(A.stream[2], A.stream[3], n, dim)
                  : paired_distances(A.stream[0], B.stream[0], n, dim);
    std::vector<double> o_bb =
        self_pair ? o_aa : paired_distances(B.stream[0], B.stream[1], n, dim);

    OutcomePdf q_aa = estimate_pdf(o_aa, cfg.bins, cfg.support);
    OutcomePdf q_ab = estimate_pdf(o_ab, cfg.bins, cfg.support);
    OutcomePdf q_bb = estimate_pdf(o_bb, cfg.bins, cfg.support);

    PairScore ps;
    if (cfg.half_kl) {
        ps.j_ab = 0.5 * kl_divergence(q_aa, mix_pdf(q_aa, q_ab));
        ps.j_ba = 0.5 * kl_divergence(q_bb, mix_pdf(q_bb, q_ab));
    } else {
        ps.j_ab = jsd(q_aa, q_ab);
        ps.j_ba = jsd(q_bb, q_ab);
    }
    ps.s = std::min(std::max(ps.j_ab, ps.j_ba), cfg.clip);
    return ps;
}

}  // namespace

std::vector<double> outcome_vector(const Encoder& enc, const Image& a,
                                   const Image& b, int pair_count,
                                   uint64_t seed) {
    if (pair_count < 1) throw ConfigError("outcome_vector: pair_count < 1");
    const int dim = enc.spec().embedding_dim;
    std::vector<float> ea =
        embed_crops(enc, a, pair_count, crop_stream_seed(seed, a.canvas_id, 0));
    std::vector<float> eb =
        embed_crops(enc, b, pair_count, crop_stream_seed(seed, b.canvas_id, 0));
    return paired_distances(ea, eb, pair_count, dim);
}

OutcomePdf estimate_pdf(const std::vector<double>& outcomes, int bins,
                        double support) {
    if (bins < 2) throw ConfigError("estimate_pdf: bins < 2");
    if (!(support > 0.0)) throw ConfigError("estimate_pdf: support must be > 0");
    if (outcomes.empty()) throw DataError("estimate_pdf: no outcomes");

    std::vector<int64_t> counts(bins, 0);
    for (double o : outcomes) {
        if (!std::isfinite(o) || o < 0.0)
            throw DataError("estimate_pdf: outcomes must be finite and >= 0");
        // left-open cells ((k-1)/K, k/K] * support; overshoot clamps into
        // the last bin, zeros into the first
        int b = static_cast<int>(std::ceil(o * bins / support)) - 1;
        b = std::clamp(b, 0, bins - 1);
        ++counts[b];
    }
    OutcomePdf pdf;
    pdf.bins = bins;
    pdf.support = support;
    pdf.p.resize(bins);
    const double inv = 1.0 / static_cast<double>(outcomes.size());
    for (int b = 0; b < bins; ++b) pdf.p[b] = counts[b] * inv;
    return pdf;
}

double kl_divergence(const OutcomePdf& p, const OutcomePdf& q) {
    if (p.bins != q.bins || p.support != q.support)
        throw ConfigError("kl_divergence: PDFs live on different supports");
    double s = 0.0;
    for (int i = 0; i < p.bins; ++i) {
        if (p.p[i] == 0.0) continue;  // 0 * log(0/q) := 0
        if (q.p[i] == 0.0)
            throw NumericError(
                "kl_divergence: q lacks support where p has mass");
        s += p.p[i] * std::log(p.p[i] / q.p[i]);
    }
    return s;
}

double jsd(const OutcomePdf& p, const OutcomePdf& q) {
    OutcomePdf m = mix_pdf(p, q);
    // m inherits support wherever p or q has mass, so both terms are defined
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m);
}

PairScore symmetric_indicator(const Encoder& enc, const Image& a,
                              const Image& b, const SimilarityConfig& cfg) {
    cfg.validate();
    const bool self = a.canvas_id == b.canvas_id;
    CanvasEmbeddings ea =
        embed_canvas(enc, a, cfg.pair_count, cfg.seed, self);
    CanvasEmbeddings eb;
    if (!self) eb = embed_canvas(enc, b, cfg.pair_count, cfg.seed, false);
    return score_from_embeddings(ea, self ? ea : eb, self, cfg,
                                 enc.spec().embedding_dim);
}

int SimilarityMatrix::failed_pairs() const {
    int n = 0;
    for (uint8_t f : ok)
        if (!f) ++n;
    return n;
}

SimilarityMatrix similarity_matrix(const Encoder& enc,
                                   const std::vector<Image>& canvases,
                                   const SimilarityConfig& cfg) {
    cfg.validate();
    if (canvases.size() < 2)
        throw DataError("similarity_matrix: need at least two canvases");

    SimilarityMatrix m;
    for (const auto& img : canvases) {
        if (img.canvas_id.find(',') != std::string::npos)
            throw DataError("canvas id contains a comma: " + img.canvas_id);
        for (const auto& id : m.ids)
            if (id == img.canvas_id)
                throw DataError("duplicate canvas id: " + img.canvas_id);
        m.ids.push_back(img.canvas_id);
    }

    const size_t n = canvases.size();
    m.j_ab.assign(n * n, 0.0);
    m.j_ba.assign(n * n, 0.0);
    m.s.assign(n * n, 0.0);
    m.ok.assign(n * n, 0);

    // One embedding pass per canvas; all pairs reuse the cached streams.
    std::vector<CanvasEmbeddings> cache(n);
    std::vector<bool> embedded(n, false);
    const int dim = enc.spec().embedding_dim;

    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i; j < n; ++j) {
            try {
                if (!embedded[i]) {
                    cache[i] = embed_canvas(enc, canvases[i], cfg.pair_count,
                                            cfg.seed, /*self_streams=*/true);
                    embedded[i] = true;
                }
                if (!embedded[j]) {
                    cache[j] = embed_canvas(enc, canvases[j], cfg.pair_count,
                                            cfg.seed, /*self_streams=*/true);
                    embedded[j] = true;
                }
                PairScore ps = score_from_embeddings(cache[i], cache[j], i == j,
                                                     cfg, dim);
                m.j_ab[m.idx(i, j)] = ps.j_ab;
                m.j_ba[m.idx(i, j)] = ps.j_ba;
                m.s[m.idx(i, j)] = ps.s;
                m.ok[m.idx(i, j)] = 1;
                // enforce exact symmetry by construction
                m.j_ab[m.idx(j, i)] = ps.j_ba;
                m.j_ba[m.idx(j, i)] = ps.j_ab;
                m.s[m.idx(j, i)] = ps.s;
                m.ok[m.idx(j, i)] = 1;
            } catch (const Error& e) {
                m.failures.push_back(canvases[i].canvas_id + " vs " +
                                     canvases[j].canvas_id + ": " + e.what());
            }
        }
    }
    return m;
}

void write_matrix_csv(const SimilarityMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write matrix CSV: " + path);
    out << "canvas_a,canvas_b,j_ab,j_ba,s\n";
    char buf[160];
    for (size_t i = 0; i < m.n(); ++i) {
        for (size_t j = i; j < m.n(); ++j) {
            const size_t k = m.idx(i, j);
            if (m.ok[k])
                std::snprintf(buf, sizeof(buf), "%s,%s,%.12g,%.12g,%.12g\n",
                              m.ids[i].c_str(), m.ids[j].c_str(), m.j_ab[k],
                              m.j_ba[k], m.s[k]);
            else
                std::snprintf(buf, sizeof(buf), "%s,%s,nan,nan,nan\n",
                              m.ids[i].c_str(), m.ids[j].c_str());
            out << buf;
        }
    }
    if (!out) throw IoError("matrix CSV write failed: " + path);
}

Image render_matrix(const SimilarityMatrix& m, double clip, int cell_px) {
    if (cell_px < 1) throw ConfigError("render_matrix: cell_px < 1");
    const int n = static_cast<int>(m.n());
    Image img(n * cell_px, n * cell_px, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const size_t k = m.idx(i, j);
            // darker = more similar; failures render mid-gray
            float v = m.ok[k] ? static_cast<float>(
                                    std::clamp(m.s[k] / clip, 0.0, 1.0))
                              : 0.5f;
            for (int r = 0; r < cell_px; ++r)
                for (int c = 0; c < cell_px; ++c)
                    img.at(i * cell_px + r, j * cell_px + c) = v;
        }
    }
    return img;
}

}  // namespace weavematch
