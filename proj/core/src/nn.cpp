#include "weavematch/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "weavematch/errors.hpp"

namespace weavematch::nn {

namespace {

using RowMat =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using MapC = Eigen::Map<const RowMat>;

// CHW -> [in_c*k*k][h*w]; each col row is a shifted copy of one image row,
// so the inner loop is a straight memcpy with zero fills at the borders.
void im2col(const float* x, int c_in, int h, int w, int k, float* col) {
    const int pad = k / 2;
    const size_t hw = static_cast<size_t>(h) * w;
    float* dst = col;
    for (int c = 0; c < c_in; ++c) {
        const float* plane = x + static_cast<size_t>(c) * hw;
        for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - pad;
            for (int kx = 0; kx < k; ++kx) {
                const int dx = kx - pad;
                for (int y = 0; y < h; ++y) {
                    float* drow = dst + static_cast<size_t>(y) * w;
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        std::fill(drow, drow + w, 0.0f);
                        continue;
                    }
                    const float* srow = plane + static_cast<size_t>(sy) * w;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    if (x0 > 0) std::fill(drow, drow + x0, 0.0f);
                    if (x1 > x0) std::copy(srow + x0 + dx, srow + x1 + dx, drow + x0);
                    if (x1 < w) std::fill(drow + x1, drow + w, 0.0f);
                }
                dst += hw;
            }
        }
    }
}

// Transpose of im2col: scatter-adds column gradients back onto the image.
void col2im_add(const float* col, int c_in, int h, int w, int k, float* gx) {
    const int pad = k / 2;
    const size_t hw = static_cast<size_t>(h) * w;
    const float* src = col;
    for (int c = 0; c < c_in; ++c) {
        float* plane = gx + static_cast<size_t>(c) * hw;
        for (int ky = 0; ky < k; ++ky) {
            const int dy = ky - pad;
            for (int kx = 0; kx < k; ++kx) {
                const int dx = kx - pad;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    const float* srow = src + static_cast<size_t>(y) * w;
                    float* drow = plane + static_cast<size_t>(sy) * w;
                    const int x0 = std::max(0, -dx);
                    const int x1 = std::min(w, w - dx);
                    for (int xx = x0; xx < x1; ++xx) drow[xx + dx] += srow[xx];
                }
                src += hw;
            }
        }
    }
}

}  // namespace

void Conv2d::init(const std::string& name, int in_channels, int out_channels,
                  int kernel, bool bias, Rng& rng) {
    if (kernel % 2 == 0) throw ConfigError("Conv2d: kernel must be odd");
    in_c = in_channels;
    out_c = out_channels;
    k = kernel;
    has_bias = bias;
    const size_t fan_in = static_cast<size_t>(in_c) * k * k;
    w.init(name + ".w", static_cast<size_t>(out_c) * fan_in);
    const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& x : w.w) x = static_cast<float>(sigma * rng.normal());
    if (has_bias) b.init(name + ".b", out_c);
}

void Conv2d::forward(const float* x, int h, int wd, float* y,
                     ConvWorkspace& ws) const {
    const size_t hw = static_cast<size_t>(h) * wd;
    const size_t K = static_cast<size_t>(in_c) * k * k;
    if (ws.col.size() < K * hw) ws.col.resize(K * hw);
    im2col(x, in_c, h, wd, k, ws.col.data());

    MapC wm(w.w.data(), out_c, K);
    MapC cm(ws.col.data(), K, hw);
    MapM ym(y, out_c, hw);
    ym.noalias() = wm * cm;
    if (has_bias)
        for (int oc = 0; oc < out_c; ++oc) ym.row(oc).array() += b.w[oc];
}

void Conv2d::backward(const float* x, int h, int wd, const float* gy,
                      float* gx, ConvWorkspace& ws) {
    const size_t hw = static_cast<size_t>(h) * wd;
    const size_t K = static_cast<size_t>(in_c) * k * k;
    if (ws.col.size() < K * hw) ws.col.resize(K * hw);
    im2col(x, in_c, h, wd, k, ws.col.data());

    MapC gym(gy, out_c, hw);
    MapC cm(ws.col.data(), K, hw);
    MapM gwm(w.g.data(), out_c, K);
    gwm.noalias() += gym * cm.transpose();

    if (has_bias) {
        for (int oc = 0; oc < out_c; ++oc) {
            double s = 0.0;
            const float* row = gy + static_cast<size_t>(oc) * hw;
            for (size_t i = 0; i < hw; ++i) s += row[i];
            b.g[oc] += static_cast<float>(s);
        }
    }

    if (gx) {
        if (ws.dcol.size() < K * hw) ws.dcol.resize(K * hw);
        MapC wm(w.w.data(), out_c, K);
        MapM dcm(ws.dcol.data(), K, hw);
        dcm.noalias() = wm.transpose() * gym;
        col2im_add(ws.dcol.data(), in_c, h, wd, k, gx);
    }
}

void BatchNorm::init(const std::string& name, int channels) {
    c = channels;
    gamma.init(name + ".gamma", c);
    beta.init(name + ".beta", c);
    std::fill(gamma.w.begin(), gamma.w.end(), 1.0f);
    run_mean.assign(c, 0.0f);
    run_var.assign(c, 1.0f);
}

void BatchNorm::forward_train(const Tensor& x, Tensor& y, Cache& cache) {
    if (x.c != c) throw ConfigError("BatchNorm: channel mismatch");
    y.resize(x.n, x.c, x.h, x.w);
    cache.xhat.assign(x.v.size(), 0.0f);
    cache.inv_std.assign(c, 0.0);
    cache.n = x.n, cache.h = x.h, cache.w = x.w;

    const size_t plane = static_cast<size_t>(x.h) * x.w;
    const size_t item = x.item_size();
    const double m = static_cast<double>(x.n) * plane;

    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0, sq = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.v.data() + item * i + plane * ch;
            for (size_t j = 0; j < plane; ++j) {
                sum += p[j];
                sq += static_cast<double>(p[j]) * p[j];
            }
        }
        const double mean = sum / m;
        const double var = std::max(sq / m - mean * mean, 0.0);
        const double inv = 1.0 / std::sqrt(var + eps);
        cache.inv_std[ch] = inv;

        const float g = gamma.w[ch], bta = beta.w[ch];
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.v.data() + item * i + plane * ch;
            float* xh = cache.xhat.data() + item * i + plane * ch;
            float* q = y.v.data() + item * i + plane * ch;
            for (size_t j = 0; j < plane; ++j) {
                const float h = static_cast<float>((p[j] - mean) * inv);
                xh[j] = h;
                q[j] = g * h + bta;
            }
        }
        run_mean[ch] = (1.0f - momentum) * run_mean[ch] +
                       momentum * static_cast<float>(mean);
        run_var[ch] =
            (1.0f - momentum) * run_var[ch] + momentum * static_cast<float>(var);
    }
}

void BatchNorm::forward_eval(const Tensor& x, Tensor& y) const {
    if (x.c != c) throw ConfigError("BatchNorm: channel mismatch");
    y.resize(x.n, x.c, x.h, x.w);
    const size_t plane = static_cast<size_t>(x.h) * x.w;
    const size_t item = x.item_size();
    for (int ch = 0; ch < c; ++ch) {
        const double inv = 1.0 / std::sqrt(static_cast<double>(run_var[ch]) + eps);
        const double mean = run_mean[ch];
        const float g = gamma.w[ch], bta = beta.w[ch];
        for (int i = 0; i < x.n; ++i) {
            const float* p = x.v.data() + item * i + plane * ch;
            float* q = y.v.data() + item * i + plane * ch;
            for (size_t j = 0; j < plane; ++j)
                q[j] = static_cast<float>(g * ((p[j] - mean) * inv) + bta);
        }
    }
}

void BatchNorm::backward(const Cache& cache, const Tensor& gy, Tensor& gx) {
    gx.resize(gy.n, gy.c, gy.h, gy.w);
    const size_t plane = static_cast<size_t>(gy.h) * gy.w;
    const size_t item = gy.item_size();
    const double m = static_cast<double>(gy.n) * plane;

    for (int ch = 0; ch < c; ++ch) {
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < gy.n; ++i) {
            const float* g = gy.v.data() + item * i + plane * ch;
            const float* xh = cache.xhat.data() + item * i + plane * ch;
            for (size_t j = 0; j < plane; ++j) {
                s1 += g[j];
                s2 += static_cast<double>(g[j]) * xh[j];
            }
        }
        beta.g[ch] += static_cast<float>(s1);
        gamma.g[ch] += static_cast<float>(s2);

        const double scale = gamma.w[ch] * cache.inv_std[ch];
        for (int i = 0; i < gy.n; ++i) {
            const float* g = gy.v.data() + item * i + plane * ch;
            const float* xh = cache.xhat.data() + item * i + plane * ch;
            float* out = gx.v.data() + item * i + plane * ch;
            for (size_t j = 0; j < plane; ++j)
                out[j] = static_cast<float>(
                    scale * (g[j] - (s1 + static_cast<double>(xh[j]) * s2) / m));
        }
    }
}

void Dense::init(const std::string& name, int in_features, int out_features,
                 double weight_sigma, Rng& rng) {
    in_f = in_features;
    out_f = out_features;
    w.init(name + ".w", static_cast<size_t>(in_f) * out_f);
    for (auto& x : w.w) x = static_cast<float>(weight_sigma * rng.normal());
    b.init(name + ".b", out_f);
}

void Dense::forward(const float* x, int batch, float* y) const {
    MapC xm(x, batch, in_f);
    MapC wm(w.w.data(), in_f, out_f);
    MapM ym(y, batch, out_f);
    ym.noalias() = xm * wm;
    Eigen::Map<const Eigen::RowVectorXf> bv(b.w.data(), out_f);
    ym.rowwise() += bv;
}

void Dense::backward(const float* x, int batch, const float* gy, float* gx) {
    MapC xm(x, batch, in_f);
    MapC gym(gy, batch, out_f);
    MapM gwm(w.g.data(), in_f, out_f);
    gwm.noalias() += xm.transpose() * gym;
    // Fixed-order accumulation: Eigen's partial reduction regroups with the
    // heap alignment of gy, which breaks bitwise run-to-run reproducibility.
    for (int i = 0; i < batch; ++i) {
        const float* row = gy + static_cast<size_t>(i) * out_f;
        for (int j = 0; j < out_f; ++j) b.g[j] += row[j];
    }
    if (gx) {
        MapC wm(w.w.data(), in_f, out_f);
        MapM gxm(gx, batch, in_f);
        gxm.noalias() = gym * wm.transpose();
    }
}

void relu_forward(float* x, size_t count) {
    for (size_t i = 0; i < count; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* y, float* g, size_t count) {
    for (size_t i = 0; i < count; ++i)
        if (y[i] <= 0.0f) g[i] = 0.0f;
}

void MaxPool2::forward(const Tensor& x, Tensor& y, std::vector<uint32_t>& idx) {
    const int h2 = x.h / 2, w2 = x.w / 2;
    y.resize(x.n, x.c, h2, w2);
    idx.assign(y.v.size(), 0);

    const size_t in_item = x.item_size();
    size_t o = 0;
    for (int i = 0; i < x.n; ++i) {
        const float* base = x.v.data() + in_item * i;
        for (int ch = 0; ch < x.c; ++ch) {
            const float* plane = base + static_cast<size_t>(ch) * x.h * x.w;
            for (int r = 0; r < h2; ++r) {
                for (int cc = 0; cc < w2; ++cc, ++o) {
                    const size_t p0 =
                        static_cast<size_t>(ch) * x.h * x.w +
                        static_cast<size_t>(2 * r) * x.w + 2 * cc;
                    size_t best = p0;
                    float bv = base[p0];
                    const size_t cand[3] = {p0 + 1, p0 + x.w, p0 + x.w + 1};
                    for (size_t cn : cand)
                        if (base[cn] > bv) bv = base[cn], best = cn;
                    y.v[o] = bv;
                    idx[o] = static_cast<uint32_t>(best);
                    (void)plane;
                }
            }
        }
    }
}

void MaxPool2::backward(const Tensor& gy, const std::vector<uint32_t>& idx,
                        Tensor& gx) {
    std::fill(gx.v.begin(), gx.v.end(), 0.0f);
    const size_t out_item = gy.item_size();
    const size_t in_item = gx.item_size();
    for (int i = 0; i < gy.n; ++i) {
        const float* g = gy.v.data() + out_item * i;
        float* dst = gx.v.data() + in_item * i;
        const uint32_t* id = idx.data() + out_item * i;
        for (size_t j = 0; j < out_item; ++j) dst[id[j]] += g[j];
    }
}

void InceptionBlock::init(const std::string& name, int in_channels,
                          int filters, Rng& rng) {
    in_c = in_channels;
    n = filters;
    c3.init(name + ".c3", in_c, n, 3, false, rng);
    c5.init(name + ".c5", in_c, n, 5, false, rng);
    c7.init(name + ".c7", in_c, n, 7, false, rng);
    bn3.init(name + ".bn3", n);
    bn5.init(name + ".bn5", n);
    bn7.init(name + ".bn7", n);
}

namespace {

// Gathers one branch tensor out of the stacked gradient / writes a branch
// result into its channel slice of the stacked output.
void copy_branch(const Tensor& src, Tensor& dst, int src_c0, int dst_c0,
                 int channels) {
    const size_t plane = static_cast<size_t>(src.h) * src.w;
    for (int i = 0; i < src.n; ++i) {
        const float* s = src.item(i) + plane * src_c0;
        float* d = dst.item(i) + plane * dst_c0;
        std::copy(s, s + plane * channels, d);
    }
}

}  // namespace

void InceptionBlock::forward_train(const Tensor& x, Tensor& out, Cache& cache,
                                   ConvWorkspace& ws) {
    out.resize(x.n, 3 * n, x.h, x.w);
    Tensor pre, post;
    pre.resize(x.n, n, x.h, x.w);

    Conv2d* convs[3] = {&c3, &c5, &c7};
    BatchNorm* norms[3] = {&bn3, &bn5, &bn7};
    BatchNorm::Cache* caches[3] = {&cache.b3, &cache.b5, &cache.b7};
    for (int br = 0; br < 3; ++br) {
        for (int i = 0; i < x.n; ++i)
            convs[br]->forward(x.item(i), x.h, x.w, pre.item(i), ws);
        norms[br]->forward_train(pre, post, *caches[br]);
        relu_forward(post.v.data(), post.v.size());
        copy_branch(post, out, 0, br * n, n);
    }
    cache.concat = out;  // kept for the ReLU mask in backward
}

void InceptionBlock::forward_eval(const Tensor& x, Tensor& out,
                                  ConvWorkspace& ws) const {
    out.resize(x.n, 3 * n, x.h, x.w);
    Tensor pre, post;
    pre.resize(x.n, n, x.h, x.w);

    const Conv2d* convs[3] = {&c3, &c5, &c7};
    const BatchNorm* norms[3] = {&bn3, &bn5, &bn7};
    for (int br = 0; br < 3; ++br) {
        for (int i = 0; i < x.n; ++i)
            convs[br]->forward(x.item(i), x.h, x.w, pre.item(i), ws);
        norms[br]->forward_eval(pre, post);
        relu_forward(post.v.data(), post.v.size());
        copy_branch(post, out, 0, br * n, n);
    }
}

void InceptionBlock::backward(const Tensor& x, const Cache& cache,
                              const Tensor& gout, Tensor* gx,
                              ConvWorkspace& ws) {
    Tensor gbranch, gpre;
    gbranch.resize(x.n, n, x.h, x.w);

    Conv2d* convs[3] = {&c3, &c5, &c7};
    BatchNorm* norms[3] = {&bn3, &bn5, &bn7};
    const BatchNorm::Cache* caches[3] = {&cache.b3, &cache.b5, &cache.b7};
    const size_t plane = static_cast<size_t>(x.h) * x.w;

    for (int br = 0; br < 3; ++br) {
        // slice the stacked gradient and apply the ReLU mask
        for (int i = 0; i < x.n; ++i) {
            const float* g = gout.item(i) + plane * br * n;
            const float* y = cache.concat.item(i) + plane * br * n;
            float* d = gbranch.item(i);
            for (size_t j = 0; j < plane * n; ++j)
                d[j] = y[j] > 0.0f ? g[j] : 0.0f;
        }
        norms[br]->backward(*caches[br], gbranch, gpre);
        for (int i = 0; i < x.n; ++i)
            convs[br]->backward(x.item(i), x.h, x.w, gpre.item(i),
                                gx ? gx->item(i) : nullptr, ws);
    }
}

std::vector<Param*> InceptionBlock::params() {
    return {&c3.w, &c5.w, &c7.w,       &bn3.gamma, &bn3.beta,
            &bn5.gamma, &bn5.beta, &bn7.gamma, &bn7.beta};
}

}  // namespace weavematch::nn
