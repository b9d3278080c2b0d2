#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weavematch/rng.hpp"

namespace weavematch::nn {

// Minimal NCHW float32 tensor. All layer code runs on the calling thread and
// accumulates statistics in double, so results are bit-reproducible.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    void resize(int n_, int c_, int h_, int w_) {
        n = n_, c = c_, h = h_, w = w_;
        v.assign(static_cast<size_t>(n) * c * h * w, 0.0f);
    }
    size_t item_size() const { return static_cast<size_t>(c) * h * w; }
    float* item(int i) { return v.data() + item_size() * i; }
    const float* item(int i) const { return v.data() + item_size() * i; }
};

// One learnable array with its gradient and momentum buffer.
struct Param {
    std::string name;
    std::vector<float> w, g, vel;

    void init(std::string n, size_t count) {
        name = std::move(n);
        w.assign(count, 0.0f);
        g.assign(count, 0.0f);
        vel.assign(count, 0.0f);
    }
};

// Reusable im2col scratch, sized for the largest layer it has seen.
struct ConvWorkspace {
    std::vector<float> col;
    std::vector<float> dcol;
};

// Square same-padded stride-1 convolution on one CHW item. Lowered to a
// [out_c x K] * [K x HW] product (K = in_c*k*k) through Eigen.
struct Conv2d {
    int in_c = 0, out_c = 0, k = 0;
    bool has_bias = false;
    Param w;  // [out_c][in_c*k*k]
    Param b;  // [out_c]

    void init(const std::string& name, int in_channels, int out_channels,
              int kernel, bool bias, Rng& rng);
    void forward(const float* x, int h, int wd, float* y,
                 ConvWorkspace& ws) const;
    // Accumulates parameter gradients; adds input gradients into gx
    // (pass nullptr at the first layer to skip that work).
    void backward(const float* x, int h, int wd, const float* gy, float* gx,
                  ConvWorkspace& ws);
};

// Per-channel batch normalization over (N, H, W).
struct BatchNorm {
    int c = 0;
    float eps = 1e-5f;
    float momentum = 0.1f;  // running-stat update weight
    Param gamma, beta;
    std::vector<float> run_mean, run_var;

    struct Cache {
        std::vector<float> xhat;     // normalized activations
        std::vector<double> inv_std; // per channel
        int n = 0, h = 0, w = 0;
    };

    void init(const std::string& name, int channels);
    void forward_train(const Tensor& x, Tensor& y, Cache& cache);
    void forward_eval(const Tensor& x, Tensor& y) const;
    void backward(const Cache& cache, const Tensor& gy, Tensor& gx);
};

// Fully connected layer on a [batch x in_f] row-major block.
struct Dense {
    int in_f = 0, out_f = 0;
    Param w;  // [in_f][out_f]
    Param b;  // [out_f]

    void init(const std::string& name, int in_features, int out_features,
              double weight_sigma, Rng& rng);
    void forward(const float* x, int batch, float* y) const;
    void backward(const float* x, int batch, const float* gy, float* gx);
};

void relu_forward(float* x, size_t count);
// Masks gradients using the post-activation values.
void relu_backward(const float* y, float* g, size_t count);

// 2x2 max pooling with stride 2 (floor semantics on odd sides). Argmax
// offsets are recorded for the backward scatter.
struct MaxPool2 {
    static void forward(const Tensor& x, Tensor& y, std::vector<uint32_t>& idx);
    static void backward(const Tensor& gy, const std::vector<uint32_t>& idx,
                         Tensor& gx);
};

// Three parallel same-padded convolutions (3x3, 5x5, 7x7), each with n
// filters, batch norm and ReLU, stacked into a 3n-channel output. The
// convolutions are bias-free; the norm's shift takes that role.
struct InceptionBlock {
    int in_c = 0, n = 0;
    Conv2d c3, c5, c7;
    BatchNorm bn3, bn5, bn7;

    struct Cache {
        BatchNorm::Cache b3, b5, b7;
        Tensor concat;  // post-ReLU output, kept for the backward mask
    };

    void init(const std::string& name, int in_channels, int filters, Rng& rng);
    void forward_train(const Tensor& x, Tensor& out, Cache& cache,
                       ConvWorkspace& ws);
    void forward_eval(const Tensor& x, Tensor& out, ConvWorkspace& ws) const;
    // gout is the gradient at the post-ReLU output; input gradients are
    // accumulated into gx unless it is null.
    void backward(const Tensor& x, const Cache& cache, const Tensor& gout,
                  Tensor* gx, ConvWorkspace& ws);

    std::vector<Param*> params();
};

}  // namespace weavematch::nn
