#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mgd/rng.hpp"
#include "mgd/tensor.hpp"

// Layer registration/apply helpers on top of the op vocabulary. Parameters
// are registered under dotted names ("unet.down0.conv1.w") so checkpoints
// stay self-describing.

namespace mgd {

template <typename S>
Tensor<S> init_normal(Shape shape, Rng& rng, double stddev) {
    Tensor<S> t = Tensor<S>::zeros(std::move(shape));
    for (auto& v : t.node()->value) v = S(rng.normal() * stddev);
    return t;
}

// fan-in scaled init, gain ~ sqrt(2) for silu nets
template <typename S>
Tensor<S> init_kaiming(Shape shape, Rng& rng, int64_t fan_in, double gain = std::sqrt(2.0)) {
    return init_normal<S>(std::move(shape), rng, gain / std::sqrt(double(fan_in)));
}

template <typename S>
void add_linear(ParamStore<S>& ps, const std::string& name, int64_t in, int64_t out, Rng& rng,
                double gain = std::sqrt(2.0)) {
    ps.add(name + ".w", init_kaiming<S>({in, out}, rng, in, gain));
    ps.add(name + ".b", Tensor<S>::zeros({out}));
}

template <typename S>
void add_linear_zero(ParamStore<S>& ps, const std::string& name, int64_t in, int64_t out) {
    ps.add(name + ".w", Tensor<S>::zeros({in, out}));
    ps.add(name + ".b", Tensor<S>::zeros({out}));
}

template <typename S>
Tensor<S> linear(ParamStore<S>& ps, const std::string& name, const Tensor<S>& x) {
    return add(matmul(x, ps.at(name + ".w")), ps.at(name + ".b"));
}

template <typename S>
void add_conv(ParamStore<S>& ps, const std::string& name, int64_t cin, int64_t cout, int k, Rng& rng,
              double gain = std::sqrt(2.0)) {
    ps.add(name + ".w", init_kaiming<S>({cout, cin, k, k}, rng, cin * k * k, gain));
    ps.add(name + ".b", Tensor<S>::zeros({cout}));
}

template <typename S>
void add_conv_zero(ParamStore<S>& ps, const std::string& name, int64_t cin, int64_t cout, int k) {
    ps.add(name + ".w", Tensor<S>::zeros({cout, cin, k, k}));
    ps.add(name + ".b", Tensor<S>::zeros({cout}));
}

template <typename S>
Tensor<S> conv(ParamStore<S>& ps, const std::string& name, const Tensor<S>& x, int stride = 1) {
    return conv2d(x, ps.at(name + ".w"), ps.at(name + ".b"), stride);
}

template <typename S>
void add_group_norm(ParamStore<S>& ps, const std::string& name, int64_t channels) {
    Tensor<S> gamma = Tensor<S>::zeros({channels});
    for (auto& v : gamma.node()->value) v = S(1);
    ps.add(name + ".g", gamma);
    ps.add(name + ".b", Tensor<S>::zeros({channels}));
}

template <typename S>
Tensor<S> gnorm(ParamStore<S>& ps, const std::string& name, const Tensor<S>& x, int groups = 8) {
    return group_norm(x, ps.at(name + ".g"), ps.at(name + ".b"), groups);
}

// Classic sinusoidal embedding; used for diffusion timesteps and token
// positions alike.
template <typename S>
std::vector<S> sinusoid_embedding(double pos, int dim) {
    std::vector<S> out(size_t(dim));
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * double(i) / double(half));
        out[size_t(i)] = S(std::sin(pos * freq));
        out[size_t(half + i)] = S(std::cos(pos * freq));
    }
    return out;
}

template <typename S>
Tensor<S> position_matrix(int seq_len, int dim) {
    Tensor<S> t = Tensor<S>::zeros({seq_len, dim});
    auto data = t.data();
    for (int p = 0; p < seq_len; ++p) {
        auto row = sinusoid_embedding<S>(double(p), dim);
        std::copy(row.begin(), row.end(), data.begin() + size_t(p) * dim);
    }
    return t;
}

// mean over rows: [R,C] -> [1,C]
template <typename S>
Tensor<S> mean_rows(const Tensor<S>& x) {
    int64_t rows = x.shape()[0];
    Tensor<S> ones = Tensor<S>::zeros({1, rows});
    for (auto& v : ones.node()->value) v = S(1) / S(rows);
    return matmul(ones, x);
}

// global average pool: [C,H,W] -> [1,C]
template <typename S>
Tensor<S> spatial_mean(const Tensor<S>& x) {
    int64_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
    return transpose2(matmul(reshape(x, {c, hw}), Tensor<S>::from({hw, 1}, std::vector<S>(size_t(hw), S(1) / S(hw)))));
}

}  // namespace mgd
