#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mgd/common.hpp"
#include "mgd/rng.hpp"

// Dense-tensor arithmetic with reverse-mode gradients over a closed op
// vocabulary. Each op builder runs the forward computation immediately and
// links a graph node; backward() walks the graph in reverse topological
// order. The graph is held by shared_ptr links only, so independent graphs
// can live on different threads.

namespace mgd {

enum class Op {
    leaf,
    matmul,
    conv3x3,
    conv1x1,
    group_norm,
    silu,
    softmax,
    attention,
    add,
    mul,
    mean_square,
    normalize_rows,
    infonce_pair,
    embed,
    concat0,
    upsample2,
    reshape,
    transpose2,
};

template <typename S>
struct Node {
    Op op = Op::leaf;
    Shape shape;
    std::vector<S> value;
    std::vector<S> grad;  // allocated lazily; persists on leaves
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<S>>> inputs;

    // op attributes
    int stride = 1;
    int heads = 1;
    int groups = 8;
    S alpha = S(1), beta = S(1);
    std::vector<int> ids;    // embed token ids
    std::vector<S> saved;    // op-specific stash for the adjoint
    std::vector<S> saved2;

    int64_t numel() const { return mgd::numel(shape); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), S(0));
    }
};

template <typename S>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node<S>> n) : n_(std::move(n)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto n = std::make_shared<Node<S>>();
        n->shape = std::move(shape);
        n->value.assign(size_t(n->numel()), S(0));
        n->requires_grad = requires_grad;
        if (requires_grad) n->ensure_grad();
        return Tensor(std::move(n));
    }

    static Tensor from(Shape shape, std::vector<S> data, bool requires_grad = false) {
        if (mgd::numel(shape) != int64_t(data.size()))
            throw ShapeError("tensor init: shape " + shape_str(shape) + " wants " +
                             std::to_string(mgd::numel(shape)) + " values, got " + std::to_string(data.size()));
        auto n = std::make_shared<Node<S>>();
        n->shape = std::move(shape);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        if (requires_grad) n->ensure_grad();
        return Tensor(std::move(n));
    }

    static Tensor scalar(S v) { return from({1}, {v}); }

    static Tensor randn(Shape shape, Rng& rng, S scale = S(1), bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        for (auto& v : t.node()->value) v = S(rng.normal()) * scale;
        return t;
    }

    bool defined() const { return bool(n_); }
    const Shape& shape() const { return n_->shape; }
    int64_t numel() const { return n_->numel(); }
    bool requires_grad() const { return n_->requires_grad; }

    std::span<S> data() { return {n_->value.data(), n_->value.size()}; }
    std::span<const S> data() const { return {n_->value.data(), n_->value.size()}; }
    std::span<S> grad() {
        n_->ensure_grad();
        return {n_->grad.data(), n_->grad.size()};
    }

    S item() const {
        if (n_->numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(n_->shape));
        return n_->value[0];
    }

    std::shared_ptr<Node<S>>& node() { return n_; }
    const std::shared_ptr<Node<S>>& node() const { return n_; }

private:
    std::shared_ptr<Node<S>> n_;
};

// ---------------------------------------------------------------------------
// GEMM kernels. A, B, C are row-major; C is accumulated into.

template <typename S>
void gemm_nn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n;
        for (int64_t p = 0; p < k; ++p) {
            S av = arow[p];
            if (av == S(0)) continue;
            const S* brow = b + p * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A^T B with A stored [k,m]
template <typename S>
void gemm_tn(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t p = 0; p < k; ++p) {
        const S* arow = a + p * m;
        const S* brow = b + p * n;
        for (int64_t i = 0; i < m; ++i) {
            S av = arow[i];
            if (av == S(0)) continue;
            S* crow = c + i * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A B^T with B stored [n,k]
template <typename S>
void gemm_nt(const S* a, const S* b, S* c, int64_t m, int64_t k, int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const S* brow = b + j * k;
            S acc = S(0);
            for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

namespace detail {

template <typename S>
std::shared_ptr<Node<S>> make_node(Op op, Shape shape, std::vector<std::shared_ptr<Node<S>>> inputs) {
    auto n = std::make_shared<Node<S>>();
    n->op = op;
    n->shape = std::move(shape);
    n->value.assign(size_t(n->numel()), S(0));
    n->inputs = std::move(inputs);
    for (auto& in : n->inputs)
        if (in->requires_grad) n->requires_grad = true;
    return n;
}

inline int64_t conv_out(int64_t in, int stride) { return (in + 2 - 3) / stride + 1; }

// im2col for 3x3 same-padding convolution; cols is [Cin*9, Ho*Wo] (k-major).
template <typename S>
void im2col3(const S* x, int64_t C, int64_t H, int64_t W, int stride, S* cols) {
    int64_t Ho = conv_out(H, stride), Wo = conv_out(W, stride);
    int64_t hw = Ho * Wo;
    for (int64_t ci = 0; ci < C; ++ci) {
        const S* xc = x + ci * H * W;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                S* row = cols + (ci * 9 + ky * 3 + kx) * hw;
                int64_t idx = 0;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= H) {
                        for (int64_t ox = 0; ox < Wo; ++ox) row[idx++] = S(0);
                        continue;
                    }
                    const S* xr = xc + iy * W;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride + kx - 1;
                        row[idx++] = (ix < 0 || ix >= W) ? S(0) : xr[ix];
                    }
                }
            }
        }
    }
}

template <typename S>
void col2im3(const S* cols, int64_t C, int64_t H, int64_t W, int stride, S* dx) {
    int64_t Ho = conv_out(H, stride), Wo = conv_out(W, stride);
    int64_t hw = Ho * Wo;
    for (int64_t ci = 0; ci < C; ++ci) {
        S* xc = dx + ci * H * W;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const S* row = cols + (ci * 9 + ky * 3 + kx) * hw;
                int64_t idx = 0;
                for (int64_t oy = 0; oy < Ho; ++oy) {
                    int64_t iy = oy * stride + ky - 1;
                    if (iy < 0 || iy >= H) {
                        idx += Wo;
                        continue;
                    }
                    S* xr = xc + iy * W;
                    for (int64_t ox = 0; ox < Wo; ++ox) {
                        int64_t ix = ox * stride + kx - 1;
                        if (ix >= 0 && ix < W) xr[ix] += row[idx];
                        ++idx;
                    }
                }
            }
        }
    }
}

template <typename S>
void softmax_rows_inplace(S* x, int64_t rows, int64_t cols) {
    for (int64_t r = 0; r < rows; ++r) {
        S* row = x + r * cols;
        S mx = row[0];
        for (int64_t j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
        S sum = S(0);
        for (int64_t j = 0; j < cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        S inv = S(1) / sum;
        for (int64_t j = 0; j < cols; ++j) row[j] *= inv;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Op builders.

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b, bool ta = false, bool tb = false) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.size() != 2 || sb.size() != 2)
        throw ShapeError("matmul: expected rank-2 inputs, got " + shape_str(sa) + " and " + shape_str(sb));
    int64_t m = ta ? sa[1] : sa[0];
    int64_t k = ta ? sa[0] : sa[1];
    int64_t kb = tb ? sb[1] : sb[0];
    int64_t n = tb ? sb[0] : sb[1];
    if (k != kb)
        throw ShapeError("matmul: inner dimension mismatch " + std::to_string(k) + " vs " + std::to_string(kb));
    auto node = detail::make_node<S>(Op::matmul, {m, n}, {a.node(), b.node()});
    node->alpha = ta ? S(1) : S(0);  // repurposed as transpose flags
    node->beta = tb ? S(1) : S(0);
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* pc = node->value.data();
    if (!ta && !tb)
        gemm_nn(pa, pb, pc, m, k, n);
    else if (ta && !tb)
        gemm_tn(pa, pb, pc, m, k, n);
    else if (!ta && tb)
        gemm_nt(pa, pb, pc, m, k, n);
    else {  // ta && tb: (B^T A^T)^T; rare, do it the slow way
        for (int64_t i = 0; i < m; ++i)
            for (int64_t j = 0; j < n; ++j) {
                S acc = S(0);
                for (int64_t p = 0; p < k; ++p) acc += pa[p * m + i] * pb[j * k + p];
                pc[i * n + j] = acc;
            }
    }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& bias, int stride = 1) {
    const auto& sx = x.shape();
    const auto& sw = w.shape();
    if (sx.size() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_str(sx));
    if (sw.size() != 4 || (sw[2] != sw[3]) || (sw[2] != 1 && sw[2] != 3))
        throw ShapeError("conv2d: weight must be [Co,Ci,1,1] or [Co,Ci,3,3], got " + shape_str(sw));
    if (stride != 1 && stride != 2) throw ShapeError("conv2d: stride must be 1 or 2");
    if (sw[1] != sx[0])
        throw ShapeError("conv2d: weight expects " + std::to_string(sw[1]) + " input channels, input has " +
                         std::to_string(sx[0]));
    int64_t Co = sw[0], Ci = sx[0], H = sx[1], W = sx[2];
    bool k3 = sw[2] == 3;
    if (bias.shape() != Shape{Co})
        throw ShapeError("conv2d: bias must be [" + std::to_string(Co) + "], got " + shape_str(bias.shape()));
    int64_t Ho = k3 ? detail::conv_out(H, stride) : (H - 1) / stride + 1;
    int64_t Wo = k3 ? detail::conv_out(W, stride) : (W - 1) / stride + 1;
    int64_t hw = Ho * Wo;
    auto node = detail::make_node<S>(k3 ? Op::conv3x3 : Op::conv1x1, {Co, Ho, Wo}, {x.node(), w.node(), bias.node()});
    node->stride = stride;
    S* y = node->value.data();
    if (k3) {
        std::vector<S> cols(size_t(Ci * 9 * hw));
        detail::im2col3(x.data().data(), Ci, H, W, stride, cols.data());
        gemm_nn(w.data().data(), cols.data(), y, Co, Ci * 9, hw);
        if (node->requires_grad) node->saved = std::move(cols);
    } else {
        const S* px = x.data().data();
        if (stride == 1) {
            gemm_nn(w.data().data(), px, y, Co, Ci, hw);
        } else {
            std::vector<S> xs(size_t(Ci * hw));
            for (int64_t ci = 0; ci < Ci; ++ci)
                for (int64_t oy = 0; oy < Ho; ++oy)
                    for (int64_t ox = 0; ox < Wo; ++ox)
                        xs[(ci * Ho + oy) * Wo + ox] = px[(ci * H + oy * stride) * W + ox * stride];
            gemm_nn(w.data().data(), xs.data(), y, Co, Ci, hw);
            if (node->requires_grad) node->saved = std::move(xs);
        }
    }
    const S* pb = bias.data().data();
    for (int64_t co = 0; co < Co; ++co) {
        S bv = pb[co];
        S* row = y + co * hw;
        for (int64_t i = 0; i < hw; ++i) row[i] += bv;
    }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> group_norm(const Tensor<S>& x, const Tensor<S>& gamma, const Tensor<S>& beta, int groups = 8,
                     S eps = S(1e-5)) {
    const auto& sx = x.shape();
    if (sx.size() != 3) throw ShapeError("group_norm: input must be [C,H,W], got " + shape_str(sx));
    int64_t C = sx[0], H = sx[1], W = sx[2];
    if (C % groups != 0)
        throw ShapeError("group_norm: channels " + std::to_string(C) + " not divisible by groups " +
                         std::to_string(groups));
    if (gamma.shape() != Shape{C} || beta.shape() != Shape{C})
        throw ShapeError("group_norm: scale/shift must be [" + std::to_string(C) + "]");
    auto node = detail::make_node<S>(Op::group_norm, sx, {x.node(), gamma.node(), beta.node()});
    node->groups = groups;
    int64_t cg = C / groups, spatial = H * W, gn = cg * spatial;
    const S* px = x.data().data();
    const S* pg = gamma.data().data();
    const S* pbeta = beta.data().data();
    S* py = node->value.data();
    node->saved.resize(size_t(2 * groups));  // mean, istd per group
    for (int g = 0; g < groups; ++g) {
        const S* xg = px + g * cg * spatial;
        S mean = S(0);
        for (int64_t i = 0; i < gn; ++i) mean += xg[i];
        mean /= S(gn);
        S var = S(0);
        for (int64_t i = 0; i < gn; ++i) {
            S d = xg[i] - mean;
            var += d * d;
        }
        var /= S(gn);
        S istd = S(1) / std::sqrt(var + eps);
        node->saved[size_t(2 * g)] = mean;
        node->saved[size_t(2 * g + 1)] = istd;
        for (int64_t c = 0; c < cg; ++c) {
            int64_t ch = g * cg + c;
            const S* xr = px + ch * spatial;
            S* yr = py + ch * spatial;
            S gam = pg[ch], bet = pbeta[ch];
            for (int64_t i = 0; i < spatial; ++i) yr[i] = gam * (xr[i] - mean) * istd + bet;
        }
    }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> silu(const Tensor<S>& x) {
    auto node = detail::make_node<S>(Op::silu, x.shape(), {x.node()});
    const S* px = x.data().data();
    S* py = node->value.data();
    int64_t n = node->numel();
    node->saved.resize(size_t(n));
    for (int64_t i = 0; i < n; ++i) {
        S sg = S(1) / (S(1) + std::exp(-px[i]));
        node->saved[size_t(i)] = sg;
        py[i] = px[i] * sg;
    }
    return Tensor<S>(node);
}

// softmax over the last dimension of a rank-2 tensor
template <typename S>
Tensor<S> softmax(const Tensor<S>& x) {
    const auto& sx = x.shape();
    if (sx.size() != 2) throw ShapeError("softmax: expected [rows,cols], got " + shape_str(sx));
    auto node = detail::make_node<S>(Op::softmax, sx, {x.node()});
    node->value.assign(x.data().begin(), x.data().end());
    detail::softmax_rows_inplace(node->value.data(), sx[0], sx[1]);
    return Tensor<S>(node);
}

// Fused scaled-dot-product attention; the head split of the model dimension
// happens inside the op so QKV projections stay plain matmuls.
template <typename S>
Tensor<S> attention(const Tensor<S>& q, const Tensor<S>& k, const Tensor<S>& v, int heads) {
    const auto& sq = q.shape();
    const auto& sk = k.shape();
    const auto& sv = v.shape();
    if (sq.size() != 2 || sk.size() != 2 || sv.size() != 2)
        throw ShapeError("attention: q,k,v must be rank-2 token matrices");
    if (sq[1] != sk[1] || sk != sv)
        throw ShapeError("attention: dim mismatch q" + shape_str(sq) + " k" + shape_str(sk) + " v" + shape_str(sv));
    int64_t dm = sq[1];
    if (heads < 1 || dm % heads != 0)
        throw ShapeError("attention: model dim " + std::to_string(dm) + " not divisible by heads " +
                         std::to_string(heads));
    int64_t nq = sq[0], nk = sk[0], dh = dm / heads;
    auto node = detail::make_node<S>(Op::attention, {nq, dm}, {q.node(), k.node(), v.node()});
    node->heads = heads;
    node->saved.resize(size_t(heads * nq * nk));  // per-head attention weights
    const S scale = S(1) / std::sqrt(S(dh));
    const S* pq = q.data().data();
    const S* pk = k.data().data();
    const S* pv = v.data().data();
    S* py = node->value.data();
    std::vector<S> qh(size_t(nq * dh)), kh(size_t(nk * dh)), vh(size_t(nk * dh)), oh(size_t(nq * dh));
    for (int h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < nq; ++i)
            std::copy_n(pq + i * dm + h * dh, dh, qh.data() + i * dh);
        for (int64_t i = 0; i < nk; ++i) {
            std::copy_n(pk + i * dm + h * dh, dh, kh.data() + i * dh);
            std::copy_n(pv + i * dm + h * dh, dh, vh.data() + i * dh);
        }
        S* attn = node->saved.data() + size_t(h) * nq * nk;
        std::fill_n(attn, nq * nk, S(0));
        gemm_nt(qh.data(), kh.data(), attn, nq, dh, nk);
        for (int64_t i = 0; i < nq * nk; ++i) attn[i] *= scale;
        detail::softmax_rows_inplace(attn, nq, nk);
        std::fill(oh.begin(), oh.end(), S(0));
        gemm_nn(attn, vh.data(), oh.data(), nq, nk, dh);
        for (int64_t i = 0; i < nq; ++i)
            std::copy_n(oh.data() + i * dh, dh, py + i * dm + h * dh);
    }
    return Tensor<S>(node);
}

namespace detail {
enum class Bcast { same, channel, row, scalar };

template <typename S>
Bcast bcast_kind(const Shape& a, const Shape& b) {
    if (a == b) return Bcast::same;
    if (numel(b) == 1) return Bcast::scalar;
    if (a.size() == 3 && (b == Shape{a[0]} || b == Shape{a[0], 1, 1})) return Bcast::channel;
    if (a.size() == 2 && b == Shape{a[1]}) return Bcast::row;
    throw ShapeError("broadcast: cannot align " + shape_str(b) + " to " + shape_str(a));
}
}  // namespace detail

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b, S alpha = S(1), S beta = S(1)) {
    auto kind = detail::bcast_kind<S>(a.shape(), b.shape());
    auto node = detail::make_node<S>(Op::add, a.shape(), {a.node(), b.node()});
    node->alpha = alpha;
    node->beta = beta;
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* py = node->value.data();
    int64_t n = node->numel();
    switch (kind) {
        case detail::Bcast::same:
            for (int64_t i = 0; i < n; ++i) py[i] = alpha * pa[i] + beta * pb[i];
            break;
        case detail::Bcast::scalar: {
            S bv = beta * pb[0];
            for (int64_t i = 0; i < n; ++i) py[i] = alpha * pa[i] + bv;
            break;
        }
        case detail::Bcast::channel: {
            int64_t spatial = a.shape()[1] * a.shape()[2];
            for (int64_t c = 0; c < a.shape()[0]; ++c) {
                S bv = beta * pb[c];
                for (int64_t i = 0; i < spatial; ++i) py[c * spatial + i] = alpha * pa[c * spatial + i] + bv;
            }
            break;
        }
        case detail::Bcast::row: {
            int64_t rows = a.shape()[0], cols = a.shape()[1];
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < cols; ++j) py[r * cols + j] = alpha * pa[r * cols + j] + beta * pb[j];
            break;
        }
    }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    return add(a, b, S(1), S(-1));
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    if (!(a.shape() == b.shape() || b.numel() == 1))
        throw ShapeError("mul: shapes must match or rhs be scalar, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    auto node = detail::make_node<S>(Op::mul, a.shape(), {a.node(), b.node()});
    const S* pa = a.data().data();
    const S* pb = b.data().data();
    S* py = node->value.data();
    int64_t n = node->numel();
    if (b.numel() == 1) {
        for (int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[0];
    } else {
        for (int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
    }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> mean_square(const Tensor<S>& x) {
    auto node = detail::make_node<S>(Op::mean_square, {1}, {x.node()});
    const S* px = x.data().data();
    int64_t n = x.numel();
    S acc = S(0);
    for (int64_t i = 0; i < n; ++i) acc += px[i] * px[i];
    node->value[0] = acc / S(n);
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> normalize_rows(const Tensor<S>& x, S eps = S(1e-12)) {
    const auto& sx = x.shape();
    if (sx.size() != 2) throw ShapeError("normalize_rows: expected [rows,cols], got " + shape_str(sx));
    auto node = detail::make_node<S>(Op::normalize_rows, sx, {x.node()});
    int64_t rows = sx[0], cols = sx[1];
    node->saved.resize(size_t(rows));
    const S* px = x.data().data();
    S* py = node->value.data();
    for (int64_t r = 0; r < rows; ++r) {
        const S* xr = px + r * cols;
        S nrm = S(0);
        for (int64_t j = 0; j < cols; ++j) nrm += xr[j] * xr[j];
        nrm = std::max(std::sqrt(nrm), eps);
        node->saved[size_t(r)] = nrm;
        S inv = S(1) / nrm;
        for (int64_t j = 0; j < cols; ++j) py[r * cols + j] = xr[j] * inv;
    }
    return Tensor<S>(node);
}

// Symmetric InfoNCE over a square logit matrix whose diagonal holds the
// positives: mean of row-wise and column-wise cross entropies.
template <typename S>
Tensor<S> infonce_pair(const Tensor<S>& logits) {
    const auto& sl = logits.shape();
    if (sl.size() != 2 || sl[0] != sl[1])
        throw ShapeError("infonce_pair: logits must be square, got " + shape_str(sl));
    int64_t n = sl[0];
    auto node = detail::make_node<S>(Op::infonce_pair, {1}, {logits.node()});
    const S* pl = logits.data().data();
    node->saved.assign(pl, pl + n * n);   // row softmax
    node->saved2.resize(size_t(n * n));   // col softmax
    detail::softmax_rows_inplace(node->saved.data(), n, n);
    // column softmax via transpose
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < n; ++j) node->saved2[size_t(j * n + i)] = pl[i * n + j];
    detail::softmax_rows_inplace(node->saved2.data(), n, n);
    S loss = S(0);
    for (int64_t i = 0; i < n; ++i) {
        // stable logsumexp per row / column
        S rmax = pl[i * n], cmax = pl[i];
        for (int64_t j = 1; j < n; ++j) {
            rmax = std::max(rmax, pl[i * n + j]);
            cmax = std::max(cmax, pl[j * n + i]);
        }
        S rsum = S(0), csum = S(0);
        for (int64_t j = 0; j < n; ++j) {
            rsum += std::exp(pl[i * n + j] - rmax);
            csum += std::exp(pl[j * n + i] - cmax);
        }
        S diag = pl[i * n + i];
        loss += (std::log(rsum) + rmax - diag) + (std::log(csum) + cmax - diag);
    }
    node->value[0] = loss / S(2 * n);
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> embed(const Tensor<S>& table, const std::vector<int>& ids) {
    const auto& st = table.shape();
    if (st.size() != 2) throw ShapeError("embed: table must be [vocab,dim], got " + shape_str(st));
    for (int id : ids)
        if (id < 0 || id >= st[0]) throw ShapeError("embed: token id " + std::to_string(id) + " out of range");
    auto node = detail::make_node<S>(Op::embed, {int64_t(ids.size()), st[1]}, {table.node()});
    node->ids = ids;
    const S* pt = table.data().data();
    S* py = node->value.data();
    for (size_t i = 0; i < ids.size(); ++i) std::copy_n(pt + int64_t(ids[i]) * st[1], st[1], py + int64_t(i) * st[1]);
    return Tensor<S>(node);
}

// Concatenation along axis 0 (channel axis for [C,H,W], row axis for [R,C]).
template <typename S>
Tensor<S> concat0(const Tensor<S>& a, const Tensor<S>& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.size() != sb.size() || sa.size() < 1)
        throw ShapeError("concat0: rank mismatch " + shape_str(sa) + " vs " + shape_str(sb));
    for (size_t i = 1; i < sa.size(); ++i)
        if (sa[i] != sb[i])
            throw ShapeError("concat0: trailing dim " + std::to_string(i) + " differs: " + shape_str(sa) + " vs " +
                             shape_str(sb));
    Shape out = sa;
    out[0] += sb[0];
    auto node = detail::make_node<S>(Op::concat0, out, {a.node(), b.node()});
    std::copy(a.data().begin(), a.data().end(), node->value.begin());
    std::copy(b.data().begin(), b.data().end(), node->value.begin() + a.numel());
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> upsample2(const Tensor<S>& x) {
    const auto& sx = x.shape();
    if (sx.size() != 3) throw ShapeError("upsample2: input must be [C,H,W], got " + shape_str(sx));
    int64_t C = sx[0], H = sx[1], W = sx[2];
    auto node = detail::make_node<S>(Op::upsample2, {C, 2 * H, 2 * W}, {x.node()});
    const S* px = x.data().data();
    S* py = node->value.data();
    for (int64_t c = 0; c < C; ++c)
        for (int64_t y = 0; y < 2 * H; ++y) {
            const S* xr = px + (c * H + y / 2) * W;
            S* yr = py + (c * 2 * H + y) * 2 * W;
            for (int64_t xpos = 0; xpos < 2 * W; ++xpos) yr[xpos] = xr[xpos / 2];
        }
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
    if (numel(shape) != x.numel())
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    auto node = detail::make_node<S>(Op::reshape, std::move(shape), {x.node()});
    std::copy(x.data().begin(), x.data().end(), node->value.begin());
    return Tensor<S>(node);
}

template <typename S>
Tensor<S> transpose2(const Tensor<S>& x) {
    const auto& sx = x.shape();
    if (sx.size() != 2) throw ShapeError("transpose2: expected rank-2, got " + shape_str(sx));
    auto node = detail::make_node<S>(Op::transpose2, {sx[1], sx[0]}, {x.node()});
    const S* px = x.data().data();
    S* py = node->value.data();
    for (int64_t i = 0; i < sx[0]; ++i)
        for (int64_t j = 0; j < sx[1]; ++j) py[j * sx[0] + i] = px[i * sx[1] + j];
    return Tensor<S>(node);
}

// ---------------------------------------------------------------------------
// Backward pass.

namespace detail {

template <typename S>
void backward_one(Node<S>* n) {
    const S* g = n->grad.data();
    auto gin = [&](size_t i) -> S* {
        n->inputs[i]->ensure_grad();
        return n->inputs[i]->grad.data();
    };
    auto needs = [&](size_t i) { return n->inputs[i]->requires_grad; };

    switch (n->op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            bool ta = n->alpha != S(0), tb = n->beta != S(0);
            Node<S>* A = n->inputs[0].get();
            Node<S>* B = n->inputs[1].get();
            int64_t m = n->shape[0], nn = n->shape[1];
            int64_t k = ta ? A->shape[0] : A->shape[1];
            const S* pa = A->value.data();
            const S* pb = B->value.data();
            // dA and dB for each transpose configuration
            if (!ta && !tb) {
                if (needs(0)) gemm_nt(g, pb, gin(0), m, nn, k);        // dA = G B^T
                if (needs(1)) gemm_tn(pa, g, gin(1), k, m, nn);        // dB = A^T G
            } else if (ta && !tb) {
                if (needs(0)) gemm_nt(pb, g, gin(0), k, nn, m);        // dA(ta) = B G^T -> [k,m]
                if (needs(1)) gemm_nn(pa, g, gin(1), k, m, nn);        // dB = A G
            } else if (!ta && tb) {
                if (needs(0)) gemm_nn(g, pb, gin(0), m, nn, k);        // dA = G B
                if (needs(1)) gemm_tn(g, pa, gin(1), nn, m, k);        // dB = G^T A
            } else {
                // both transposed: dA = (G B)^T? derive: C = A^T B^T, dA = B^T G^T -> [k,m]
                S* da = needs(0) ? gin(0) : nullptr;
                S* db = needs(1) ? gin(1) : nullptr;
                for (int64_t i = 0; i < m; ++i)
                    for (int64_t j = 0; j < nn; ++j) {
                        S gv = g[i * nn + j];
                        if (gv == S(0)) continue;
                        for (int64_t p = 0; p < k; ++p) {
                            if (da) da[p * m + i] += gv * pb[j * k + p];
                            if (db) db[j * k + p] += gv * pa[p * m + i];
                        }
                    }
            }
            break;
        }
        case Op::conv3x3: {
            Node<S>* X = n->inputs[0].get();
            Node<S>* Wt = n->inputs[1].get();
            int64_t Ci = X->shape[0], H = X->shape[1], W = X->shape[2];
            int64_t Co = n->shape[0], hw = n->shape[1] * n->shape[2];
            // bias grad
            if (needs(2)) {
                S* db = gin(2);
                for (int64_t co = 0; co < Co; ++co) {
                    S acc = S(0);
                    const S* gr = g + co * hw;
                    for (int64_t i = 0; i < hw; ++i) acc += gr[i];
                    db[co] += acc;
                }
            }
            const S* cols = n->saved.data();
            if (needs(1)) gemm_nt(g, cols, gin(1), Co, hw, Ci * 9);  // dW = G cols^T
            if (needs(0)) {
                std::vector<S> dcols(size_t(Ci * 9 * hw), S(0));
                gemm_tn(Wt->value.data(), g, dcols.data(), Ci * 9, Co, hw);  // dcols = W^T G
                col2im3(dcols.data(), Ci, H, W, n->stride, gin(0));
            }
            break;
        }
        case Op::conv1x1: {
            Node<S>* X = n->inputs[0].get();
            Node<S>* Wt = n->inputs[1].get();
            int64_t Ci = X->shape[0], H = X->shape[1], W = X->shape[2];
            int64_t Co = n->shape[0], Ho = n->shape[1], Wo = n->shape[2];
            int64_t hw = Ho * Wo;
            if (needs(2)) {
                S* db = gin(2);
                for (int64_t co = 0; co < Co; ++co) {
                    S acc = S(0);
                    const S* gr = g + co * hw;
                    for (int64_t i = 0; i < hw; ++i) acc += gr[i];
                    db[co] += acc;
                }
            }
            const S* xs = n->stride == 1 ? X->value.data() : n->saved.data();
            if (needs(1)) gemm_nt(g, xs, gin(1), Co, hw, Ci);  // dW = G Xs^T
            if (needs(0)) {
                if (n->stride == 1) {
                    gemm_tn(Wt->value.data(), g, gin(0), Ci, Co, hw);
                } else {
                    std::vector<S> dxs(size_t(Ci * hw), S(0));
                    gemm_tn(Wt->value.data(), g, dxs.data(), Ci, Co, hw);
                    S* dx = gin(0);
                    for (int64_t ci = 0; ci < Ci; ++ci)
                        for (int64_t oy = 0; oy < Ho; ++oy)
                            for (int64_t ox = 0; ox < Wo; ++ox)
                                dx[(ci * H + oy * n->stride) * W + ox * n->stride] += dxs[(ci * Ho + oy) * Wo + ox];
                }
            }
            break;
        }
        case Op::group_norm: {
            Node<S>* X = n->inputs[0].get();
            Node<S>* Ga = n->inputs[1].get();
            int64_t C = X->shape[0], spatial = X->shape[1] * X->shape[2];
            int groups = n->groups;
            int64_t cg = C / groups, gn_elems = cg * spatial;
            const S* px = X->value.data();
            const S* pg = Ga->value.data();
            for (int g_i = 0; g_i < groups; ++g_i) {
                S mean = n->saved[size_t(2 * g_i)];
                S istd = n->saved[size_t(2 * g_i + 1)];
                // accumulate group sums for dx
                S sum_dxhat = S(0), sum_dxhat_xhat = S(0);
                for (int64_t c = 0; c < cg; ++c) {
                    int64_t ch = g_i * cg + c;
                    const S* xr = px + ch * spatial;
                    const S* gr = g + ch * spatial;
                    S gam = pg[ch];
                    for (int64_t i = 0; i < spatial; ++i) {
                        S xhat = (xr[i] - mean) * istd;
                        S dxhat = gr[i] * gam;
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                    }
                }
                S m1 = sum_dxhat / S(gn_elems);
                S m2 = sum_dxhat_xhat / S(gn_elems);
                for (int64_t c = 0; c < cg; ++c) {
                    int64_t ch = g_i * cg + c;
                    const S* xr = px + ch * spatial;
                    const S* gr = g + ch * spatial;
                    S gam = pg[ch];
                    if (needs(1) || needs(2)) {
                        S dgam = S(0), dbet = S(0);
                        for (int64_t i = 0; i < spatial; ++i) {
                            S xhat = (xr[i] - mean) * istd;
                            dgam += gr[i] * xhat;
                            dbet += gr[i];
                        }
                        if (needs(1)) gin(1)[ch] += dgam;
                        if (needs(2)) gin(2)[ch] += dbet;
                    }
                    if (needs(0)) {
                        S* dx = gin(0) + ch * spatial;
                        for (int64_t i = 0; i < spatial; ++i) {
                            S xhat = (xr[i] - mean) * istd;
                            S dxhat = gr[i] * gam;
                            dx[i] += istd * (dxhat - m1 - xhat * m2);
                        }
                    }
                }
            }
            break;
        }
        case Op::silu: {
            if (!needs(0)) break;
            S* dx = gin(0);
            const S* px = n->inputs[0]->value.data();
            int64_t cnt = n->numel();
            for (int64_t i = 0; i < cnt; ++i) {
                S sg = n->saved[size_t(i)];
                dx[i] += g[i] * sg * (S(1) + px[i] * (S(1) - sg));
            }
            break;
        }
        case Op::softmax: {
            if (!needs(0)) break;
            int64_t rows = n->shape[0], cols = n->shape[1];
            const S* y = n->value.data();
            S* dx = gin(0);
            for (int64_t r = 0; r < rows; ++r) {
                const S* yr = y + r * cols;
                const S* gr = g + r * cols;
                S dot = S(0);
                for (int64_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
                S* dxr = dx + r * cols;
                for (int64_t j = 0; j < cols; ++j) dxr[j] += (gr[j] - dot) * yr[j];
            }
            break;
        }
        case Op::attention: {
            Node<S>* Q = n->inputs[0].get();
            Node<S>* K = n->inputs[1].get();
            Node<S>* V = n->inputs[2].get();
            int heads = n->heads;
            int64_t nq = Q->shape[0], nk = K->shape[0], dm = Q->shape[1], dh = dm / heads;
            const S scale = S(1) / std::sqrt(S(dh));
            std::vector<S> qh(size_t(nq * dh)), kh(size_t(nk * dh)), vh(size_t(nk * dh));
            std::vector<S> goh(size_t(nq * dh)), dA(size_t(nq * nk)), dS(size_t(nq * nk));
            std::vector<S> dq(size_t(nq * dh)), dk(size_t(nk * dh)), dv(size_t(nk * dh));
            for (int h = 0; h < heads; ++h) {
                const S* attn = n->saved.data() + size_t(h) * nq * nk;
                for (int64_t i = 0; i < nq; ++i) {
                    std::copy_n(Q->value.data() + i * dm + h * dh, dh, qh.data() + i * dh);
                    std::copy_n(g + i * dm + h * dh, dh, goh.data() + i * dh);
                }
                for (int64_t i = 0; i < nk; ++i) {
                    std::copy_n(K->value.data() + i * dm + h * dh, dh, kh.data() + i * dh);
                    std::copy_n(V->value.data() + i * dm + h * dh, dh, vh.data() + i * dh);
                }
                if (needs(2)) {
                    std::fill(dv.begin(), dv.end(), S(0));
                    gemm_tn(attn, goh.data(), dv.data(), nk, nq, dh);  // dV = A^T dO
                    S* gv = gin(2);
                    for (int64_t i = 0; i < nk; ++i)
                        for (int64_t j = 0; j < dh; ++j) gv[i * dm + h * dh + j] += dv[i * dh + j];
                }
                if (needs(0) || needs(1)) {
                    std::fill(dA.begin(), dA.end(), S(0));
                    gemm_nt(goh.data(), vh.data(), dA.data(), nq, dh, nk);  // dA = dO V^T
                    for (int64_t r = 0; r < nq; ++r) {
                        const S* ar = attn + r * nk;
                        const S* dar = dA.data() + r * nk;
                        S dot = S(0);
                        for (int64_t j = 0; j < nk; ++j) dot += dar[j] * ar[j];
                        S* dsr = dS.data() + r * nk;
                        for (int64_t j = 0; j < nk; ++j) dsr[j] = (dar[j] - dot) * ar[j] * scale;
                    }
                    if (needs(0)) {
                        std::fill(dq.begin(), dq.end(), S(0));
                        gemm_nn(dS.data(), kh.data(), dq.data(), nq, nk, dh);  // dQ = dS K
                        S* gq = gin(0);
                        for (int64_t i = 0; i < nq; ++i)
                            for (int64_t j = 0; j < dh; ++j) gq[i * dm + h * dh + j] += dq[i * dh + j];
                    }
                    if (needs(1)) {
                        std::fill(dk.begin(), dk.end(), S(0));
                        gemm_tn(dS.data(), qh.data(), dk.data(), nk, nq, dh);  // dK = dS^T Q
                        S* gk = gin(1);
                        for (int64_t i = 0; i < nk; ++i)
                            for (int64_t j = 0; j < dh; ++j) gk[i * dm + h * dh + j] += dk[i * dh + j];
                    }
                }
            }
            break;
        }
        case Op::add: {
            auto kind = bcast_kind<S>(n->inputs[0]->shape, n->inputs[1]->shape);
            int64_t cnt = n->numel();
            if (needs(0)) {
                S* da = gin(0);
                for (int64_t i = 0; i < cnt; ++i) da[i] += n->alpha * g[i];
            }
            if (needs(1)) {
                S* db = gin(1);
                switch (kind) {
                    case Bcast::same:
                        for (int64_t i = 0; i < cnt; ++i) db[i] += n->beta * g[i];
                        break;
                    case Bcast::scalar: {
                        S acc = S(0);
                        for (int64_t i = 0; i < cnt; ++i) acc += g[i];
                        db[0] += n->beta * acc;
                        break;
                    }
                    case Bcast::channel: {
                        int64_t spatial = n->shape[1] * n->shape[2];
                        for (int64_t c = 0; c < n->shape[0]; ++c) {
                            S acc = S(0);
                            const S* gr = g + c * spatial;
                            for (int64_t i = 0; i < spatial; ++i) acc += gr[i];
                            db[c] += n->beta * acc;
                        }
                        break;
                    }
                    case Bcast::row: {
                        int64_t rows = n->shape[0], cols = n->shape[1];
                        for (int64_t r = 0; r < rows; ++r)
                            for (int64_t j = 0; j < cols; ++j) db[j] += n->beta * g[r * cols + j];
                        break;
                    }
                }
            }
            break;
        }
        case Op::mul: {
            const S* pa = n->inputs[0]->value.data();
            const S* pb = n->inputs[1]->value.data();
            int64_t cnt = n->numel();
            bool scalar_b = n->inputs[1]->numel() == 1;
            if (needs(0)) {
                S* da = gin(0);
                if (scalar_b)
                    for (int64_t i = 0; i < cnt; ++i) da[i] += g[i] * pb[0];
                else
                    for (int64_t i = 0; i < cnt; ++i) da[i] += g[i] * pb[i];
            }
            if (needs(1)) {
                S* db = gin(1);
                if (scalar_b) {
                    S acc = S(0);
                    for (int64_t i = 0; i < cnt; ++i) acc += g[i] * pa[i];
                    db[0] += acc;
                } else {
                    for (int64_t i = 0; i < cnt; ++i) db[i] += g[i] * pa[i];
                }
            }
            break;
        }
        case Op::mean_square: {
            if (!needs(0)) break;
            const S* px = n->inputs[0]->value.data();
            int64_t cnt = n->inputs[0]->numel();
            S coef = S(2) * g[0] / S(cnt);
            S* dx = gin(0);
            for (int64_t i = 0; i < cnt; ++i) dx[i] += coef * px[i];
            break;
        }
        case Op::normalize_rows: {
            if (!needs(0)) break;
            int64_t rows = n->shape[0], cols = n->shape[1];
            const S* y = n->value.data();
            S* dx = gin(0);
            for (int64_t r = 0; r < rows; ++r) {
                S nrm = n->saved[size_t(r)];
                const S* yr = y + r * cols;
                const S* gr = g + r * cols;
                S dot = S(0);
                for (int64_t j = 0; j < cols; ++j) dot += gr[j] * yr[j];
                S inv = S(1) / nrm;
                S* dxr = dx + r * cols;
                for (int64_t j = 0; j < cols; ++j) dxr[j] += (gr[j] - dot * yr[j]) * inv;
            }
            break;
        }
        case Op::infonce_pair: {
            if (!needs(0)) break;
            int64_t nn = n->inputs[0]->shape[0];
            const S* P = n->saved.data();   // row softmax
            const S* Qc = n->saved2.data(); // col softmax, stored transposed ([j,i])
            S coef = g[0] / S(2 * nn);
            S* dl = gin(0);
            for (int64_t i = 0; i < nn; ++i)
                for (int64_t j = 0; j < nn; ++j) {
                    S v = P[i * nn + j] + Qc[j * nn + i];
                    if (i == j) v -= S(2);
                    dl[i * nn + j] += coef * v;
                }
            break;
        }
        case Op::embed: {
            if (!needs(0)) break;
            int64_t d = n->shape[1];
            S* dt = gin(0);
            for (size_t i = 0; i < n->ids.size(); ++i) {
                const S* gr = g + int64_t(i) * d;
                S* tr = dt + int64_t(n->ids[i]) * d;
                for (int64_t j = 0; j < d; ++j) tr[j] += gr[j];
            }
            break;
        }
        case Op::concat0: {
            int64_t na = n->inputs[0]->numel();
            int64_t nb = n->inputs[1]->numel();
            if (needs(0)) {
                S* da = gin(0);
                for (int64_t i = 0; i < na; ++i) da[i] += g[i];
            }
            if (needs(1)) {
                S* db = gin(1);
                for (int64_t i = 0; i < nb; ++i) db[i] += g[na + i];
            }
            break;
        }
        case Op::upsample2: {
            if (!needs(0)) break;
            int64_t C = n->inputs[0]->shape[0], H = n->inputs[0]->shape[1], W = n->inputs[0]->shape[2];
            S* dx = gin(0);
            for (int64_t c = 0; c < C; ++c)
                for (int64_t y = 0; y < 2 * H; ++y) {
                    const S* gr = g + (c * 2 * H + y) * 2 * W;
                    S* dxr = dx + (c * H + y / 2) * W;
                    for (int64_t x = 0; x < 2 * W; ++x) dxr[x / 2] += gr[x];
                }
            break;
        }
        case Op::reshape: {
            if (!needs(0)) break;
            S* dx = gin(0);
            int64_t cnt = n->numel();
            for (int64_t i = 0; i < cnt; ++i) dx[i] += g[i];
            break;
        }
        case Op::transpose2: {
            if (!needs(0)) break;
            int64_t R = n->shape[0], C = n->shape[1];  // output dims
            S* dx = gin(0);
            for (int64_t i = 0; i < R; ++i)
                for (int64_t j = 0; j < C; ++j) dx[j * R + i] += g[i * C + j];
            break;
        }
    }
}

}  // namespace detail

// Reverse-mode sweep from a scalar loss. Gradients accumulate into leaf
// tensors (parameters); intermediate node gradients are scoped to this call.
// Calling backward twice without zeroing leaf grads therefore accumulates.
template <typename S>
void backward(const Tensor<S>& loss) {
    if (loss.numel() != 1) throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.shape()));
    Node<S>* root = loss.node().get();
    if (!root->requires_grad) return;  // nothing reachable

    // iterative post-order topological sort over the requires_grad subgraph
    std::vector<Node<S>*> topo;
    std::unordered_set<Node<S>*> visited;
    std::vector<std::pair<Node<S>*, size_t>> stack;
    stack.push_back({root, 0});
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->inputs.size()) {
            Node<S>* in = node->inputs[idx++].get();
            if (in->requires_grad && !visited.count(in)) {
                visited.insert(in);
                stack.push_back({in, 0});
            }
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }
    // reset grads on interior nodes only; leaves keep accumulating
    for (Node<S>* node : topo) {
        if (node->op != Op::leaf) node->grad.assign(node->value.size(), S(0));
        else node->ensure_grad();
    }
    root->grad.assign(1, S(1));
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        if ((*it)->op != Op::leaf) detail::backward_one(*it);
    }
}

// ---------------------------------------------------------------------------
// Named parameters.

template <typename S>
struct Parameter {
    std::string name;
    Tensor<S> tensor;
    bool frozen = false;
};

template <typename S>
class ParamStore {
public:
    Tensor<S> add(const std::string& name, Shape shape, bool frozen = false) {
        Tensor<S> t = Tensor<S>::zeros(std::move(shape), true);
        return add(name, t, frozen);
    }

    Tensor<S> add(const std::string& name, Tensor<S> t, bool frozen = false) {
        if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
        t.node()->requires_grad = true;
        t.node()->ensure_grad();
        index_[name] = params_.size();
        params_.push_back({name, t, frozen});
        return t;
    }

    Tensor<S>& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw MissingArtifact("no parameter named " + name);
        return params_[it->second].tensor;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    void set_frozen(const std::string& prefix, bool frozen) {
        for (auto& p : params_)
            if (p.name.rfind(prefix, 0) == 0) p.frozen = frozen;
    }

    void zero_grad() {
        for (auto& p : params_) {
            auto& g = p.tensor.node()->grad;
            g.assign(p.tensor.node()->value.size(), S(0));
        }
    }

    std::vector<Parameter<S>>& params() { return params_; }
    const std::vector<Parameter<S>>& params() const { return params_; }
    size_t size() const { return params_.size(); }

    int64_t total_elems() const {
        int64_t n = 0;
        for (const auto& p : params_) n += p.tensor.numel();
        return n;
    }

private:
    std::vector<Parameter<S>> params_;
    std::unordered_map<std::string, size_t> index_;
};

}  // namespace mgd
