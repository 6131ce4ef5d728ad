#ifndef DART_OPS_HPP
#define DART_OPS_HPP

#include <algorithm>
#include <cmath>

#include "dart/tensor.hpp"

namespace dart {
namespace ops {

// Tensors carrying image data are C×H×W or N×C×H×W; 3D is treated as a
// batch of one throughout.
struct Dims4 {
    int n, c, h, w;
    bool batched;
};

template <typename T>
inline Dims4 as4d(const TensorT<T>& t, const char* who) {
    const auto& s = t.shape();
    if (s.size() == 3) return {1, s[0], s[1], s[2], false};
    if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
    throw ShapeError(std::string(who) + ": expected 3D or 4D tensor, got " +
                     shape_string(s));
}

template <typename T>
inline std::vector<int> shape4(const Dims4& d, int c, int h, int w) {
    if (d.batched) return {d.n, c, h, w};
    return {c, h, w};
}

// ---------------------------------------------------------------------------
// conv2d: cross-correlation with zero padding.
// input [N,Cin,H,W], weight [Cout,Cin,k,k], optional bias [Cout].
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias, int stride, int padding) {
    Dims4 d = as4d(input, "conv2d");
    const auto& ws = weight.shape();
    if (ws.size() != 4)
        throw ShapeError("conv2d: weight must be 4D, got " + shape_string(ws));
    const int cout = ws[0], cin = ws[1], kh = ws[2], kw = ws[3];
    if (cin != d.c)
        throw ShapeError("conv2d: input channels " + std::to_string(d.c) +
                         " != weight in-channels " + std::to_string(cin));
    if (bias.defined() && (bias.ndim() != 1 || bias.dim(0) != cout))
        throw ShapeError("conv2d: bias must have shape (" + std::to_string(cout) + ")");
    if (stride < 1) throw ShapeError("conv2d: stride must be positive");
    if (padding < 0) throw ShapeError("conv2d: padding must be non-negative");
    if (kh > d.h + 2 * padding || kw > d.w + 2 * padding)
        throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" +
                         std::to_string(kw) + " larger than padded input " +
                         std::to_string(d.h + 2 * padding) + "x" +
                         std::to_string(d.w + 2 * padding));
    const int oh = (d.h + 2 * padding - kh) / stride + 1;
    const int ow = (d.w + 2 * padding - kw) / stride + 1;

    std::vector<std::shared_ptr<NodeT<T>>> parents = {input.node(), weight.node()};
    if (bias.defined()) parents.push_back(bias.node());
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, cout, oh, ow), parents);

    const T* in = input.values().data();
    const T* w = weight.values().data();
    T* o = out.values().data();
    const int in_chw = d.c * d.h * d.w, out_chw = cout * oh * ow;
    for (int n = 0; n < d.n; ++n) {
        for (int co = 0; co < cout; ++co) {
            T* op = o + n * out_chw + co * oh * ow;
            const T b = bias.defined() ? bias.values()[co] : T(0);
            std::fill(op, op + oh * ow, b);
            for (int ci = 0; ci < d.c; ++ci) {
                const T* ip = in + n * in_chw + ci * d.h * d.w;
                const T* wp = w + ((co * cin + ci) * kh) * kw;
                for (int r = 0; r < kh; ++r) {
                    for (int s = 0; s < kw; ++s) {
                        const T wv = wp[r * kw + s];
                        if (wv == T(0)) continue;
                        for (int y = 0; y < oh; ++y) {
                            const int iy = y * stride - padding + r;
                            if (iy < 0 || iy >= d.h) continue;
                            // x range with 0 <= ix < W, ix = x*stride - padding + s
                            int x0 = 0, x1 = ow - 1;
                            if (padding - s > 0) x0 = (padding - s + stride - 1) / stride;
                            {
                                int hi = (d.w - 1 + padding - s) / stride;
                                if (hi < x1) x1 = hi;
                            }
                            const T* irow = ip + iy * d.w - padding + s;
                            T* orow = op + y * ow;
                            for (int x = x0; x <= x1; ++x)
                                orow[x] += wv * irow[x * stride];
                        }
                    }
                }
            }
        }
    }

    auto* on = out.node().get();
    auto in_n = input.node();
    auto w_n = weight.node();
    auto b_n = bias.defined() ? bias.node() : nullptr;
    Dims4 dd = d;
    out.set_backward([=]() {
        const T* go = on->grad.data();
        const int oh2 = on->shape[on->shape.size() - 2];
        const int ow2 = on->shape[on->shape.size() - 1];
        const int out_chw2 = cout * oh2 * ow2;
        const int in_chw2 = dd.c * dd.h * dd.w;
        if (in_n->needs_grad) {
            in_n->ensure_grad();
            T* gi = in_n->grad.data();
            const T* w2 = w_n->values.data();
            for (int n = 0; n < dd.n; ++n)
                for (int co = 0; co < cout; ++co) {
                    const T* gop = go + n * out_chw2 + co * oh2 * ow2;
                    for (int ci = 0; ci < dd.c; ++ci) {
                        T* gip = gi + n * in_chw2 + ci * dd.h * dd.w;
                        const T* wp = w2 + ((co * cin + ci) * kh) * kw;
                        for (int r = 0; r < kh; ++r)
                            for (int s = 0; s < kw; ++s) {
                                const T wv = wp[r * kw + s];
                                if (wv == T(0)) continue;
                                for (int y = 0; y < oh2; ++y) {
                                    const int iy = y * stride - padding + r;
                                    if (iy < 0 || iy >= dd.h) continue;
                                    int x0 = 0, x1 = ow2 - 1;
                                    if (padding - s > 0)
                                        x0 = (padding - s + stride - 1) / stride;
                                    {
                                        int hi = (dd.w - 1 + padding - s) / stride;
                                        if (hi < x1) x1 = hi;
                                    }
                                    T* girow = gip + iy * dd.w - padding + s;
                                    const T* gorow = gop + y * ow2;
                                    for (int x = x0; x <= x1; ++x)
                                        girow[x * stride] += wv * gorow[x];
                                }
                            }
                    }
                }
        }
        if (w_n->needs_grad) {
            w_n->ensure_grad();
            T* gw = w_n->grad.data();
            const T* in2 = in_n->values.data();
            for (int co = 0; co < cout; ++co)
                for (int ci = 0; ci < dd.c; ++ci)
                    for (int r = 0; r < kh; ++r)
                        for (int s = 0; s < kw; ++s) {
                            T acc = 0;
                            for (int n = 0; n < dd.n; ++n) {
                                const T* ip = in2 + n * in_chw2 + ci * dd.h * dd.w;
                                const T* gop = go + n * out_chw2 + co * oh2 * ow2;
                                for (int y = 0; y < oh2; ++y) {
                                    const int iy = y * stride - padding + r;
                                    if (iy < 0 || iy >= dd.h) continue;
                                    int x0 = 0, x1 = ow2 - 1;
                                    if (padding - s > 0)
                                        x0 = (padding - s + stride - 1) / stride;
                                    {
                                        int hi = (dd.w - 1 + padding - s) / stride;
                                        if (hi < x1) x1 = hi;
                                    }
                                    const T* irow = ip + iy * dd.w - padding + s;
                                    const T* gorow = gop + y * ow2;
                                    for (int x = x0; x <= x1; ++x)
                                        acc += irow[x * stride] * gorow[x];
                                }
                            }
                            gw[((co * cin + ci) * kh + r) * kw + s] += acc;
                        }
        }
        if (b_n && b_n->needs_grad) {
            b_n->ensure_grad();
            T* gb = b_n->grad.data();
            for (int n = 0; n < dd.n; ++n)
                for (int co = 0; co < cout; ++co) {
                    const T* gop = go + n * out_chw2 + co * oh2 * ow2;
                    T acc = 0;
                    for (int i = 0; i < oh2 * ow2; ++i) acc += gop[i];
                    gb[co] += acc;
                }
        }
    });
    return out;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, int stride,
                  int padding) {
    return conv2d(input, weight, TensorT<T>(), stride, padding);
}

// ---------------------------------------------------------------------------
// conv_transpose2d: fractionally strided conv (adjoint of conv2d).
// input [N,Cin,H,W], weight [Cin,Cout,k,k].
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> conv_transpose2d(const TensorT<T>& input, const TensorT<T>& weight,
                            int stride) {
    Dims4 d = as4d(input, "conv_transpose2d");
    const auto& ws = weight.shape();
    if (ws.size() != 4)
        throw ShapeError("conv_transpose2d: weight must be 4D");
    const int cin = ws[0], cout = ws[1], kh = ws[2], kw = ws[3];
    if (cin != d.c)
        throw ShapeError("conv_transpose2d: input channels " + std::to_string(d.c) +
                         " != weight in-channels " + std::to_string(cin));
    if (stride < 1) throw ShapeError("conv_transpose2d: stride must be positive");
    const int oh = (d.h - 1) * stride + kh;
    const int ow = (d.w - 1) * stride + kw;

    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, cout, oh, ow),
                                         {input.node(), weight.node()});
    const T* in = input.values().data();
    const T* w = weight.values().data();
    T* o = out.values().data();
    const int in_chw = d.c * d.h * d.w, out_chw = cout * oh * ow;
    for (int n = 0; n < d.n; ++n)
        for (int ci = 0; ci < d.c; ++ci) {
            const T* ip = in + n * in_chw + ci * d.h * d.w;
            for (int co = 0; co < cout; ++co) {
                T* op = o + n * out_chw + co * oh * ow;
                const T* wp = w + ((ci * cout + co) * kh) * kw;
                for (int y = 0; y < d.h; ++y)
                    for (int x = 0; x < d.w; ++x) {
                        const T v = ip[y * d.w + x];
                        if (v == T(0)) continue;
                        T* obase = op + (y * stride) * ow + x * stride;
                        for (int r = 0; r < kh; ++r)
                            for (int s = 0; s < kw; ++s)
                                obase[r * ow + s] += v * wp[r * kw + s];
                    }
            }
        }

    auto* on = out.node().get();
    auto in_n = input.node();
    auto w_n = weight.node();
    Dims4 dd = d;
    out.set_backward([=]() {
        const T* go = on->grad.data();
        const int out_chw2 = cout * oh * ow;
        const int in_chw2 = dd.c * dd.h * dd.w;
        if (in_n->needs_grad) {
            in_n->ensure_grad();
            T* gi = in_n->grad.data();
            const T* w2 = w_n->values.data();
            for (int n = 0; n < dd.n; ++n)
                for (int ci = 0; ci < dd.c; ++ci) {
                    T* gip = gi + n * in_chw2 + ci * dd.h * dd.w;
                    for (int co = 0; co < cout; ++co) {
                        const T* gop = go + n * out_chw2 + co * oh * ow;
                        const T* wp = w2 + ((ci * cout + co) * kh) * kw;
                        for (int y = 0; y < dd.h; ++y)
                            for (int x = 0; x < dd.w; ++x) {
                                const T* gbase = gop + (y * stride) * ow + x * stride;
                                T acc = 0;
                                for (int r = 0; r < kh; ++r)
                                    for (int s = 0; s < kw; ++s)
                                        acc += wp[r * kw + s] * gbase[r * ow + s];
                                gip[y * dd.w + x] += acc;
                            }
                    }
                }
        }
        if (w_n->needs_grad) {
            w_n->ensure_grad();
            T* gw = w_n->grad.data();
            const T* in2 = in_n->values.data();
            for (int ci = 0; ci < dd.c; ++ci)
                for (int co = 0; co < cout; ++co) {
                    T* gwp = gw + ((ci * cout + co) * kh) * kw;
                    for (int n = 0; n < dd.n; ++n) {
                        const T* ip = in2 + n * in_chw2 + ci * dd.h * dd.w;
                        const T* gop = go + n * out_chw2 + co * oh * ow;
                        for (int y = 0; y < dd.h; ++y)
                            for (int x = 0; x < dd.w; ++x) {
                                const T v = ip[y * dd.w + x];
                                if (v == T(0)) continue;
                                const T* gbase = gop + (y * stride) * ow + x * stride;
                                for (int r = 0; r < kh; ++r)
                                    for (int s = 0; s < kw; ++s)
                                        gwp[r * kw + s] += v * gbase[r * ow + s];
                            }
                    }
                }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// maxpool2x2: ties route gradient to the first argmax in row-major order.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> maxpool2x2(const TensorT<T>& input) {
    Dims4 d = as4d(input, "maxpool2x2");
    if (d.h % 2 != 0 || d.w % 2 != 0)
        throw ShapeError("maxpool2x2: spatial dims must be even, got " +
                         std::to_string(d.h) + "x" + std::to_string(d.w));
    const int oh = d.h / 2, ow = d.w / 2;
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, d.c, oh, ow), {input.node()});
    auto argmax = std::make_shared<std::vector<int>>(out.numel());
    const T* in = input.values().data();
    T* o = out.values().data();
    int oi = 0;
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        const T* plane = in + nc * d.h * d.w;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x, ++oi) {
                int base = (2 * y) * d.w + 2 * x;
                int cand[4] = {base, base + 1, base + d.w, base + d.w + 1};
                int best = cand[0];
                for (int k = 1; k < 4; ++k)
                    if (plane[cand[k]] > plane[best]) best = cand[k];
                o[oi] = plane[best];
                (*argmax)[oi] = nc * d.h * d.w + best;
            }
    }
    auto* on = out.node().get();
    auto in_n = input.node();
    out.set_backward([on, in_n, argmax]() {
        if (!in_n->needs_grad) return;
        in_n->ensure_grad();
        for (size_t i = 0; i < argmax->size(); ++i)
            in_n->grad[(*argmax)[i]] += on->grad[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// batch_norm. Train mode normalizes with batch statistics over N*H*W per
// channel (population variance) and updates running stats in place; eval
// mode uses the running statistics.
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> batch_norm(const TensorT<T>& input, const TensorT<T>& gamma,
                      const TensorT<T>& beta, bool train,
                      std::vector<T>& running_mean, std::vector<T>& running_var,
                      T momentum = T(0.1), T epsilon = T(1e-5)) {
    Dims4 d = as4d(input, "batch_norm");
    if (gamma.ndim() != 1 || gamma.dim(0) != d.c || beta.ndim() != 1 ||
        beta.dim(0) != d.c)
        throw ShapeError("batch_norm: gamma/beta must have shape (" +
                         std::to_string(d.c) + "), input has " +
                         std::to_string(d.c) + " channels");
    if (int(running_mean.size()) != d.c || int(running_var.size()) != d.c)
        throw ShapeError("batch_norm: running stats size mismatch");

    const int m = d.n * d.h * d.w;  // elements per channel
    const int hw = d.h * d.w, chw = d.c * hw;
    auto xhat = std::make_shared<std::vector<T>>(input.numel());
    auto inv_std = std::make_shared<std::vector<T>>(d.c);

    const T* in = input.values().data();
    if (train) {
        for (int c = 0; c < d.c; ++c) {
            T mean = 0;
            for (int n = 0; n < d.n; ++n) {
                const T* p = in + n * chw + c * hw;
                for (int i = 0; i < hw; ++i) mean += p[i];
            }
            mean /= T(m);
            T var = 0;
            for (int n = 0; n < d.n; ++n) {
                const T* p = in + n * chw + c * hw;
                for (int i = 0; i < hw; ++i) {
                    T dlt = p[i] - mean;
                    var += dlt * dlt;
                }
            }
            var /= T(m);
            (*inv_std)[c] = T(1) / std::sqrt(var + epsilon);
            running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mean;
            running_var[c] = (T(1) - momentum) * running_var[c] + momentum * var;
            for (int n = 0; n < d.n; ++n) {
                const T* p = in + n * chw + c * hw;
                T* xh = xhat->data() + n * chw + c * hw;
                for (int i = 0; i < hw; ++i) xh[i] = (p[i] - mean) * (*inv_std)[c];
            }
        }
    } else {
        for (int c = 0; c < d.c; ++c) {
            (*inv_std)[c] = T(1) / std::sqrt(running_var[c] + epsilon);
            for (int n = 0; n < d.n; ++n) {
                const T* p = in + n * chw + c * hw;
                T* xh = xhat->data() + n * chw + c * hw;
                for (int i = 0; i < hw; ++i)
                    xh[i] = (p[i] - running_mean[c]) * (*inv_std)[c];
            }
        }
    }

    TensorT<T> out = TensorT<T>::make_op(
        input.shape(), {input.node(), gamma.node(), beta.node()});
    T* o = out.values().data();
    const T* g = gamma.values().data();
    const T* b = beta.values().data();
    for (int n = 0; n < d.n; ++n)
        for (int c = 0; c < d.c; ++c) {
            const T* xh = xhat->data() + n * chw + c * hw;
            T* op = o + n * chw + c * hw;
            for (int i = 0; i < hw; ++i) op[i] = g[c] * xh[i] + b[c];
        }

    auto* on = out.node().get();
    auto in_n = input.node();
    auto g_n = gamma.node();
    auto b_n = beta.node();
    Dims4 dd = d;
    out.set_backward([=]() {
        const T* go = on->grad.data();
        const T* gv = g_n->values.data();
        if (g_n->needs_grad) g_n->ensure_grad();
        if (b_n->needs_grad) b_n->ensure_grad();
        if (in_n->needs_grad) in_n->ensure_grad();
        for (int c = 0; c < dd.c; ++c) {
            T sum_dy = 0, sum_dy_xhat = 0;
            for (int n = 0; n < dd.n; ++n) {
                const T* gp = go + n * chw + c * hw;
                const T* xh = xhat->data() + n * chw + c * hw;
                for (int i = 0; i < hw; ++i) {
                    sum_dy += gp[i];
                    sum_dy_xhat += gp[i] * xh[i];
                }
            }
            if (g_n->needs_grad) g_n->grad[c] += sum_dy_xhat;
            if (b_n->needs_grad) b_n->grad[c] += sum_dy;
            if (in_n->needs_grad) {
                const T is = (*inv_std)[c];
                if (train) {
                    const T inv_m = T(1) / T(m);
                    for (int n = 0; n < dd.n; ++n) {
                        const T* gp = go + n * chw + c * hw;
                        const T* xh = xhat->data() + n * chw + c * hw;
                        T* gi = in_n->grad.data() + n * chw + c * hw;
                        for (int i = 0; i < hw; ++i)
                            gi[i] += gv[c] * is *
                                     (gp[i] - inv_m * sum_dy - xh[i] * inv_m * sum_dy_xhat);
                    }
                } else {
                    for (int n = 0; n < dd.n; ++n) {
                        const T* gp = go + n * chw + c * hw;
                        T* gi = in_n->grad.data() + n * chw + c * hw;
                        for (int i = 0; i < hw; ++i) gi[i] += gv[c] * is * gp[i];
                    }
                }
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// elementwise / structural primitives
// ---------------------------------------------------------------------------
namespace detail {
template <typename T>
inline void check_same_shape(const TensorT<T>& a, const TensorT<T>& b,
                             const char* who) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(who) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}
}  // namespace detail

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node()});
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > T(0) ? xv[i] : T(0);
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < xn->values.size(); ++i)
            if (xn->values[i] > T(0)) xn->grad[i] += on->grad[i];
    });
    return out;
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node()});
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < xv.size(); ++i) ov[i] = T(1) / (T(1) + std::exp(-xv[i]));
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < xn->values.size(); ++i) {
            T s = on->values[i];
            xn->grad[i] += on->grad[i] * s * (T(1) - s);
        }
    });
    return out;
}

template <typename T>
TensorT<T> abs_val(const TensorT<T>& x) {
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node()});
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < xv.size(); ++i) ov[i] = std::abs(xv[i]);
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < xn->values.size(); ++i) {
            T v = xn->values[i];
            if (v > T(0)) xn->grad[i] += on->grad[i];
            else if (v < T(0)) xn->grad[i] -= on->grad[i];
        }
    });
    return out;
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "add");
    TensorT<T> out = TensorT<T>::make_op(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];
    auto* on = out.node().get();
    auto an = a.node(), bn = b.node();
    out.set_backward([on, an, bn]() {
        if (an->needs_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] += on->grad[i];
        }
    });
    return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "sub");
    TensorT<T> out = TensorT<T>::make_op(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] - bv[i];
    auto* on = out.node().get();
    auto an = a.node(), bn = b.node();
    out.set_backward([on, an, bn]() {
        if (an->needs_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->grad[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] -= on->grad[i];
        }
    });
    return out;
}

template <typename T>
TensorT<T> ew_mul(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "ew_mul");
    TensorT<T> out = TensorT<T>::make_op(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
    auto* on = out.node().get();
    auto an = a.node(), bn = b.node();
    out.set_backward([on, an, bn]() {
        if (an->needs_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i)
                an->grad[i] += on->grad[i] * bn->values[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i)
                bn->grad[i] += on->grad[i] * an->values[i];
        }
    });
    return out;
}

template <typename T>
TensorT<T> ew_div(const TensorT<T>& a, const TensorT<T>& b) {
    detail::check_same_shape(a, b, "ew_div");
    TensorT<T> out = TensorT<T>::make_op(a.shape(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (size_t i = 0; i < av.size(); ++i) ov[i] = av[i] / bv[i];
    auto* on = out.node().get();
    auto an = a.node(), bn = b.node();
    out.set_backward([on, an, bn]() {
        if (an->needs_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i)
                an->grad[i] += on->grad[i] / bn->values[i];
        }
        if (bn->needs_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < on->grad.size(); ++i)
                bn->grad[i] -= on->grad[i] * an->values[i] /
                               (bn->values[i] * bn->values[i]);
        }
    });
    return out;
}

template <typename T>
TensorT<T> affine(const TensorT<T>& x, T scale, T shift) {
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node()});
    const auto& xv = x.values();
    auto& ov = out.values();
    for (size_t i = 0; i < xv.size(); ++i) ov[i] = scale * xv[i] + shift;
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn, scale]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (size_t i = 0; i < on->grad.size(); ++i) xn->grad[i] += scale * on->grad[i];
    });
    return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& x, T s) { return affine(x, s, T(0)); }
template <typename T>
TensorT<T> add_scalar(const TensorT<T>& x, T s) { return affine(x, T(1), s); }

template <typename T>
TensorT<T> sum_all(const TensorT<T>& x) {
    TensorT<T> out = TensorT<T>::make_op({1}, {x.node()});
    T acc = 0;
    for (T v : x.values()) acc += v;
    out.values()[0] = acc;
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        const T g = on->grad[0];
        for (size_t i = 0; i < xn->grad.size(); ++i) xn->grad[i] += g;
    });
    return out;
}

template <typename T>
TensorT<T> mean_all(const TensorT<T>& x) {
    return scale(sum_all(x), T(1) / T(x.numel()));
}

template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& x) {
    Dims4 d = as4d(x, "global_avg_pool");
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, d.c, 1, 1), {x.node()});
    const int hw = d.h * d.w;
    const T* in = x.values().data();
    T* o = out.values().data();
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        T acc = 0;
        const T* p = in + nc * hw;
        for (int i = 0; i < hw; ++i) acc += p[i];
        o[nc] = acc / T(hw);
    }
    auto* on = out.node().get();
    auto xn = x.node();
    out.set_backward([on, xn, hw]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (size_t nc = 0; nc < on->grad.size(); ++nc) {
            const T g = on->grad[nc] / T(hw);
            T* gi = xn->grad.data() + nc * hw;
            for (int i = 0; i < hw; ++i) gi[i] += g;
        }
    });
    return out;
}

template <typename T>
TensorT<T> concat_channels(const TensorT<T>& a, const TensorT<T>& b) {
    Dims4 da = as4d(a, "concat_channels"), db = as4d(b, "concat_channels");
    if (da.n != db.n || da.h != db.h || da.w != db.w || da.batched != db.batched)
        throw ShapeError("concat_channels: geometry mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(da, da.c + db.c, da.h, da.w),
                                         {a.node(), b.node()});
    const int hw = da.h * da.w;
    const int achw = da.c * hw, bchw = db.c * hw, ochw = achw + bchw;
    T* o = out.values().data();
    for (int n = 0; n < da.n; ++n) {
        std::copy_n(a.values().data() + n * achw, achw, o + n * ochw);
        std::copy_n(b.values().data() + n * bchw, bchw, o + n * ochw + achw);
    }
    auto* on = out.node().get();
    auto an = a.node(), bn = b.node();
    int N = da.n;
    out.set_backward([on, an, bn, N, achw, bchw, ochw]() {
        for (int n = 0; n < N; ++n) {
            if (an->needs_grad) {
                an->ensure_grad();
                for (int i = 0; i < achw; ++i)
                    an->grad[n * achw + i] += on->grad[n * ochw + i];
            }
            if (bn->needs_grad) {
                bn->ensure_grad();
                for (int i = 0; i < bchw; ++i)
                    bn->grad[n * bchw + i] += on->grad[n * ochw + achw + i];
            }
        }
    });
    return out;
}

// x [N,C,H,W] * gate [N,C,1,1], broadcast over space
template <typename T>
TensorT<T> mul_channel_gate(const TensorT<T>& x, const TensorT<T>& gate) {
    Dims4 dx = as4d(x, "mul_channel_gate"), dg = as4d(gate, "mul_channel_gate");
    if (dg.n != dx.n || dg.c != dx.c || dg.h != 1 || dg.w != 1)
        throw ShapeError("mul_channel_gate: gate must be per-channel scalars");
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node(), gate.node()});
    const int hw = dx.h * dx.w;
    const T* xv = x.values().data();
    const T* gv = gate.values().data();
    T* o = out.values().data();
    for (int nc = 0; nc < dx.n * dx.c; ++nc)
        for (int i = 0; i < hw; ++i) o[nc * hw + i] = xv[nc * hw + i] * gv[nc];
    auto* on = out.node().get();
    auto xn = x.node(), gn = gate.node();
    out.set_backward([on, xn, gn, hw]() {
        const size_t ncount = gn->values.size();
        if (xn->needs_grad) {
            xn->ensure_grad();
            for (size_t nc = 0; nc < ncount; ++nc)
                for (int i = 0; i < hw; ++i)
                    xn->grad[nc * hw + i] += on->grad[nc * hw + i] * gn->values[nc];
        }
        if (gn->needs_grad) {
            gn->ensure_grad();
            for (size_t nc = 0; nc < ncount; ++nc) {
                T acc = 0;
                for (int i = 0; i < hw; ++i)
                    acc += on->grad[nc * hw + i] * xn->values[nc * hw + i];
                gn->grad[nc] += acc;
            }
        }
    });
    return out;
}

// x [N,C,H,W] * map [N,1,H,W], broadcast over channels
template <typename T>
TensorT<T> mul_spatial_gate(const TensorT<T>& x, const TensorT<T>& map) {
    Dims4 dx = as4d(x, "mul_spatial_gate"), dm = as4d(map, "mul_spatial_gate");
    if (dm.n != dx.n || dm.c != 1 || dm.h != dx.h || dm.w != dx.w)
        throw ShapeError("mul_spatial_gate: map must be [N,1,H,W]");
    TensorT<T> out = TensorT<T>::make_op(x.shape(), {x.node(), map.node()});
    const int hw = dx.h * dx.w, chw = dx.c * hw;
    const T* xv = x.values().data();
    const T* mv = map.values().data();
    T* o = out.values().data();
    for (int n = 0; n < dx.n; ++n)
        for (int c = 0; c < dx.c; ++c)
            for (int i = 0; i < hw; ++i)
                o[n * chw + c * hw + i] = xv[n * chw + c * hw + i] * mv[n * hw + i];
    auto* on = out.node().get();
    auto xn = x.node(), mn = map.node();
    int N = dx.n, C = dx.c;
    out.set_backward([on, xn, mn, N, C, hw, chw]() {
        if (xn->needs_grad) {
            xn->ensure_grad();
            for (int n = 0; n < N; ++n)
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < hw; ++i)
                        xn->grad[n * chw + c * hw + i] +=
                            on->grad[n * chw + c * hw + i] * mn->values[n * hw + i];
        }
        if (mn->needs_grad) {
            mn->ensure_grad();
            for (int n = 0; n < N; ++n)
                for (int i = 0; i < hw; ++i) {
                    T acc = 0;
                    for (int c = 0; c < C; ++c)
                        acc += on->grad[n * chw + c * hw + i] *
                               xn->values[n * chw + c * hw + i];
                    mn->grad[n * hw + i] += acc;
                }
        }
    });
    return out;
}

// [N,C,H,W] -> [N,2,H,W]: channel mean and channel max (max ties to first)
template <typename T>
TensorT<T> channel_pool_stats(const TensorT<T>& x) {
    Dims4 d = as4d(x, "channel_pool_stats");
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, 2, d.h, d.w), {x.node()});
    const int hw = d.h * d.w, chw = d.c * hw;
    auto argmax = std::make_shared<std::vector<int>>(d.n * hw);
    const T* xv = x.values().data();
    T* o = out.values().data();
    for (int n = 0; n < d.n; ++n)
        for (int i = 0; i < hw; ++i) {
            T acc = 0, best = xv[n * chw + i];
            int bestc = 0;
            for (int c = 0; c < d.c; ++c) {
                T v = xv[n * chw + c * hw + i];
                acc += v;
                if (v > best) { best = v; bestc = c; }
            }
            o[n * 2 * hw + i] = acc / T(d.c);
            o[n * 2 * hw + hw + i] = best;
            (*argmax)[n * hw + i] = n * chw + bestc * hw + i;
        }
    auto* on = out.node().get();
    auto xn = x.node();
    int N = d.n, C = d.c;
    out.set_backward([on, xn, argmax, N, C, hw, chw]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < hw; ++i) {
                const T gm = on->grad[n * 2 * hw + i] / T(C);
                for (int c = 0; c < C; ++c) xn->grad[n * chw + c * hw + i] += gm;
                xn->grad[(*argmax)[n * hw + i]] += on->grad[n * 2 * hw + hw + i];
            }
    });
    return out;
}

// clamp-to-edge padding by p pixels on each side
template <typename T>
TensorT<T> replicate_pad(const TensorT<T>& x, int p) {
    Dims4 d = as4d(x, "replicate_pad");
    if (p < 0) throw ShapeError("replicate_pad: negative padding");
    const int oh = d.h + 2 * p, ow = d.w + 2 * p;
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, d.c, oh, ow), {x.node()});
    const T* xv = x.values().data();
    T* o = out.values().data();
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        const T* ip = xv + nc * d.h * d.w;
        T* op = o + nc * oh * ow;
        for (int y = 0; y < oh; ++y) {
            int iy = std::clamp(y - p, 0, d.h - 1);
            for (int x2 = 0; x2 < ow; ++x2) {
                int ix = std::clamp(x2 - p, 0, d.w - 1);
                op[y * ow + x2] = ip[iy * d.w + ix];
            }
        }
    }
    auto* on = out.node().get();
    auto xn = x.node();
    Dims4 dd = d;
    out.set_backward([on, xn, dd, p, oh, ow]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (int nc = 0; nc < dd.n * dd.c; ++nc) {
            T* gi = xn->grad.data() + nc * dd.h * dd.w;
            const T* gp = on->grad.data() + nc * oh * ow;
            for (int y = 0; y < oh; ++y) {
                int iy = std::clamp(y - p, 0, dd.h - 1);
                for (int x2 = 0; x2 < ow; ++x2) {
                    int ix = std::clamp(x2 - p, 0, dd.w - 1);
                    gi[iy * dd.w + ix] += gp[y * ow + x2];
                }
            }
        }
    });
    return out;
}

// uniform k×k mean filter, valid mode (output shrinks by k-1)
template <typename T>
TensorT<T> box_filter(const TensorT<T>& x, int k) {
    Dims4 d = as4d(x, "box_filter");
    if (k < 1 || k > d.h || k > d.w)
        throw ShapeError("box_filter: window " + std::to_string(k) +
                         " exceeds field " + std::to_string(d.h) + "x" +
                         std::to_string(d.w));
    const int oh = d.h - k + 1, ow = d.w - k + 1;
    TensorT<T> out = TensorT<T>::make_op(shape4<T>(d, d.c, oh, ow), {x.node()});
    const T inv = T(1) / T(k * k);
    const T* xv = x.values().data();
    T* o = out.values().data();
    for (int nc = 0; nc < d.n * d.c; ++nc) {
        const T* ip = xv + nc * d.h * d.w;
        T* op = o + nc * oh * ow;
        for (int y = 0; y < oh; ++y)
            for (int x2 = 0; x2 < ow; ++x2) {
                T acc = 0;
                for (int r = 0; r < k; ++r)
                    for (int s = 0; s < k; ++s) acc += ip[(y + r) * d.w + x2 + s];
                op[y * ow + x2] = acc * inv;
            }
    }
    auto* on = out.node().get();
    auto xn = x.node();
    Dims4 dd = d;
    out.set_backward([on, xn, dd, k, oh, ow, inv]() {
        if (!xn->needs_grad) return;
        xn->ensure_grad();
        for (int nc = 0; nc < dd.n * dd.c; ++nc) {
            T* gi = xn->grad.data() + nc * dd.h * dd.w;
            const T* gp = on->grad.data() + nc * oh * ow;
            for (int y = 0; y < oh; ++y)
                for (int x2 = 0; x2 < ow; ++x2) {
                    const T g = gp[y * ow + x2] * inv;
                    for (int r = 0; r < k; ++r)
                        for (int s = 0; s < k; ++s) gi[(y + r) * dd.w + x2 + s] += g;
                }
        }
    });
    return out;
}

}  // namespace ops
}  // namespace dart

#endif
