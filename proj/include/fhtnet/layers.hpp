#pragma once

#include <cmath>
#include <variant>
#include <vector>

#include "fhtnet/core.hpp"
#include "fhtnet/errors.hpp"
#include "fhtnet/tensor.hpp"

namespace fhtnet::nn {

// ---------------------------------------------------------------------------
// Layer specifications

struct ConvSpec {
    int filters = 1;
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    int ph = 0, pw = 0;
};

struct PadSpec {
    int mh = 0, mw = 0;
};

enum class ActKind { Tanh, Relu, Rf };

struct ActivationSpec {
    ActKind kind = ActKind::Tanh;
    int a = 1;      // rf exponent
    double b = 1.0; // rf denominator offset
};

struct FhtLayerSpec {
    bool transposed = false;
    Quadrant quadrant = Quadrant::HorizontalDown;
};

struct DenseSpec {
    int outputs = 1;
};

struct SoftmaxSpec {};

using LayerSpec = std::variant<ConvSpec, PadSpec, ActivationSpec, FhtLayerSpec, DenseSpec, SoftmaxSpec>;

inline const char* layer_kind_name(const LayerSpec& layer) {
    struct Visitor {
        const char* operator()(const ConvSpec&) const { return "conv"; }
        const char* operator()(const PadSpec&) const { return "pad"; }
        const char* operator()(const ActivationSpec& a) const {
            switch (a.kind) {
            case ActKind::Tanh: return "tanh";
            case ActKind::Relu: return "relu";
            case ActKind::Rf: return "rf";
            }
            return "activation";
        }
        const char* operator()(const FhtLayerSpec& f) const { return f.transposed ? "fht_t" : "fht"; }
        const char* operator()(const DenseSpec&) const { return "dense"; }
        const char* operator()(const SoftmaxSpec&) const { return "softmax"; }
    };
    return std::visit(Visitor{}, layer);
}

// ---------------------------------------------------------------------------
// Saturating activation with an inflection at zero. The power is applied to
// the magnitude and the sign is carried through, so even exponents keep the
// function odd.

inline double signed_power(double x, int a) {
    double m = std::abs(x);
    double acc = 1.0;
    for (int i = 0; i < a; ++i) acc *= m;
    return x < 0 ? -acc : acc;
}

inline void require_rf_params(int a, double b) {
    if (a < 1) throw ArgumentError("rf: exponent a must be >= 1");
    if (!(b > 0.0)) throw ArgumentError("rf: offset b must be > 0");
}

inline double rf_activation(double x, int a, double b) {
    require_rf_params(a, b);
    const double s = signed_power(x, a);
    return s / (b + std::abs(s));
}

/// d/dx rf[a,b](x) = a*b*|x|^(a-1) / (b + |x|^a)^2, continuous, >= 0.
inline double rf_derivative(double x, int a, double b) {
    require_rf_params(a, b);
    const double m = std::abs(x);
    double m_am1 = 1.0;
    for (int i = 0; i < a - 1; ++i) m_am1 *= m;
    const double denom = b + m_am1 * m;
    return a * b * m_am1 / (denom * denom);
}

// ---------------------------------------------------------------------------
// Per-layer forward / backward. Parametric layers take their weight and bias
// tensors explicitly; backward routines return the input gradient and add
// parameter gradients in place.

inline Tensor conv_forward(const ConvSpec& spec, const Tensor& in, const Tensor& w, const Tensor& b) {
    const int c_in = in.channels(), h = in.height(), wd = in.width();
    const int oh = (h + 2 * spec.ph - spec.kh) / spec.sh + 1;
    const int ow = (wd + 2 * spec.pw - spec.kw) / spec.sw + 1;
    Tensor out = Tensor::chw(spec.filters, oh, ow);
    for (int f = 0; f < spec.filters; ++f) {
        const double bias = b.data[static_cast<std::size_t>(f)];
        for (int oy = 0; oy < oh; ++oy) {
            const int iy0 = oy * spec.sh - spec.ph;
            for (int ox = 0; ox < ow; ++ox) {
                const int ix0 = ox * spec.sw - spec.pw;
                double acc = bias;
                for (int c = 0; c < c_in; ++c)
                    for (int ky = 0; ky < spec.kh; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* in_row = &in.data[(static_cast<std::size_t>(c) * h + iy) * wd];
                        const double* w_row =
                            &w.data[((static_cast<std::size_t>(f) * c_in + c) * spec.kh + ky) * spec.kw];
                        const int kx_lo = ix0 < 0 ? -ix0 : 0;
                        const int kx_hi = ix0 + spec.kw > wd ? wd - ix0 : spec.kw;
                        for (int kx = kx_lo; kx < kx_hi; ++kx) acc += in_row[ix0 + kx] * w_row[kx];
                    }
                out.at(f, oy, ox) = acc;
            }
        }
    }
    return out;
}

inline Tensor conv_backward(const ConvSpec& spec, const Tensor& in, const Tensor& w,
                            const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b) {
    const int c_in = in.channels(), h = in.height(), wd = in.width();
    const int oh = grad_out.height(), ow = grad_out.width();
    Tensor grad_in = Tensor::chw(c_in, h, wd);
    for (int f = 0; f < spec.filters; ++f) {
        double bias_acc = 0.0;
        for (int oy = 0; oy < oh; ++oy) {
            const int iy0 = oy * spec.sh - spec.ph;
            for (int ox = 0; ox < ow; ++ox) {
                const int ix0 = ox * spec.sw - spec.pw;
                const double g = grad_out.at(f, oy, ox);
                bias_acc += g;
                if (g == 0.0) continue;
                for (int c = 0; c < c_in; ++c)
                    for (int ky = 0; ky < spec.kh; ++ky) {
                        const int iy = iy0 + ky;
                        if (iy < 0 || iy >= h) continue;
                        const double* in_row = &in.data[(static_cast<std::size_t>(c) * h + iy) * wd];
                        double* gin_row = &grad_in.data[(static_cast<std::size_t>(c) * h + iy) * wd];
                        const std::size_t w_base =
                            ((static_cast<std::size_t>(f) * c_in + c) * spec.kh + ky) * spec.kw;
                        const double* w_row = &w.data[w_base];
                        double* gw_row = &grad_w.data[w_base];
                        const int kx_lo = ix0 < 0 ? -ix0 : 0;
                        const int kx_hi = ix0 + spec.kw > wd ? wd - ix0 : spec.kw;
                        for (int kx = kx_lo; kx < kx_hi; ++kx) {
                            gw_row[kx] += g * in_row[ix0 + kx];
                            gin_row[ix0 + kx] += g * w_row[kx];
                        }
                    }
            }
        }
        grad_b.data[static_cast<std::size_t>(f)] += bias_acc;
    }
    return grad_in;
}

inline Tensor pad_forward(const PadSpec& spec, const Tensor& in) {
    const int c = in.channels(), h = in.height(), w = in.width();
    Tensor out = Tensor::chw(c, h + 2 * spec.mh, w + 2 * spec.mw);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(ch, y + spec.mh, x + spec.mw) = in.at(ch, y, x);
    return out;
}

inline Tensor pad_backward(const PadSpec& spec, const Tensor& grad_out, const std::vector<int>& in_shape) {
    Tensor grad_in = Tensor::chw(in_shape[0], in_shape[1], in_shape[2]);
    for (int ch = 0; ch < in_shape[0]; ++ch)
        for (int y = 0; y < in_shape[1]; ++y)
            for (int x = 0; x < in_shape[2]; ++x)
                grad_in.at(ch, y, x) = grad_out.at(ch, y + spec.mh, x + spec.mw);
    return grad_in;
}

inline Tensor activation_forward(const ActivationSpec& spec, const Tensor& in) {
    Tensor out = in;
    switch (spec.kind) {
    case ActKind::Tanh:
        for (auto& v : out.data) v = std::tanh(v);
        break;
    case ActKind::Relu:
        for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
        break;
    case ActKind::Rf:
        require_rf_params(spec.a, spec.b);
        for (auto& v : out.data) v = rf_activation(v, spec.a, spec.b);
        break;
    }
    return out;
}

inline Tensor activation_backward(const ActivationSpec& spec, const Tensor& in, const Tensor& out,
                                  const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    switch (spec.kind) {
    case ActKind::Tanh:
        for (std::size_t i = 0; i < grad_in.data.size(); ++i)
            grad_in.data[i] *= 1.0 - out.data[i] * out.data[i];
        break;
    case ActKind::Relu:
        for (std::size_t i = 0; i < grad_in.data.size(); ++i)
            if (in.data[i] <= 0.0) grad_in.data[i] = 0.0;
        break;
    case ActKind::Rf:
        for (std::size_t i = 0; i < grad_in.data.size(); ++i)
            grad_in.data[i] *= rf_derivative(in.data[i], spec.a, spec.b);
        break;
    }
    return grad_in;
}

namespace detail {

inline GrayImage channel_as_image(const Tensor& t, int c) {
    GrayImage img(exponent_for_side(t.height()));
    const std::size_t plane = static_cast<std::size_t>(t.height()) * t.width();
    std::copy_n(t.data.begin() + static_cast<std::ptrdiff_t>(c * plane), plane, img.data.begin());
    return img;
}

inline void image_into_channel(const GrayImage& img, Tensor& t, int c) {
    const std::size_t plane = static_cast<std::size_t>(t.height()) * t.width();
    std::copy_n(img.data.begin(), plane, t.data.begin() + static_cast<std::ptrdiff_t>(c * plane));
}

} // namespace detail

/// Integral transform applied independently per channel. No parameters.
inline Tensor fht_layer_forward(const FhtLayerSpec& spec, const Tensor& in) {
    if (in.rank() != 3 || in.height() != in.width())
        throw ShapeError("fht layer: input must be square (channels, n, n)");
    Tensor out = in;
    for (int c = 0; c < in.channels(); ++c) {
        const GrayImage img = detail::channel_as_image(in, c);
        detail::image_into_channel(fht_quadrant(img, spec.quadrant, spec.transposed), out, c);
    }
    return out;
}

/// Gradient of the integral transform: the adjoint routing, i.e. the same
/// quadrant with the transposed flag inverted.
inline Tensor fht_layer_backward(const FhtLayerSpec& spec, const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (int c = 0; c < grad_out.channels(); ++c) {
        const GrayImage img = detail::channel_as_image(grad_out, c);
        detail::image_into_channel(fht_quadrant(img, spec.quadrant, !spec.transposed), grad_in, c);
    }
    return grad_in;
}

inline Tensor dense_forward(const DenseSpec& spec, const Tensor& in, const Tensor& w, const Tensor& b) {
    const int n_in = static_cast<int>(in.size());
    Tensor out = Tensor::flat(spec.outputs);
    for (int o = 0; o < spec.outputs; ++o) {
        const double* w_row = &w.data[static_cast<std::size_t>(o) * n_in];
        double acc = b.data[static_cast<std::size_t>(o)];
        for (int i = 0; i < n_in; ++i) acc += w_row[i] * in.data[static_cast<std::size_t>(i)];
        out.data[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

inline Tensor dense_backward(const DenseSpec& spec, const Tensor& in, const Tensor& w,
                             const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b) {
    const int n_in = static_cast<int>(in.size());
    Tensor grad_in;
    grad_in.shape = in.shape;
    grad_in.data.assign(in.data.size(), 0.0);
    for (int o = 0; o < spec.outputs; ++o) {
        const double g = grad_out.data[static_cast<std::size_t>(o)];
        grad_b.data[static_cast<std::size_t>(o)] += g;
        if (g == 0.0) continue;
        const double* w_row = &w.data[static_cast<std::size_t>(o) * n_in];
        double* gw_row = &grad_w.data[static_cast<std::size_t>(o) * n_in];
        for (int i = 0; i < n_in; ++i) {
            gw_row[i] += g * in.data[static_cast<std::size_t>(i)];
            grad_in.data[static_cast<std::size_t>(i)] += g * w_row[i];
        }
    }
    return grad_in;
}

inline Tensor softmax_forward(const Tensor& in) {
    Tensor out = in;
    double mx = out.data[0];
    for (double v : out.data) mx = std::max(mx, v);
    double total = 0.0;
    for (auto& v : out.data) {
        v = std::exp(v - mx);
        total += v;
    }
    for (auto& v : out.data) v /= total;
    return out;
}

inline Tensor softmax_backward(const Tensor& out, const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    double inner = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) inner += out.data[i] * grad_out.data[i];
    for (std::size_t i = 0; i < out.data.size(); ++i)
        grad_in.data[i] = out.data[i] * (grad_out.data[i] - inner);
    return grad_in;
}

} // namespace fhtnet::nn
