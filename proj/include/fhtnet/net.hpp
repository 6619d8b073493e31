#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fhtnet/layers.hpp"

namespace fhtnet::nn {

/// Ordered layer list plus the (channels, height, width) shape it consumes.
struct NetworkSpec {
    std::array<int, 3> input_shape{1, 1, 1};
    std::vector<LayerSpec> layers;
};

/// Affine map from output heat-map coordinates back to input pixel
/// coordinates: input = scale * output + offset, per axis.
struct AffineTrace {
    bool valid = true; // false once a dense/softmax layer destroys spatial meaning
    double scale_y = 1.0, offset_y = 0.0;
    double scale_x = 1.0, offset_x = 0.0;

    double map_y(double r) const { return scale_y * r + offset_y; }
    double map_x(double c) const { return scale_x * c + offset_x; }
    double unmap_y(double y) const { return (y - offset_y) / scale_y; }
    double unmap_x(double x) const { return (x - offset_x) / scale_x; }
    bool invertible() const { return valid && scale_y != 0.0 && scale_x != 0.0; }
};

/// Result of static validation: the output shape of every layer (index 0 is
/// the input itself) and the composed coordinate trace.
struct ShapeTrace {
    std::vector<std::vector<int>> shapes;
    AffineTrace trace;
};

inline ShapeTrace propagate_shapes(const NetworkSpec& net) {
    ShapeTrace out;
    if (net.input_shape[0] < 1 || net.input_shape[1] < 1 || net.input_shape[2] < 1)
        throw ConfigError("network: input shape must be positive");
    std::vector<int> shape{net.input_shape[0], net.input_shape[1], net.input_shape[2]};
    out.shapes.push_back(shape);

    // The trace is accumulated output-to-input as in = s*out + o per layer,
    // composed from the input side: after layer with (s_l, o_l),
    // total in(r) = S*(s_l*r + o_l) + O.
    auto compose = [&out](double s, double o_axis_y, double o_axis_x) {
        out.trace.offset_y = out.trace.scale_y * o_axis_y + out.trace.offset_y;
        out.trace.offset_x = out.trace.scale_x * o_axis_x + out.trace.offset_x;
        out.trace.scale_y *= s;
        out.trace.scale_x *= s;
    };

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(layer) + ")";
        if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
            if (shape.size() != 3) throw ShapeError(where + ": needs a (c,h,w) input");
            if (conv->filters < 1 || conv->kh < 1 || conv->kw < 1 || conv->sh < 1 || conv->sw < 1 ||
                conv->ph < 0 || conv->pw < 0)
                throw ConfigError(where + ": non-positive geometry");
            const int h = shape[1] + 2 * conv->ph - conv->kh;
            const int w = shape[2] + 2 * conv->pw - conv->kw;
            if (h < 0 || w < 0) throw ShapeError(where + ": kernel larger than padded input");
            shape = {conv->filters, h / conv->sh + 1, w / conv->sw + 1};
            if (out.trace.valid) {
                // same stride/offset on both axes only when geometry is symmetric
                out.trace.offset_y =
                    out.trace.scale_y * ((conv->kh - 1) / 2.0 - conv->ph) + out.trace.offset_y;
                out.trace.offset_x =
                    out.trace.scale_x * ((conv->kw - 1) / 2.0 - conv->pw) + out.trace.offset_x;
                out.trace.scale_y *= conv->sh;
                out.trace.scale_x *= conv->sw;
            }
        } else if (const auto* pad = std::get_if<PadSpec>(&layer)) {
            if (shape.size() != 3) throw ShapeError(where + ": needs a (c,h,w) input");
            if (pad->mh < 0 || pad->mw < 0) throw ConfigError(where + ": negative margin");
            shape = {shape[0], shape[1] + 2 * pad->mh, shape[2] + 2 * pad->mw};
            if (out.trace.valid) compose(1.0, -pad->mh, -pad->mw);
        } else if (const auto* act = std::get_if<ActivationSpec>(&layer)) {
            if (act->kind == ActKind::Rf) require_rf_params(act->a, act->b);
        } else if (const auto* fht = std::get_if<FhtLayerSpec>(&layer)) {
            (void)fht;
            if (shape.size() != 3) throw ShapeError(where + ": needs a (c,h,w) input");
            if (shape[1] != shape[2])
                throw ConfigError(where + ": input must be square, got " + shape_string(shape));
            int side = shape[1];
            if (side & (side - 1))
                throw ConfigError(where + ": input side " + std::to_string(side) +
                                  " is not a power of two; adjust the preceding padding");
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            if (dense->outputs < 1) throw ConfigError(where + ": non-positive output count");
            shape = {dense->outputs};
            out.trace.valid = false;
        } else {
            if (shape.size() != 1) throw ShapeError(where + ": softmax expects a flat input");
            out.trace.valid = false;
        }
        out.shapes.push_back(shape);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameters

/// Location of a layer's parameters inside the flat blob list: index of the
/// weight tensor (bias follows), or -1 for parameterless layers.
inline std::vector<int> param_layout(const NetworkSpec& net, const ShapeTrace& st,
                                     std::vector<Tensor>* init_shapes = nullptr) {
    std::vector<int> offsets(net.layers.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* conv = std::get_if<ConvSpec>(&net.layers[i])) {
            offsets[i] = next;
            next += 2;
            if (init_shapes) {
                Tensor w;
                w.shape = {conv->filters, st.shapes[i][0], conv->kh, conv->kw};
                w.data.assign(shape_elements(w.shape), 0.0);
                init_shapes->push_back(std::move(w));
                init_shapes->push_back(Tensor::flat(conv->filters));
            }
        } else if (const auto* dense = std::get_if<DenseSpec>(&net.layers[i])) {
            offsets[i] = next;
            next += 2;
            if (init_shapes) {
                Tensor w;
                w.shape = {dense->outputs, static_cast<int>(shape_elements(st.shapes[i]))};
                w.data.assign(shape_elements(w.shape), 0.0);
                init_shapes->push_back(std::move(w));
                init_shapes->push_back(Tensor::flat(dense->outputs));
            }
        }
    }
    return offsets;
}

/// A network spec bound to parameter values.
struct Model {
    NetworkSpec spec;
    ShapeTrace shapes;
    std::vector<int> param_offsets;
    std::vector<Tensor> params;

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& t : params) n += t.size();
        return n;
    }
};

/// Symmetric uniform init with limit sqrt(6 / (fan_in + fan_out)); biases zero.
inline Model make_model(const NetworkSpec& spec, std::uint64_t seed) {
    Model m;
    m.spec = spec;
    m.shapes = propagate_shapes(spec);
    m.param_offsets = param_layout(spec, m.shapes, &m.params);

    std::mt19937_64 rng(seed);
    auto uniform_pm = [&rng](double limit) {
        const double u = static_cast<double>(rng() >> 11) * 0x1p-53; // [0, 1)
        return (2.0 * u - 1.0) * limit;
    };
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const int off = m.param_offsets[i];
        if (off < 0) continue;
        Tensor& w = m.params[static_cast<std::size_t>(off)];
        double fan_in = 0.0, fan_out = 0.0;
        if (const auto* conv = std::get_if<ConvSpec>(&spec.layers[i])) {
            fan_in = static_cast<double>(w.shape[1]) * conv->kh * conv->kw;
            fan_out = static_cast<double>(conv->filters) * conv->kh * conv->kw;
        } else {
            fan_in = static_cast<double>(w.shape[1]);
            fan_out = static_cast<double>(w.shape[0]);
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : w.data) v = uniform_pm(limit);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Whole-network forward / backward

/// acts[0] is the input; acts[i+1] the output of layer i.
struct ForwardCache {
    std::vector<Tensor> acts;
};

inline Tensor forward(const Model& m, const Tensor& input, ForwardCache* cache = nullptr) {
    require_shape(input, {m.spec.input_shape[0], m.spec.input_shape[1], m.spec.input_shape[2]},
                  "forward");
    Tensor cur = input;
    if (cache) {
        cache->acts.clear();
        cache->acts.reserve(m.spec.layers.size() + 1);
        cache->acts.push_back(cur);
    }
    for (std::size_t i = 0; i < m.spec.layers.size(); ++i) {
        const int off = m.param_offsets[i];
        const LayerSpec& layer = m.spec.layers[i];
        if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
            cur = conv_forward(*conv, cur, m.params[off], m.params[off + 1]);
        } else if (const auto* pad = std::get_if<PadSpec>(&layer)) {
            cur = pad_forward(*pad, cur);
        } else if (const auto* act = std::get_if<ActivationSpec>(&layer)) {
            cur = activation_forward(*act, cur);
        } else if (const auto* fht = std::get_if<FhtLayerSpec>(&layer)) {
            cur = fht_layer_forward(*fht, cur);
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            Tensor flat = cur; // dense consumes any shape as a flat vector
            cur = dense_forward(*dense, flat, m.params[off], m.params[off + 1]);
        } else {
            cur = softmax_forward(cur);
        }
        if (cache) cache->acts.push_back(cur);
    }
    return cur;
}

/// Walks the cache top-down; returns the gradient w.r.t. the network input and
/// accumulates parameter gradients (same layout as model.params) into grads.
inline Tensor backward(const Model& m, const ForwardCache& cache, const Tensor& grad_output,
                       std::vector<Tensor>& grads) {
    if (cache.acts.size() != m.spec.layers.size() + 1)
        throw UsageError("backward: forward cache missing or stale");
    if (grads.size() != m.params.size())
        throw UsageError("backward: gradient buffer layout does not match parameters");
    Tensor g = grad_output;
    for (std::size_t ri = m.spec.layers.size(); ri-- > 0;) {
        const LayerSpec& layer = m.spec.layers[ri];
        const Tensor& in = cache.acts[ri];
        const Tensor& out = cache.acts[ri + 1];
        const int off = m.param_offsets[ri];
        if (const auto* conv = std::get_if<ConvSpec>(&layer)) {
            g = conv_backward(*conv, in, m.params[off], g, grads[off], grads[off + 1]);
        } else if (const auto* pad = std::get_if<PadSpec>(&layer)) {
            g = pad_backward(*pad, g, in.shape);
        } else if (const auto* act = std::get_if<ActivationSpec>(&layer)) {
            g = activation_backward(*act, in, out, g);
        } else if (const auto* fht = std::get_if<FhtLayerSpec>(&layer)) {
            g = fht_layer_backward(*fht, g);
        } else if (const auto* dense = std::get_if<DenseSpec>(&layer)) {
            g = dense_backward(*dense, in, m.params[off], g, grads[off], grads[off + 1]);
            g.shape = in.shape;
        } else {
            g = softmax_backward(out, g);
        }
    }
    return g;
}

inline std::vector<Tensor> zero_gradients(const Model& m) {
    std::vector<Tensor> grads = m.params;
    for (auto& t : grads) std::fill(t.data.begin(), t.data.end(), 0.0);
    return grads;
}

// ---------------------------------------------------------------------------
// Architecture builders

/// Four strided/padded conv+relu stages followed by one fully-connected layer
/// over grid^2 cells and a softmax.
inline NetworkSpec build_base_arch(int grid, std::array<int, 3> input_shape = {1, 227, 227}) {
    if (grid < 1) throw ConfigError("build_base_arch: grid must be positive");
    NetworkSpec net;
    net.input_shape = input_shape;
    net.layers = {
        ConvSpec{32, 11, 11, 4, 4, 0, 0}, ActivationSpec{ActKind::Relu},
        ConvSpec{32, 5, 5, 1, 1, 2, 2},   ActivationSpec{ActKind::Relu},
        ConvSpec{32, 3, 3, 1, 1, 1, 1},   ActivationSpec{ActKind::Relu},
        ConvSpec{32, 3, 3, 1, 1, 1, 1},   ActivationSpec{ActKind::Relu},
        DenseSpec{grid * grid},           SoftmaxSpec{},
    };
    propagate_shapes(net); // validate
    return net;
}

enum class FhtArchScale { Toy, Paper };

/// Conv blocks with tanh, then pad -> forward integral transform -> rf[3,1],
/// another conv block, pad -> transposed integral transform -> rf[3,1], and a
/// final conv block ending in rf[2,1] with a single-channel heat map output.
///
/// Paper scale follows the published layer table; its 378x378 input makes both
/// integral layers run on 128x128 planes. Toy scale is the same pattern sized
/// for 64x64 inputs with both integral layers on 32x32 planes.
inline NetworkSpec build_fht_arch(FhtArchScale scale) {
    NetworkSpec net;
    const ActivationSpec tanh_act{ActKind::Tanh};
    const ActivationSpec rf31{ActKind::Rf, 3, 1.0};
    const ActivationSpec rf21{ActKind::Rf, 2, 1.0};
    if (scale == FhtArchScale::Paper) {
        net.input_shape = {1, 378, 378};
        net.layers = {
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            ConvSpec{12, 5, 5, 3, 3}, tanh_act,
            ConvSpec{12, 3, 3, 1, 1}, tanh_act,
            ConvSpec{12, 3, 3, 1, 1}, tanh_act,
            PadSpec{4, 4},
            FhtLayerSpec{false},      rf31,
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            PadSpec{6, 6},
            FhtLayerSpec{true},       rf31,
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            ConvSpec{12, 5, 5, 1, 1}, tanh_act,
            ConvSpec{1, 5, 5, 1, 1},  rf21,
        };
    } else {
        net.input_shape = {1, 64, 64};
        net.layers = {
            ConvSpec{6, 5, 5, 1, 1}, tanh_act,
            ConvSpec{6, 5, 5, 2, 2}, tanh_act,
            PadSpec{2, 2},
            FhtLayerSpec{false},     rf31,
            ConvSpec{6, 3, 3, 1, 1}, tanh_act,
            PadSpec{1, 1},
            FhtLayerSpec{true},      rf31,
            ConvSpec{6, 3, 3, 1, 1}, tanh_act,
            ConvSpec{1, 3, 3, 1, 1}, rf21,
        };
    }
    propagate_shapes(net); // validate, including the power-of-two constraint
    return net;
}

/// Ablation twin: the same spec with the integral layers removed. They carry
/// no parameters, so the twin is parameter-matched exactly.
inline NetworkSpec strip_fht_layers(const NetworkSpec& net) {
    NetworkSpec out;
    out.input_shape = net.input_shape;
    for (const auto& layer : net.layers)
        if (!std::holds_alternative<FhtLayerSpec>(layer)) out.layers.push_back(layer);
    propagate_shapes(out);
    return out;
}

// ---------------------------------------------------------------------------
// Complexity accounting

struct LayerComplexity {
    int layer = 0;
    std::string kind;
    std::uint64_t ops = 0;
    std::size_t parameters = 0;
};

struct ComplexityEntryRatio {
    int conv_layer = 0;
    int fht_layer = 0;
    double conv_over_fht = 0.0;
};

struct ComplexityReport {
    std::vector<LayerComplexity> layers;
    std::vector<ComplexityEntryRatio> ratios; // conv ops / integral-layer ops for adjacent pairs
    std::uint64_t total_ops = 0;
    std::size_t total_parameters = 0;
};

/// Multiply-add counts per layer: conv = c*h*w*f^2*m on its input tensor,
/// integral layer = c*s^2*log2(s). Ratios pair every integral layer with the
/// nearest convolution on either side.
inline ComplexityReport complexity_report(const NetworkSpec& net) {
    const ShapeTrace st = propagate_shapes(net);
    std::vector<Tensor> shapes;
    param_layout(net, st, &shapes);

    ComplexityReport rep;
    std::size_t param_cursor = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& in_shape = st.shapes[i];
        LayerComplexity lc;
        lc.layer = static_cast<int>(i);
        lc.kind = layer_kind_name(net.layers[i]);
        if (const auto* conv = std::get_if<ConvSpec>(&net.layers[i])) {
            lc.ops = static_cast<std::uint64_t>(in_shape[0]) * in_shape[1] * in_shape[2] *
                     conv->kh * conv->kw * conv->filters;
            lc.parameters = shapes[param_cursor].size() + shapes[param_cursor + 1].size();
            param_cursor += 2;
        } else if (std::get_if<FhtLayerSpec>(&net.layers[i])) {
            const int side = in_shape[1];
            int log2s = 0;
            while ((1 << log2s) < side) ++log2s;
            lc.ops = static_cast<std::uint64_t>(in_shape[0]) * side * side * log2s;
        } else if (const auto* dense = std::get_if<DenseSpec>(&net.layers[i])) {
            lc.ops = shape_elements(in_shape) * static_cast<std::uint64_t>(dense->outputs);
            lc.parameters = shapes[param_cursor].size() + shapes[param_cursor + 1].size();
            param_cursor += 2;
        } else {
            lc.ops = shape_elements(in_shape); // elementwise
        }
        rep.total_ops += lc.ops;
        rep.total_parameters += lc.parameters;
        rep.layers.push_back(std::move(lc));
    }

    auto is_conv = [&](int i) { return std::holds_alternative<ConvSpec>(net.layers[i]); };
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!std::holds_alternative<FhtLayerSpec>(net.layers[i])) continue;
        for (int j = static_cast<int>(i) - 1; j >= 0; --j)
            if (is_conv(j)) {
                rep.ratios.push_back({j, static_cast<int>(i),
                                      static_cast<double>(rep.layers[j].ops) / rep.layers[i].ops});
                break;
            }
        for (std::size_t j = i + 1; j < net.layers.size(); ++j)
            if (is_conv(static_cast<int>(j))) {
                rep.ratios.push_back({static_cast<int>(j), static_cast<int>(i),
                                      static_cast<double>(rep.layers[j].ops) / rep.layers[i].ops});
                break;
            }
    }
    return rep;
}

} // namespace fhtnet::nn
