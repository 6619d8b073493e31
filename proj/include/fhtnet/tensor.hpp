#pragma once

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "fhtnet/errors.hpp"

namespace fhtnet::nn {

/// Dense real array, either (channels, height, width) or flat (length).
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor chw(int c, int h, int w) {
        if (c < 1 || h < 1 || w < 1) throw ArgumentError("Tensor::chw: non-positive dimension");
        Tensor t;
        t.shape = {c, h, w};
        t.data.assign(static_cast<std::size_t>(c) * h * w, 0.0);
        return t;
    }

    static Tensor flat(int len) {
        if (len < 1) throw ArgumentError("Tensor::flat: non-positive length");
        Tensor t;
        t.shape = {len};
        t.data.assign(static_cast<std::size_t>(len), 0.0);
        return t;
    }

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return data.size(); }

    int channels() const { return shape.at(0); }
    int height() const { return shape.at(1); }
    int width() const { return shape.at(2); }

    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height() + y) * width() + x];
    }

    bool operator==(const Tensor&) const = default;
};

inline std::size_t shape_elements(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

inline std::string shape_string(const std::vector<int>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

inline void require_shape(const Tensor& t, const std::vector<int>& shape, const char* where) {
    if (t.shape != shape)
        throw ShapeError(std::string(where) + ": expected tensor of shape " + shape_string(shape) +
                         ", got " + shape_string(t.shape));
    if (t.data.size() != shape_elements(shape))
        throw ShapeError(std::string(where) + ": tensor data length does not match its shape");
}

} // namespace fhtnet::nn
