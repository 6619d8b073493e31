#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fhtnet/net.hpp"
#include "fhtnet/parallel.hpp"

namespace fhtnet::nn {

enum class LossKind { SoftmaxCrossEntropy, TargetMap };

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 16;
    int epochs = 1;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::TargetMap;
};

/// One supervised example. `target` is used by the target-map loss, `label`
/// by softmax cross-entropy.
struct TrainSample {
    Tensor input;
    Tensor target;
    int label = 0;
};

struct LossValue {
    double value = 0.0;
    Tensor grad; // w.r.t. the network output
};

inline LossValue target_map_loss(const Tensor& output, const Tensor& target) {
    if (output.data.size() != target.data.size())
        throw ShapeError("target_map_loss: output and target sizes differ");
    LossValue r;
    r.grad = output;
    double acc = 0.0;
    for (std::size_t i = 0; i < output.data.size(); ++i) {
        const double d = output.data[i] - target.data[i];
        r.grad.data[i] = d;
        acc += d * d;
    }
    r.value = 0.5 * acc;
    return r;
}

inline LossValue softmax_cross_entropy_loss(const Tensor& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.data.size()))
        throw ArgumentError("softmax_cross_entropy_loss: label out of range");
    LossValue r;
    r.grad = probs;
    std::fill(r.grad.data.begin(), r.grad.data.end(), 0.0);
    const double p = std::max(probs.data[static_cast<std::size_t>(label)], 1e-300);
    r.value = -std::log(p);
    r.grad.data[static_cast<std::size_t>(label)] = -1.0 / p;
    return r;
}

inline LossValue sample_loss(const TrainConfig& cfg, const Tensor& output, const TrainSample& s) {
    return cfg.loss == LossKind::TargetMap ? target_map_loss(output, s.target)
                                           : softmax_cross_entropy_loss(output, s.label);
}

struct TrainResult {
    std::vector<double> epoch_loss; // mean per-sample loss per epoch
};

/// Plain minibatch SGD with a fixed learning rate. Deterministic for a given
/// seed: sample order comes from one seeded generator, and per-sample
/// gradients are reduced in sample order regardless of the worker count.
inline TrainResult train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg) {
    if (cfg.batch_size < 1 || cfg.epochs < 0 || !(cfg.learning_rate > 0.0))
        throw ConfigError("train: hyperparameters must be positive");
    if (data.empty()) throw ArgumentError("train: empty dataset");

    TrainResult result;
    std::mt19937_64 rng(cfg.seed);
    std::vector<int> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const int count = static_cast<int>(std::min<std::size_t>(cfg.batch_size, order.size() - start));
            std::vector<std::vector<Tensor>> grads(count);
            std::vector<double> losses(count, 0.0);
            parallel_for(0, count, [&](int i) {
                ForwardCache cache;
                const TrainSample& s = data[static_cast<std::size_t>(order[start + i])];
                const Tensor out = forward(model, s.input, &cache);
                const LossValue lv = sample_loss(cfg, out, s);
                losses[i] = lv.value;
                grads[i] = zero_gradients(model);
                backward(model, cache, lv.grad, grads[i]);
            });
            double batch_loss = 0.0;
            for (int i = 0; i < count; ++i) batch_loss += losses[i];
            if (!std::isfinite(batch_loss))
                throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch starting at sample " + std::to_string(start));
            epoch_loss += batch_loss;
            const double step = cfg.learning_rate / count;
            for (std::size_t t = 0; t < model.params.size(); ++t)
                for (std::size_t k = 0; k < model.params[t].data.size(); ++k) {
                    double g = 0.0;
                    for (int i = 0; i < count; ++i) g += grads[static_cast<std::size_t>(i)][t].data[k];
                    model.params[t].data[k] -= step * g;
                }
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Finite-difference verification of the full backward pass

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
};

/// Central differences on up to `max_params` randomly chosen parameters
/// against the analytic gradient of the sample loss.
inline GradCheckResult gradient_check(Model& model, const TrainSample& sample, LossKind loss,
                                      int max_params = 100, std::uint64_t seed = 1,
                                      double step = 1e-5) {
    TrainConfig cfg;
    cfg.loss = loss;

    ForwardCache cache;
    const Tensor out = forward(model, sample.input, &cache);
    const LossValue lv = sample_loss(cfg, out, sample);
    std::vector<Tensor> analytic = zero_gradients(model);
    backward(model, cache, lv.grad, analytic);

    std::vector<std::pair<std::size_t, std::size_t>> index; // (tensor, element)
    for (std::size_t t = 0; t < model.params.size(); ++t)
        for (std::size_t k = 0; k < model.params[t].data.size(); ++k) index.emplace_back(t, k);
    std::mt19937_64 rng(seed);
    std::shuffle(index.begin(), index.end(), rng);
    const int n_check = std::min<int>(max_params, static_cast<int>(index.size()));

    GradCheckResult result;
    result.checked = n_check;
    for (int i = 0; i < n_check; ++i) {
        auto [t, k] = index[static_cast<std::size_t>(i)];
        double& theta = model.params[t].data[k];
        const double saved = theta;
        theta = saved + step;
        const double up = sample_loss(cfg, forward(model, sample.input), sample).value;
        theta = saved - step;
        const double down = sample_loss(cfg, forward(model, sample.input), sample).value;
        theta = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double exact = analytic[t].data[k];
        const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
        result.max_rel_err = std::max(result.max_rel_err, std::abs(numeric - exact) / denom);
    }
    return result;
}

} // namespace fhtnet::nn
