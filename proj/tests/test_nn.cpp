#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "fhtnet/model_io.hpp"
#include "fhtnet/net.hpp"
#include "fhtnet/train.hpp"
#include "test_util.hpp"

using namespace fhtnet;
using namespace fhtnet::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double scale = 1.0) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.resize(shape_elements(t.shape));
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& v : t.data) v = dist(rng);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

} // namespace

TEST_CASE("rf activation pinned values") {
    CHECK(rf_activation(0.0, 3, 1.0) == 0.0);
    CHECK(rf_activation(1.0, 3, 1.0) == Catch::Approx(0.5));
    CHECK(rf_activation(2.0, 3, 1.0) == Catch::Approx(8.0 / 9.0));
    CHECK(rf_activation(-1.0, 2, 1.0) == Catch::Approx(-0.5)); // signed power keeps it odd
    CHECK_THROWS_AS(rf_activation(1.0, 0, 1.0), ArgumentError);
    CHECK_THROWS_AS(rf_activation(1.0, 1, 0.0), ArgumentError);
}

TEST_CASE("rf activation properties on a dense grid") {
    for (const auto& [a, b] : std::vector<std::pair<int, double>>{{3, 1.0}, {2, 1.0}, {1, 0.5}, {4, 2.0}}) {
        double prev = -2.0;
        for (int i = 0; i < 10000; ++i) {
            const double x = -3.0 + 6.0 * i / 9999.0;
            const double y = rf_activation(x, a, b);
            REQUIRE(std::abs(y) < 1.0);
            REQUIRE(std::abs(y + rf_activation(-x, a, b)) < 1e-15); // odd
            REQUIRE(y > prev);                                      // strictly increasing
            prev = y;
            if (x != 0.0) REQUIRE(rf_derivative(x, a, b) > 0.0);

            const double h = 1e-6;
            const double numeric = (rf_activation(x + h, a, b) - rf_activation(x - h, a, b)) / (2 * h);
            const double exact = rf_derivative(x, a, b);
            REQUIRE(std::abs(numeric - exact) <= 1e-7 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("pad layer builds a zero frame") {
    Tensor in = Tensor::chw(1, 2, 2);
    for (auto& v : in.data) v = 1.0;
    const Tensor out = pad_forward(PadSpec{1, 1}, in);
    REQUIRE(out.shape == std::vector<int>{1, 4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            const bool frame = y == 0 || y == 3 || x == 0 || x == 3;
            REQUIRE(out.at(0, y, x) == (frame ? 0.0 : 1.0));
        }
}

TEST_CASE("1x1 identity convolution passes the input through") {
    std::mt19937_64 rng(1);
    const Tensor in = random_tensor({1, 5, 5}, rng);
    Tensor w;
    w.shape = {1, 1, 1, 1};
    w.data = {1.0};
    const Tensor b = Tensor::flat(1);
    const Tensor out = conv_forward(ConvSpec{1, 1, 1}, in, w, b);
    REQUIRE(out.data == in.data);
}

TEST_CASE("integral layer applies the transform per channel") {
    std::mt19937_64 rng(2);
    const Tensor in = random_tensor({3, 8, 8}, rng);
    const Tensor out = fht_layer_forward(FhtLayerSpec{}, in);
    for (int c = 0; c < 3; ++c) {
        GrayImage img(3);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) img(y, x) = in.at(c, y, x);
        const GrayImage want = fht_forward(img);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) REQUIRE(out.at(c, y, x) == want(y, x));
    }

    Tensor bad = Tensor::chw(1, 6, 6);
    CHECK_THROWS_AS(fht_layer_forward(FhtLayerSpec{}, bad), ArgumentError);
}

TEST_CASE("integral layer backward is the adjoint of its forward") {
    std::mt19937_64 rng(3);
    for (bool transposed : {false, true}) {
        const FhtLayerSpec spec{transposed};
        const Tensor x = random_tensor({2, 16, 16}, rng);
        const Tensor g = random_tensor({2, 16, 16}, rng);
        const double lhs = dot(fht_layer_forward(spec, x), g);
        const double rhs = dot(x, fht_layer_backward(spec, g));
        REQUIRE(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(lhs)));

        Tensor zero = Tensor::chw(2, 16, 16);
        REQUIRE(fht_layer_backward(spec, zero) == zero);
    }
}

TEST_CASE("base architecture builder") {
    const NetworkSpec paper = build_base_arch(10);
    const ShapeTrace st = propagate_shapes(paper);
    REQUIRE(st.shapes.back() == std::vector<int>{100});
    REQUIRE_FALSE(st.trace.valid); // dense head destroys the spatial trace

    const NetworkSpec toy = build_base_arch(8, {1, 64, 64});
    REQUIRE(propagate_shapes(toy).shapes.back() == std::vector<int>{64});
}

TEST_CASE("integral-transform architecture builder") {
    const NetworkSpec paper = build_fht_arch(FhtArchScale::Paper);
    const ShapeTrace pst = propagate_shapes(paper);

    // layer table: filters / strides / activations in published order
    const std::vector<const char*> kinds_want = {
        "conv", "tanh", "conv", "tanh", "conv", "tanh", "conv", "tanh", "pad",  "fht",
        "rf",   "conv", "tanh", "conv", "tanh", "conv", "tanh", "pad",  "fht_t", "rf",
        "conv", "tanh", "conv", "tanh", "conv", "rf"};
    REQUIRE(paper.layers.size() == kinds_want.size());
    for (std::size_t i = 0; i < kinds_want.size(); ++i)
        REQUIRE(std::string(layer_kind_name(paper.layers[i])) == kinds_want[i]);

    // both integral layers run on 128x128 planes at paper scale
    for (std::size_t i = 0; i < paper.layers.size(); ++i)
        if (std::holds_alternative<FhtLayerSpec>(paper.layers[i])) {
            REQUIRE(pst.shapes[i][1] == 128);
            REQUIRE(pst.shapes[i][2] == 128);
        }
    // single-channel heat map out, spatially traceable back to the input
    REQUIRE(pst.shapes.back()[0] == 1);
    REQUIRE(pst.trace.invertible());

    const NetworkSpec toy = build_fht_arch(FhtArchScale::Toy);
    const ShapeTrace tst = propagate_shapes(toy);
    for (std::size_t i = 0; i < toy.layers.size(); ++i)
        if (std::holds_alternative<FhtLayerSpec>(toy.layers[i])) {
            const int side = tst.shapes[i][1];
            REQUIRE((side == 16 || side == 32 || side == 64));
        }
    REQUIRE(tst.shapes.back()[0] == 1);
    REQUIRE(tst.trace.invertible());
}

TEST_CASE("integral layers carry zero parameters") {
    const NetworkSpec toy = build_fht_arch(FhtArchScale::Toy);
    const auto report = complexity_report(toy);
    for (const auto& lc : report.layers)
        if (lc.kind == "fht" || lc.kind == "fht_t") REQUIRE(lc.parameters == 0);

    // the ablation twin without integral layers is parameter-matched exactly
    const Model a = make_model(toy, 9);
    const Model b = make_model(strip_fht_layers(toy), 9);
    REQUIRE(a.parameter_count() == b.parameter_count());

    const auto paper_report = complexity_report(build_fht_arch(FhtArchScale::Paper));
    INFO("paper-scale trainable parameters: " << paper_report.total_parameters
                                              << " (published reference: 25309)");
    REQUIRE(paper_report.total_parameters > 0);
}

TEST_CASE("complexity counts match the closed formulas") {
    NetworkSpec net;
    net.input_shape = {12, 32, 32};
    net.layers = {FhtLayerSpec{false}, ActivationSpec{ActKind::Rf, 3, 1.0}, ConvSpec{12, 5, 5, 1, 1}};
    const auto report = complexity_report(net);
    REQUIRE(report.layers[0].ops == 12ull * 1024 * 5);        // c * s^2 * log2(s)
    REQUIRE(report.layers[2].ops == 12ull * 1024 * 25 * 12);  // c * s^2 * f^2 * m
    REQUIRE(report.ratios.size() == 1);
    REQUIRE(report.ratios[0].conv_over_fht == Catch::Approx(60.0)); // f^2 m / log2 s
}

TEST_CASE("gradient check: linear convolutional model is exact") {
    NetworkSpec net;
    net.input_shape = {1, 8, 8};
    net.layers = {ConvSpec{2, 3, 3, 1, 1}};
    Model model = make_model(net, 4);

    std::mt19937_64 rng(5);
    TrainSample s;
    s.input = random_tensor({1, 8, 8}, rng);
    s.target = random_tensor({2, 6, 6}, rng);
    const auto r = gradient_check(model, s, LossKind::TargetMap, 100, 6);
    INFO("max rel err " << r.max_rel_err);
    REQUIRE(r.checked == 20); // whole parameter vector of this small model
    REQUIRE(r.max_rel_err < 1e-8);
}

TEST_CASE("gradient check: strided padded conv with tanh") {
    NetworkSpec net;
    net.input_shape = {2, 9, 9};
    net.layers = {ConvSpec{3, 3, 3, 2, 2, 1, 1}, ActivationSpec{ActKind::Tanh},
                  ConvSpec{2, 3, 3, 1, 1}, ActivationSpec{ActKind::Rf, 2, 1.0}};
    Model model = make_model(net, 7);
    std::mt19937_64 rng(8);
    TrainSample s;
    s.input = random_tensor({2, 9, 9}, rng);
    const ShapeTrace st = propagate_shapes(net);
    s.target = random_tensor(st.shapes.back(), rng);
    const auto r = gradient_check(model, s, LossKind::TargetMap, 150, 9);
    INFO("max rel err " << r.max_rel_err);
    REQUIRE(r.max_rel_err < 1e-5);
}

TEST_CASE("gradient check: toy integral-transform network end to end") {
    const NetworkSpec toy = build_fht_arch(FhtArchScale::Toy);
    Model model = make_model(toy, 10);
    std::mt19937_64 rng(11);
    TrainSample s;
    s.input = random_tensor({1, 64, 64}, rng, 0.5);
    const ShapeTrace st = propagate_shapes(toy);
    s.target = random_tensor(st.shapes.back(), rng, 0.5);
    const auto r = gradient_check(model, s, LossKind::TargetMap, 120, 12);
    INFO("max rel err " << r.max_rel_err);
    REQUIRE(r.max_rel_err < 1e-5);
}

TEST_CASE("gradient check: softmax cross-entropy head") {
    NetworkSpec net;
    net.input_shape = {1, 8, 8};
    net.layers = {ConvSpec{2, 3, 3, 1, 1}, ActivationSpec{ActKind::Relu}, DenseSpec{5}, SoftmaxSpec{}};
    Model model = make_model(net, 13);
    std::mt19937_64 rng(14);
    TrainSample s;
    s.input = random_tensor({1, 8, 8}, rng);
    s.label = 3;
    const auto r = gradient_check(model, s, LossKind::SoftmaxCrossEntropy, 120, 15);
    INFO("max rel err " << r.max_rel_err);
    REQUIRE(r.max_rel_err < 1e-5);
}

TEST_CASE("training is deterministic and can overfit one sample") {
    const NetworkSpec toy = build_fht_arch(FhtArchScale::Toy);
    std::mt19937_64 rng(16);
    TrainSample s;
    s.input = random_tensor({1, 64, 64}, rng, 0.5);
    const ShapeTrace st = propagate_shapes(toy);
    s.target = Tensor::chw(st.shapes.back()[0], st.shapes.back()[1], st.shapes.back()[2]);
    s.target.at(0, st.shapes.back()[1] / 2, st.shapes.back()[2] / 2) = 1.0;

    TrainConfig cfg;
    cfg.learning_rate = 3e-4; // integral layers amplify gradients; keep steps small
    cfg.batch_size = 1;
    cfg.epochs = 200;
    cfg.seed = 17;

    Model m1 = make_model(toy, 18);
    const Tensor init_params_sample = m1.params[0];
    const auto r1 = train(m1, {s}, cfg);
    REQUIRE(r1.epoch_loss.size() == 200);
    REQUIRE(r1.epoch_loss.back() <= 0.5 * r1.epoch_loss.front());

    Model m2 = make_model(toy, 18);
    const auto r2 = train(m2, {s}, cfg);
    REQUIRE(r1.epoch_loss == r2.epoch_loss); // bit-identical history
    REQUIRE(m1.params == m2.params);

    Model m3 = make_model(toy, 18);
    TrainConfig zero = cfg;
    zero.epochs = 0;
    const auto r3 = train(m3, {s}, zero);
    REQUIRE(r3.epoch_loss.empty());
    REQUIRE(m3.params[0] == init_params_sample);
}

TEST_CASE("training reports divergence with diagnostics") {
    NetworkSpec net;
    net.input_shape = {1, 6, 6};
    net.layers = {ConvSpec{2, 3, 3, 1, 1}, ConvSpec{1, 3, 3, 1, 1}};
    Model model = make_model(net, 19);
    std::mt19937_64 rng(20);
    TrainSample s;
    s.input = random_tensor({1, 6, 6}, rng);
    s.target = random_tensor({1, 2, 2}, rng);
    TrainConfig cfg;
    cfg.learning_rate = 1e18;
    cfg.batch_size = 1;
    cfg.epochs = 50;
    CHECK_THROWS_AS(train(model, {s}, cfg), DivergenceError);
}

TEST_CASE("model save/load round trip is bit-exact") {
    const auto dir = std::filesystem::temp_directory_path() / "fhtnet_model_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "model.fhtnn";

    Model model = make_model(build_fht_arch(FhtArchScale::Toy), 21);
    save_model(path, model.params);
    const auto loaded = load_model(path);
    REQUIRE(loaded == model.params);

    SECTION("truncated file is rejected with an offset") {
        auto bytes = read_file_bytes(path);
        bytes.resize(bytes.size() / 2);
        atomic_write_file(path, bytes);
        CHECK_THROWS_AS(load_model(path), FormatError);
    }

    SECTION("wrong magic names the expected one") {
        auto bytes = read_file_bytes(path);
        bytes[0] = 'X';
        atomic_write_file(path, bytes);
        CHECK_THROWS_WITH(load_model(path), Catch::Matchers::ContainsSubstring("FHTNN1"));
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("forward rejects mismatched input shapes") {
    Model model = make_model(build_fht_arch(FhtArchScale::Toy), 22);
    Tensor wrong = Tensor::chw(1, 32, 32);
    CHECK_THROWS_AS(forward(model, wrong), ShapeError);

    std::vector<Tensor> grads;
    ForwardCache cache;
    CHECK_THROWS_AS(backward(model, cache, wrong, grads), UsageError);
}
