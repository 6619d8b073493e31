// fhtnet — transforms, lemma verification, synthetic data, training and
// evaluation for vanishing-point detection with integral-transform layers.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fhtnet/config.hpp"
#include "fhtnet/core.hpp"
#include "fhtnet/model_io.hpp"
#include "fhtnet/net.hpp"
#include "fhtnet/oracle.hpp"
#include "fhtnet/pgm.hpp"
#include "fhtnet/synth.hpp"
#include "fhtnet/train.hpp"
#include "fhtnet/vp.hpp"

namespace fs = std::filesystem;
using namespace fhtnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

Quadrant quadrant_from_name(const std::string& name) {
    if (name == "hd" || name == "horizontal-down") return Quadrant::HorizontalDown;
    if (name == "hu" || name == "horizontal-up") return Quadrant::HorizontalUp;
    if (name == "vr" || name == "vertical-right") return Quadrant::VerticalRight;
    if (name == "vl" || name == "vertical-left") return Quadrant::VerticalLeft;
    throw ConfigError("unknown quadrant '" + name + "' (use hd, hu, vr or vl)");
}

// ---------------------------------------------------------------------------
// fht: apply the transform to one image

struct FhtArgs {
    std::string input, output, raw_output, quadrant = "hd";
    bool transposed = false;
    bool pad_to_pow2 = false;
};

int cmd_fht(const FhtArgs& args) {
    const GrayImage img = load_gray_auto(args.input, args.pad_to_pow2);
    const GrayImage out = fht_quadrant(img, quadrant_from_name(args.quadrant), args.transposed);
    write_pgm(args.output, pgm_from_minmax(out.data, out.side(), out.side()));
    if (!args.raw_output.empty())
        write_raw(args.raw_output, RawImage{out.side(), out.side(), out.data});
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: machine-check the transpose lemmas plus fast/oracle equivalence

int cmd_verify(int p_max) {
    if (p_max < 1 || p_max > 5) {
        std::fprintf(stderr, "verify: --p-max must lie in [1, 5] (dense-matrix resource guard)\n");
        return kExitUsage;
    }
    bool all_ok = true;
    std::printf("%-4s %-26s %-18s %-18s %-24s %-22s %s\n", "p", "L1 indentation-symmetry",
                "L2 block-symmetry", "L3 block-diagonals", "L4 flip-product-symmetry",
                "T1 transpose-identity", "fht/oracle-equivalence");
    for (int p = 1; p <= p_max; ++p) {
        const auto report = oracle::verify_lemmas(p);

        bool equiv = true;
        const auto matrix = oracle::build_fht_matrix(p);
        std::mt19937_64 rng(0xF00D + static_cast<unsigned>(p));
        for (int rep = 0; rep < 20 && equiv; ++rep) {
            GrayImage img(p);
            for (auto& v : img.data) v = static_cast<double>(rng() % 256);
            equiv = fht_forward(img) == oracle::apply(matrix, img) &&
                    fht_transposed(img) == oracle::apply_transposed(matrix, img);
        }

        const bool row_ok = report.all_ok() && equiv;
        all_ok = all_ok && row_ok;
        auto cell = [](bool ok) { return ok ? "ok" : "FAIL"; };
        std::printf("%-4d %-26s %-18s %-18s %-24s %-22s %s\n", p, cell(report.indentation_symmetric),
                    cell(report.blocks_symmetric), cell(report.block_diagonals_constant),
                    cell(report.flip_product_symmetric), cell(report.transpose_identity), cell(equiv));
        if (!row_ok) {
            const bool checks[5] = {report.indentation_symmetric, report.blocks_symmetric,
                                    report.block_diagonals_constant, report.flip_product_symmetric,
                                    report.transpose_identity};
            for (int i = 0; i < 5; ++i)
                if (!checks[i]) std::fprintf(stderr, "verify: %s failed at p=%d\n", oracle::lemma_label(i), p);
            if (!equiv) std::fprintf(stderr, "verify: fht/oracle-equivalence failed at p=%d\n", p);
        }
    }
    return all_ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// Shared experiment plumbing

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_config(path);
    apply_overrides(cfg, overrides);
    return cfg;
}

int dataset_side(const std::vector<vp::Sample>& samples) {
    if (samples.empty()) throw ArgumentError("dataset is empty");
    return samples.front().image.side();
}

nn::NetworkSpec arch_from_config(const RunConfig& cfg, int side) {
    const std::string arch = cfg.get_string("arch", "fht_toy");
    if (arch == "fht_toy" || arch == "conv_toy") {
        if (side != 64)
            throw ConfigError("arch " + arch + " expects 64x64 images, dataset has side " +
                              std::to_string(side));
        const nn::NetworkSpec toy = nn::build_fht_arch(nn::FhtArchScale::Toy);
        return arch == "fht_toy" ? toy : nn::strip_fht_layers(toy);
    }
    if (arch == "fht_paper") {
        if (side != 378) throw ConfigError("arch fht_paper expects 378x378 images");
        return nn::build_fht_arch(nn::FhtArchScale::Paper);
    }
    if (arch == "base") {
        const int grid = static_cast<int>(cfg.get_int("base_grid", 8));
        return nn::build_base_arch(grid, {1, side, side});
    }
    throw ConfigError("unknown arch '" + arch + "' (use fht_toy, conv_toy, fht_paper or base)");
}

nn::Model model_from_file(const nn::NetworkSpec& spec, const fs::path& path) {
    nn::Model model = nn::make_model(spec, 0);
    std::vector<nn::Tensor> params = nn::load_model(path);
    if (params.size() != model.params.size())
        throw FormatError("model file holds " + std::to_string(params.size()) +
                          " parameter blobs, architecture needs " +
                          std::to_string(model.params.size()));
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i].shape != model.params[i].shape)
            throw FormatError("model blob " + std::to_string(i) + " has shape " +
                              nn::shape_string(params[i].shape) + ", architecture needs " +
                              nn::shape_string(model.params[i].shape));
    model.params = std::move(params);
    return model;
}

void require_exists(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path);
}

/// Ordered candidate points for the heat map of one image, for top-k cells.
std::vector<Point> heatmap_candidates(const nn::Model& model, const GrayImage& img, int k) {
    const nn::Tensor out = nn::forward(model, vp::image_tensor(img));
    return vp::predict_vp(out, k, model.shapes.trace);
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_run_config(config_path, overrides);
    std::vector<std::string> allowed = vp::synth_config_keys();
    allowed.push_back("out");
    cfg.validate_keys(allowed);
    const fs::path out_dir = cfg.require_string("out");
    const vp::SynthConfig synth_cfg = vp::synth_config_from(cfg);
    synth_cfg.validate();
    const auto samples = vp::synth_generate(synth_cfg);
    vp::write_dataset(out_dir, samples, synth_cfg);
    std::printf("wrote %zu samples to %s\n", samples.size(), out_dir.string().c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_run_config(config_path, overrides);
    cfg.validate_keys({"dataset", "out_model", "loss_csv", "arch", "base_grid", "epochs",
                       "learning_rate", "batch_size", "seed", "sigma"});
    const std::string dataset_dir = cfg.require_string("dataset");
    const std::string out_model = cfg.require_string("out_model");
    require_exists(dataset_dir, "dataset directory");

    const auto samples = vp::load_dataset(dataset_dir);
    const int side = dataset_side(samples);
    const nn::NetworkSpec spec = arch_from_config(cfg, side);

    nn::TrainConfig tc;
    tc.learning_rate = cfg.get_double("learning_rate", 3e-4);
    tc.batch_size = static_cast<int>(cfg.get_int("batch_size", 16));
    tc.epochs = static_cast<int>(cfg.get_int("epochs", 20));
    tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
    const double sigma = cfg.get_double("sigma", 2.0);
    const bool classifier = cfg.get_string("arch", "fht_toy") == "base";
    tc.loss = classifier ? nn::LossKind::SoftmaxCrossEntropy : nn::LossKind::TargetMap;

    nn::Model model = nn::make_model(spec, tc.seed);
    const auto out_shape = model.shapes.shapes.back();
    const int base_grid = static_cast<int>(cfg.get_int("base_grid", 8));

    std::vector<nn::TrainSample> train_set;
    train_set.reserve(samples.size());
    for (const auto& s : samples) {
        nn::TrainSample ts;
        ts.input = vp::image_tensor(s.image);
        if (classifier) {
            const vp::GridCell cell = vp::grid_cell(s.vp, side, base_grid);
            ts.label = cell.y * base_grid + cell.x;
        } else {
            ts.target = vp::vp_target_map(model.shapes.trace, out_shape, s.vp, sigma);
        }
        train_set.push_back(std::move(ts));
    }

    const nn::TrainResult result = nn::train(model, train_set, tc);
    nn::save_model(out_model, model.params);

    if (cfg.has("loss_csv")) {
        std::string csv = "epoch,loss\n";
        char row[64];
        for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
            std::snprintf(row, sizeof(row), "%zu,%.17g\n", e, result.epoch_loss[e]);
            csv += row;
        }
        atomic_write_file(cfg.require_string("loss_csv"), csv);
    }
    if (!result.epoch_loss.empty())
        std::printf("trained %d epochs, loss %.6f -> %.6f\n", tc.epochs, result.epoch_loss.front(),
                    result.epoch_loss.back());
    else
        std::printf("trained 0 epochs (parameters left at initialization)\n");
    std::printf("model written to %s\n", out_model.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / sweep

std::string rows_to_csv(const std::vector<vp::SweepRow>& rows) {
    std::string csv = "grid,k,rect_side,error\n";
    char row[96];
    for (const auto& r : rows) {
        std::snprintf(row, sizeof(row), "%d,%d,%d,%.17g\n", r.grid, r.k, r.rect_side, r.error);
        csv += row;
    }
    return csv;
}

int cmd_eval(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_run_config(config_path, overrides);
    cfg.validate_keys({"dataset", "model", "arch", "base_grid", "grids", "out_csv", "candidates"});
    const std::string dataset_dir = cfg.require_string("dataset");
    const std::string model_path = cfg.require_string("model");
    require_exists(dataset_dir, "dataset directory");
    require_exists(model_path, "model file");

    const auto samples = vp::load_dataset(dataset_dir);
    const int side = dataset_side(samples);
    const nn::Model model = model_from_file(arch_from_config(cfg, side), model_path);
    const std::vector<int> grids = cfg.get_int_list("grids", {10, 20, 30});
    const int candidates = static_cast<int>(cfg.get_int("candidates", 256));

    std::vector<std::vector<Point>> preds(samples.size());
    std::vector<Point> truths(samples.size());
    parallel_for(0, static_cast<int>(samples.size()), [&](int i) {
        preds[static_cast<std::size_t>(i)] =
            heatmap_candidates(model, samples[static_cast<std::size_t>(i)].image, candidates);
        truths[static_cast<std::size_t>(i)] = samples[static_cast<std::size_t>(i)].vp;
    });

    std::vector<vp::SweepRow> rows;
    for (int g : grids) {
        const vp::EvalReport rep = vp::evaluate(preds, truths, side, g);
        rows.push_back({g, 1, 0, rep.top1_error});
        rows.push_back({g, 5, 0, rep.top5_error});
        std::printf("grid %dx%d  top1 error %.4f  top5 error %.4f\n", g, g, rep.top1_error,
                    rep.top5_error);
    }
    if (cfg.has("out_csv")) atomic_write_file(cfg.require_string("out_csv"), rows_to_csv(rows));
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_run_config(config_path, overrides);
    cfg.validate_keys(
        {"dataset", "model", "arch", "base_grid", "grids", "rect_sides", "out_csv", "candidates"});
    const std::string dataset_dir = cfg.require_string("dataset");
    const std::string model_path = cfg.require_string("model");
    require_exists(dataset_dir, "dataset directory");
    require_exists(model_path, "model file");

    const auto samples = vp::load_dataset(dataset_dir);
    const int side = dataset_side(samples);
    const nn::Model model = model_from_file(arch_from_config(cfg, side), model_path);
    const std::vector<int> grids = cfg.get_int_list("grids", {10, 20, 30});
    const std::vector<int> sides = cfg.get_int_list("rect_sides", {0, 4, 8, 12, 16});
    const int candidates = static_cast<int>(cfg.get_int("candidates", 256));

    const auto rows = vp::corruption_sweep(
        [&](const GrayImage& img) { return heatmap_candidates(model, img, candidates); }, samples,
        sides, grids);
    const std::string csv = rows_to_csv(rows);
    if (cfg.has("out_csv")) atomic_write_file(cfg.require_string("out_csv"), csv);
    std::fputs(csv.c_str(), stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// infer

int cmd_infer(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig cfg = load_run_config(config_path, overrides);
    cfg.validate_keys({"image", "model", "arch", "base_grid", "dump_dir", "channels"});
    const std::string image_path = cfg.require_string("image");
    const std::string model_path = cfg.require_string("model");
    require_exists(image_path, "input image");
    require_exists(model_path, "model file");

    const GrayImage img = gray_from_pgm(read_pgm(image_path));
    const nn::Model model = model_from_file(arch_from_config(cfg, img.side()), model_path);

    nn::ForwardCache cache;
    const nn::Tensor out = nn::forward(model, vp::image_tensor(img), &cache);
    const auto points = vp::predict_vp(out, 1, model.shapes.trace);
    std::printf("vp %.6f %.6f\n", points[0].x, points[0].y);

    if (cfg.has("dump_dir")) {
        const fs::path dump_dir = cfg.require_string("dump_dir");
        fs::create_directories(dump_dir);
        const std::vector<int> channels = cfg.get_int_list("channels", {0});
        char name[128];
        for (std::size_t i = 0; i < cache.acts.size(); ++i) {
            const nn::Tensor& act = cache.acts[i];
            if (act.rank() != 3) continue;
            const char* kind = i == 0 ? "input" : layer_kind_name(model.spec.layers[i - 1]);
            for (int c : channels) {
                if (c < 0 || c >= act.channels()) continue;
                std::snprintf(name, sizeof(name), "layer_%02zu_%s_c%d.pgm", i, kind, c);
                const std::size_t plane = static_cast<std::size_t>(act.height()) * act.width();
                std::vector<double> values(act.data.begin() + static_cast<std::ptrdiff_t>(c * plane),
                                           act.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane));
                write_pgm(dump_dir / name, pgm_from_minmax(values, act.width(), act.height()));
            }
        }
        std::printf("intermediate dumps written to %s\n", dump_dir.string().c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclic fast Hough transform, its transpose, and vanishing-point networks"};
    app.require_subcommand(1);

    FhtArgs fht_args;
    CLI::App* fht = app.add_subcommand("fht", "apply the transform to a PGM or raw image");
    fht->add_option("input", fht_args.input, "input image (PGM or FHTRAW1 dump)")->required();
    fht->add_option("output", fht_args.output, "output PGM (min-max normalized)")->required();
    fht->add_flag("--transposed", fht_args.transposed, "apply the transposed transform");
    fht->add_option("--quadrant", fht_args.quadrant, "hd (default), hu, vr or vl");
    fht->add_option("--raw", fht_args.raw_output, "also write exact values as an FHTRAW1 dump");
    fht->add_flag("--pad-to-pow2", fht_args.pad_to_pow2, "zero-pad input to the next power of two");

    int p_max = 4;
    CLI::App* verify = app.add_subcommand("verify", "machine-check the transpose lemmas");
    verify->add_option("--p-max", p_max, "largest exponent to check (1..5)");

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config_cmd = [&](const char* name, const char* help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("config", config_path, "key=value configuration file")->required();
        cmd->add_option("overrides", overrides, "trailing key=value overrides");
        return cmd;
    };
    CLI::App* synth = add_config_cmd("synth", "generate an annotated synthetic dataset");
    CLI::App* train = add_config_cmd("train", "train a network on a dataset directory");
    CLI::App* eval = add_config_cmd("eval", "grid-evaluate a trained model");
    CLI::App* sweep = add_config_cmd("sweep", "blur-corruption error curves");
    CLI::App* infer = add_config_cmd("infer", "predict the vanishing point of one image");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fht->parsed()) return cmd_fht(fht_args);
        if (verify->parsed()) return cmd_verify(p_max);
        if (synth->parsed()) return cmd_synth(config_path, overrides);
        if (train->parsed()) return cmd_train(config_path, overrides);
        if (eval->parsed()) return cmd_eval(config_path, overrides);
        if (sweep->parsed()) return cmd_sweep(config_path, overrides);
        if (infer->parsed()) return cmd_infer(config_path, overrides);
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "fhtnet: numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fhtnet: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
