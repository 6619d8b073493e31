#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "fhtnet/core.hpp"
#include "fhtnet/oracle.hpp"
#include "fhtnet/pgm.hpp"

#ifndef FHTNET_CLI_PATH
#error "FHTNET_CLI_PATH must point at the built binary"
#endif

namespace fs = std::filesystem;
using namespace fhtnet;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path out_file = workdir / "cli_output.txt";
    const std::string cmd = "cd '" + workdir.string() + "' && '" + FHTNET_CLI_PATH + "' " + args +
                            " > '" + out_file.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (fs::exists(out_file)) r.output = read_file_bytes(out_file);
    return r;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("fhtnet_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string dir_fingerprint(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::string fp;
    for (const auto& f : files) {
        fp += f.filename().string();
        fp += '\0';
        fp += read_file_bytes(f);
        fp += '\1';
    }
    return fp;
}

} // namespace

TEST_CASE("fht subcommand transforms a PGM and honors exit codes") {
    TempDir tmp("fht");

    GrayImage ones(3);
    for (auto& v : ones.data) v = 1.0;
    write_pgm(tmp.path / "ones.pgm", pgm_from_unit(ones.data, 8, 8));

    SECTION("all-ones image gives a constant transform") {
        const auto r = run_cli("fht ones.pgm out.pgm --raw out.raw", tmp.path);
        REQUIRE(r.exit_code == 0);
        const RawImage raw = read_raw(tmp.path / "out.raw");
        for (double v : raw.data) REQUIRE(v == 8.0);
        const PgmImage pgm = read_pgm(tmp.path / "out.pgm");
        REQUIRE(pgm.width == 8);
        // min-max normalization maps a constant plane to zeros
        for (auto p : pgm.pixels) REQUIRE(p == 0);
    }

    SECTION("applying --transposed twice matches the explicit transposed matrix") {
        std::mt19937_64 rng(21);
        GrayImage img(3);
        for (auto& v : img.data) v = static_cast<double>(rng() % 256) / 255.0;
        write_pgm(tmp.path / "in.pgm", pgm_from_unit(img.data, 8, 8));

        REQUIRE(run_cli("fht in.pgm t1.pgm --transposed --raw t1.raw", tmp.path).exit_code == 0);
        REQUIRE(run_cli("fht t1.raw t2.pgm --transposed --raw t2.raw", tmp.path).exit_code == 0);

        // the CLI quantizes PGM input to 8 bits, so compare from the same start
        const GrayImage start = gray_from_pgm(read_pgm(tmp.path / "in.pgm"));
        const auto matrix = oracle::build_fht_matrix(3);
        const GrayImage want = oracle::apply_transposed(matrix, oracle::apply_transposed(matrix, start));
        const RawImage got = read_raw(tmp.path / "t2.raw");
        REQUIRE(got.data.size() == want.data.size());
        for (std::size_t i = 0; i < want.data.size(); ++i)
            REQUIRE(std::abs(got.data[i] - want.data[i]) <=
                    1e-9 * std::max(1.0, std::abs(want.data[i])));
    }

    SECTION("non-power-of-two input fails with exit 2 unless padded") {
        PgmImage odd;
        odd.width = 5;
        odd.height = 7;
        odd.maxval = 255;
        odd.pixels.assign(35, 100);
        write_pgm(tmp.path / "odd.pgm", odd);
        REQUIRE(run_cli("fht odd.pgm out.pgm", tmp.path).exit_code == 2);
        REQUIRE(run_cli("fht odd.pgm out.pgm --pad-to-pow2", tmp.path).exit_code == 0);
        REQUIRE(read_pgm(tmp.path / "out.pgm").width == 8);
    }

    SECTION("missing input fails with exit 2") {
        REQUIRE(run_cli("fht nothere.pgm out.pgm", tmp.path).exit_code == 2);
    }
}

TEST_CASE("verify subcommand") {
    TempDir tmp("verify");

    const auto ok = run_cli("verify --p-max 4", tmp.path);
    REQUIRE(ok.exit_code == 0);
    // one row per size plus the header
    REQUIRE(ok.output.find("T1 transpose-identity") != std::string::npos);
    int ok_rows = 0;
    for (std::size_t at = ok.output.find("\n"); at != std::string::npos; at = ok.output.find("\n", at + 1))
        ++ok_rows;
    REQUIRE(ok_rows >= 5);

    REQUIRE(run_cli("verify --p-max 9", tmp.path).exit_code == 2); // resource guard
    REQUIRE(run_cli("verify --p-max 0", tmp.path).exit_code == 2);
}

TEST_CASE("synth is byte-identical per seed and train/eval round trips") {
    TempDir tmp("pipeline");

    write_text(tmp.path / "synth.cfg",
               "out = data_a\nn_samples = 24\nseed = 7\nnoise_sigma = 0.02\n");
    REQUIRE(run_cli("synth synth.cfg", tmp.path).exit_code == 0);
    REQUIRE(run_cli("synth synth.cfg out=data_b", tmp.path).exit_code == 0);
    REQUIRE(dir_fingerprint(tmp.path / "data_a") == dir_fingerprint(tmp.path / "data_b"));

    write_text(tmp.path / "different.cfg",
               "out = data_c\nn_samples = 24\nseed = 8\nnoise_sigma = 0.02\n");
    REQUIRE(run_cli("synth different.cfg", tmp.path).exit_code == 0);
    REQUIRE(dir_fingerprint(tmp.path / "data_a") != dir_fingerprint(tmp.path / "data_c"));

    SECTION("unknown config keys are rejected") {
        write_text(tmp.path / "bad.cfg", "out = x\nn_samples = 4\nbogus_key = 1\n");
        const auto r = run_cli("synth bad.cfg", tmp.path);
        REQUIRE(r.exit_code == 2);
        REQUIRE(r.output.find("bogus_key") != std::string::npos);
    }

    SECTION("zero-epoch training leaves the seeded initialization, eval is deterministic") {
        write_text(tmp.path / "train0.cfg",
                   "dataset = data_a\nout_model = m0.fhtnn\nepochs = 0\nseed = 5\n");
        REQUIRE(run_cli("train train0.cfg", tmp.path).exit_code == 0);
        REQUIRE(run_cli("train train0.cfg out_model=m0b.fhtnn", tmp.path).exit_code == 0);
        REQUIRE(read_file_bytes(tmp.path / "m0.fhtnn") == read_file_bytes(tmp.path / "m0b.fhtnn"));

        write_text(tmp.path / "eval.cfg",
                   "dataset = data_a\nmodel = m0.fhtnn\ngrids = 4,8\nout_csv = eval.csv\n");
        REQUIRE(run_cli("eval eval.cfg", tmp.path).exit_code == 0);
        const std::string csv = read_file_bytes(tmp.path / "eval.csv");
        REQUIRE(csv.rfind("grid,k,rect_side,error\n", 0) == 0);
        REQUIRE(run_cli("eval eval.cfg out_csv=eval2.csv", tmp.path).exit_code == 0);
        REQUIRE(csv == read_file_bytes(tmp.path / "eval2.csv"));

        SECTION("sweep emits one row per side, grid and k") {
            write_text(tmp.path / "sweep.cfg",
                       "dataset = data_a\nmodel = m0.fhtnn\ngrids = 4,8\nrect_sides = 0,8\n"
                       "out_csv = sweep.csv\n");
            REQUIRE(run_cli("sweep sweep.cfg", tmp.path).exit_code == 0);
            const std::string s = read_file_bytes(tmp.path / "sweep.csv");
            const long lines = std::count(s.begin(), s.end(), '\n');
            REQUIRE(lines == 1 + 2 * 2 * 2); // header + sides x grids x k
            REQUIRE(s.rfind("grid,k,rect_side,error\n", 0) == 0);
        }

        SECTION("infer prints a vanishing point and dumps per-layer images") {
            write_text(tmp.path / "infer.cfg",
                       "image = data_a/00000.pgm\nmodel = m0.fhtnn\ndump_dir = dumps\n");
            const auto r = run_cli("infer infer.cfg", tmp.path);
            REQUIRE(r.exit_code == 0);
            REQUIRE(r.output.rfind("vp ", 0) == 0);
            int dumped = 0;
            for (const auto& entry : fs::directory_iterator(tmp.path / "dumps"))
                dumped += entry.path().extension() == ".pgm";
            // input plane plus one image per layer of the toy architecture
            REQUIRE(dumped == 17);
        }
    }

    SECTION("missing model file exits 2") {
        write_text(tmp.path / "eval_missing.cfg",
                   "dataset = data_a\nmodel = nothere.fhtnn\ngrids = 4\n");
        REQUIRE(run_cli("eval eval_missing.cfg", tmp.path).exit_code == 2);
    }
}
