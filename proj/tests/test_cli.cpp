#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "optomvm/matrix.hpp"
#include "optomvm/ml/pgm.hpp"
#include "optomvm/rng.hpp"

#ifndef OPTOMVM_CLI_PATH
#define OPTOMVM_CLI_PATH "optomvm"
#endif

using namespace optomvm;
namespace fs = std::filesystem;

namespace {

struct CliDir {
    fs::path dir;
    CliDir() {
        dir = fs::temp_directory_path() / "optomvm_cli_tests";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~CliDir() { fs::remove_all(dir); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(OPTOMVM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits cleanly") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("gemm --help") == 0);
}

TEST_CASE("gemm with identity A reproduces the B file byte-for-byte") {
    CliDir t;
    RngStream rng(4);
    Mat b(8, 8);
    for (double& x : b.a) x = rng.uniform(-1.0, 1.0);
    save_matrix(t.dir / "B.txt", b);
    save_matrix(t.dir / "I.txt", Mat::identity(8));
    const std::string out = (t.dir / "C.txt").string();
    REQUIRE(run_cli("gemm --a " + (t.dir / "I.txt").string() + " --b " +
                    (t.dir / "B.txt").string() + " --backend oracle --out " + out) == 0);
    CHECK(slurp(out) == slurp(t.dir / "B.txt"));
    CHECK(fs::exists(out + ".resolved.json"));
}

TEST_CASE("sweep output is identical across reruns with the same seed") {
    CliDir t;
    const std::string args = "sweep --axis variation --values 0,0.1 --trials 60 --seed 5 --out ";
    REQUIRE(run_cli(args + (t.dir / "s1").string()) == 0);
    REQUIRE(run_cli(args + (t.dir / "s2").string()) == 0);
    CHECK(slurp(t.dir / "s1" / "sweep.csv") == slurp(t.dir / "s2" / "sweep.csv"));
    CHECK(slurp(t.dir / "s1" / "hist_variation_0.csv") ==
          slurp(t.dir / "s2" / "hist_variation_0.csv"));
    // Resolved configs differ only in the recorded invocation (the --out
    // paths differ); normalizing that line makes them identical.
    std::string r1 = slurp(t.dir / "s1" / "resolved_config.json");
    std::string r2 = slurp(t.dir / "s2" / "resolved_config.json");
    const std::string d1 = (t.dir / "s1").string(), d2 = (t.dir / "s2").string();
    for (std::size_t at = r1.find(d1); at != std::string::npos; at = r1.find(d1))
        r1.replace(at, d1.size(), "OUT");
    for (std::size_t at = r2.find(d2); at != std::string::npos; at = r2.find(d2))
        r2.replace(at, d2.size(), "OUT");
    CHECK(r1 == r2);
    CHECK(r1.find("\"invocation\"") != std::string::npos);
}

TEST_CASE("full-rank oracle SVD demo reproduces the input image") {
    CliDir t;
    RngStream rng(9);
    Mat img(16, 16);
    for (double& x : img.a) x = std::floor(rng.uniform(0.0, 255.999));
    save_pgm(t.dir / "in.pgm", img);
    REQUIRE(run_cli("demo-svd --image " + (t.dir / "in.pgm").string() +
                    " --k 16 --backend oracle --out " + (t.dir / "svd").string()) == 0);
    CHECK(slurp(t.dir / "svd" / "reconstructed.pgm") == slurp(t.dir / "in.pgm"));
}

TEST_CASE("mvm is reproducible and writes diagnostics") {
    CliDir t;
    RngStream rng(11);
    Mat w(8, 8);
    for (double& x : w.a) x = rng.uniform(-1.0, 1.0);
    Vec v(8);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    save_matrix(t.dir / "W.txt", w);
    save_vector(t.dir / "v.txt", v);
    const std::string base = "mvm --matrix " + (t.dir / "W.txt").string() + " --vector " +
                             (t.dir / "v.txt").string() + " --seed 3 --out ";
    REQUIRE(run_cli(base + (t.dir / "o1.txt").string()) == 0);
    REQUIRE(run_cli(base + (t.dir / "o2.txt").string()) == 0);
    CHECK(slurp(t.dir / "o1.txt") == slurp(t.dir / "o2.txt"));
    const Vec out = load_vector(t.dir / "o1.txt");
    CHECK(out.size() == 8);
}

TEST_CASE("calibration file reuse matches in-run calibration") {
    CliDir t;
    REQUIRE(run_cli("calibrate --seed 21 --out " + (t.dir / "cal.json").string()) == 0);
    RngStream rng(2);
    Mat w(8, 8);
    for (double& x : w.a) x = rng.uniform(-1.0, 1.0);
    Vec v(8);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    save_matrix(t.dir / "W.txt", w);
    save_vector(t.dir / "v.txt", v);
    const std::string common = "mvm --matrix " + (t.dir / "W.txt").string() + " --vector " +
                               (t.dir / "v.txt").string() + " --seed 21 --out ";
    REQUIRE(run_cli(common + (t.dir / "a.txt").string()) == 0);
    REQUIRE(run_cli(common + (t.dir / "b.txt").string() + " --cal " +
                    (t.dir / "cal.json").string()) == 0);
    CHECK(slurp(t.dir / "a.txt") == slurp(t.dir / "b.txt"));
}

TEST_CASE("exit codes distinguish error classes") {
    CliDir t;
    // Missing input file -> format error (3).
    CHECK(run_cli("gemm --a " + (t.dir / "nope.txt").string() + " --b " +
                  (t.dir / "nope.txt").string() + " --backend oracle --out " +
                  (t.dir / "C.txt").string()) == 3);
    // Unknown config key -> config error (2).
    {
        std::ofstream bad(t.dir / "bad.json");
        bad << R"({"definitely_not_a_key": 1})";
    }
    CHECK(run_cli("calibrate --config " + (t.dir / "bad.json").string() + " --out " +
                  (t.dir / "cal.json").string()) == 2);
    // Missing config file -> config error (2).
    CHECK(run_cli("calibrate --config " + (t.dir / "missing.json").string() + " --out " +
                  (t.dir / "cal.json").string()) == 2);
    // Unknown flag -> config error (2).
    CHECK(run_cli("calibrate --frobnicate") == 2);
    // Corrupt calibration file -> format error (3).
    {
        std::ofstream bad(t.dir / "cal_bad.json");
        bad << R"({"format":"optomvm-calibration","version":1,"digest":"0"})";
    }
    RngStream rng(1);
    Mat w(8, 8);
    Vec v(8, 0.1);
    save_matrix(t.dir / "W.txt", w);
    save_vector(t.dir / "v.txt", v);
    CHECK(run_cli("mvm --matrix " + (t.dir / "W.txt").string() + " --vector " +
                  (t.dir / "v.txt").string() + " --cal " + (t.dir / "cal_bad.json").string() +
                  " --out " + (t.dir / "o.txt").string()) == 3);
    // Degenerate hardware (flat transmission curve) -> calibration error (4).
    {
        std::ofstream flat(t.dir / "flat.json");
        flat << R"({"transmission": [0.0, 0.0, 0.5]})";
    }
    CHECK(run_cli("calibrate --config " + (t.dir / "flat.json").string() + " --out " +
                  (t.dir / "cal.json").string()) == 4);
}

}
