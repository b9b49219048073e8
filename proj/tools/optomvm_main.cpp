// Command-line driver: calibrate the simulated optoelectronic array, run
// MVM/GEMM through it, reproduce the Monte Carlo error sweeps, and run the
// SVD / blobs / MLP demos. All outputs are deterministic under a fixed
// (config, seed).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optomvm/calibration.hpp"
#include "optomvm/config.hpp"
#include "optomvm/errors.hpp"
#include "optomvm/experiments.hpp"
#include "optomvm/gemm.hpp"
#include "optomvm/matrix.hpp"
#include "optomvm/ml/idx.hpp"
#include "optomvm/ml/linear.hpp"
#include "optomvm/ml/mlp.hpp"
#include "optomvm/ml/pgm.hpp"
#include "optomvm/ml/svd.hpp"
#include "optomvm/ml/synth_digits.hpp"
#include "optomvm/mvm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace optomvm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitCalibration = 4;
constexpr int kExitNumeric = 5;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

std::string g_invocation;

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_config_file(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    return cfg;
}

// Resolved config lands next to the outputs: <file>.resolved.json for file
// outputs, <dir>/resolved_config.json for directory outputs.
void emit_resolved(const fs::path& out, bool is_dir, const RunConfig& cfg) {
    if (is_dir)
        write_resolved_config(out / "resolved_config.json", cfg, g_invocation);
    else
        write_resolved_config(fs::path(out.string() + ".resolved.json"), cfg, g_invocation);
}

Backend parse_backend(const std::string& name) {
    if (name == "oracle") return Backend::oracle;
    if (name == "analog") return Backend::analog;
    throw config_error("backend: expected \"analog\" or \"oracle\", got \"" + name + "\"");
}

void write_confusion_csv(const fs::path& path, const Mat& confusion) {
    std::ofstream out(path);
    if (!out) throw format_error("cannot write " + path.string());
    out << "true";
    for (int c = 0; c < confusion.cols; ++c) out << ",pred_" << c;
    out << "\n";
    for (int r = 0; r < confusion.rows; ++r) {
        out << r;
        for (int c = 0; c < confusion.cols; ++c)
            out << "," << static_cast<long long>(confusion(r, c));
        out << "\n";
    }
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw format_error("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

int cmd_calibrate(const CommonArgs& common, const std::string& out_path) {
    const RunConfig cfg = resolve_config(common);
    MvmEngine engine = make_engine(cfg, 0, false);
    save_calibration(out_path, engine.calibration());
    emit_resolved(out_path, false, cfg);
    std::cout << "calibrated " << cfg.n << " rows; units (A):";
    for (const RowCalibration& rc : engine.calibration().rows)
        std::cout << " " << format_double(rc.unit);
    std::cout << "\nwrote " << out_path << "\n";
    return kExitOk;
}

int cmd_mvm(const CommonArgs& common, const std::string& matrix_path,
            const std::string& vector_path, const std::string& cal_path,
            const std::string& out_path) {
    const RunConfig cfg = resolve_config(common);
    const Mat w = load_matrix(matrix_path);
    const Vec v = load_vector(vector_path);

    MvmEngine engine(cfg.to_array_config(), cfg.seed, cfg.mode);
    if (!cal_path.empty())
        engine.adopt_calibration(load_calibration(cal_path));
    else
        engine.calibrate(cfg.cal_repeats);

    const MvmResult res = engine.mvm(w, v);
    save_vector(out_path, res.output);
    emit_resolved(out_path, false, cfg);
    std::cout << "passes_used " << res.passes_used << "\n"
              << "clamp_events " << res.clamp_events << "\n"
              << "row_units_A";
    for (double u : res.row_units) std::cout << " " << format_double(u);
    std::cout << "\nwrote " << out_path << "\n";
    return kExitOk;
}

int cmd_gemm(const CommonArgs& common, const std::string& a_path, const std::string& b_path,
             const std::string& backend_name, const std::string& out_path) {
    const RunConfig cfg = resolve_config(common);
    const Mat a = load_matrix(a_path);
    const Mat b = load_matrix(b_path);
    const Backend backend = parse_backend(backend_name);

    GemmOptions options;
    options.jobs = common.jobs;
    Mat c;
    if (backend == Backend::analog) {
        MvmEngine engine = make_engine(cfg, 0, false);
        c = gemm(a, b, backend, &engine, options);
    } else {
        c = gemm(a, b, backend, nullptr, options);
    }
    save_matrix(out_path, c);
    emit_resolved(out_path, false, cfg);
    std::cout << "wrote " << out_path << " (" << c.rows << " x " << c.cols << ")\n";
    return kExitOk;
}

int cmd_sweep(const CommonArgs& common, const std::string& axis_name_str,
              std::vector<double> values, int trials, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    SweepAxis axis;
    if (axis_name_str == "variation")
        axis = SweepAxis::variation;
    else if (axis_name_str == "adc_bits")
        axis = SweepAxis::adc_bits;
    else if (axis_name_str == "power")
        axis = SweepAxis::power;
    else
        throw config_error("axis: expected variation, adc_bits, or power");

    fs::create_directories(out_dir);
    const auto points = sweep(cfg, axis, values, trials, cfg.seed, common.jobs);
    write_sweep_csv(fs::path(out_dir) / "sweep.csv", axis, points, trials);
    for (std::size_t i = 0; i < points.size(); ++i)
        write_histogram_csv(fs::path(out_dir) / ("hist_" + axis_name(axis) + "_" +
                                                 std::to_string(i) + ".csv"),
                            points[i].report);
    emit_resolved(out_dir, true, cfg);
    std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << " ("
              << points.size() << " points, " << trials << " trials each)\n";
    return kExitOk;
}

int cmd_demo_svd(const CommonArgs& common, const std::string& image_path, int k,
                 const std::string& backend_name, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    const Backend backend = parse_backend(backend_name);
    const Mat image = load_pgm(image_path);
    fs::create_directories(out_dir);

    const SvdFactors factors = jacobi_svd(image);
    GemmOptions options;
    options.jobs = common.jobs;
    std::optional<MvmEngine> engine;
    if (backend == Backend::analog) engine.emplace(make_engine(cfg, 0, false));
    const Mat recon = reconstruct_topk(factors, k, backend, engine ? &*engine : nullptr, options);
    save_pgm(fs::path(out_dir) / "reconstructed.pgm", recon);

    const double quality_db = psnr(image, recon, 255.0);
    json metrics;
    metrics["k"] = k;
    metrics["backend"] = backend_name;
    metrics["psnr_db"] = quality_db;
    metrics["image"] = image_path;
    metrics["rows"] = image.rows;
    metrics["cols"] = image.cols;
    write_json(fs::path(out_dir) / "metrics.json", metrics);
    emit_resolved(out_dir, true, cfg);
    std::cout << "K=" << k << " backend=" << backend_name << " psnr_db="
              << format_double(quality_db) << "\n";
    return kExitOk;
}

int cmd_demo_blobs(const CommonArgs& common, int clusters, int points_per, double spread,
                   int epochs, int n_seeds, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    fs::create_directories(out_dir);
    GemmOptions options;
    options.jobs = common.jobs;

    json per_seed = json::array();
    double rel_sum = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
        const BlobData data = make_blobs(clusters, points_per, spread, seed);
        const Mat targets = one_hot(data.labels, clusters);
        AdamConfig adam;   // paper training settings
        const Mat weights = train_linear_mse(data.x, targets, adam, epochs);

        const Evaluation oracle_eval =
            evaluate_linear(data.x, data.labels, weights, Backend::oracle);
        MvmEngine engine(cfg.to_array_config(), seed, cfg.mode);
        engine.calibrate(cfg.cal_repeats);
        const Evaluation analog_eval =
            evaluate_linear(data.x, data.labels, weights, Backend::analog, &engine, options);
        const double rel =
            std::fabs(analog_eval.loss - oracle_eval.loss) / oracle_eval.loss;
        rel_sum += rel;

        json row;
        row["seed"] = seed;
        row["loss_oracle"] = oracle_eval.loss;
        row["loss_analog"] = analog_eval.loss;
        row["rel_diff"] = rel;
        row["accuracy_oracle"] = oracle_eval.accuracy;
        row["accuracy_analog"] = analog_eval.accuracy;
        per_seed.push_back(row);
        if (s == 0) write_confusion_csv(fs::path(out_dir) / "confusion.csv",
                                        analog_eval.confusion);
    }
    json metrics;
    metrics["clusters"] = clusters;
    metrics["points_per_cluster"] = points_per;
    metrics["spread"] = spread;
    metrics["epochs"] = epochs;
    metrics["seeds"] = per_seed;
    metrics["mean_rel_loss_diff"] = rel_sum / n_seeds;
    write_json(fs::path(out_dir) / "metrics.json", metrics);
    emit_resolved(out_dir, true, cfg);
    std::cout << "mean relative loss difference over " << n_seeds
              << " seeds: " << format_double(rel_sum / n_seeds) << "\n";
    return kExitOk;
}

int cmd_demo_mlp(const CommonArgs& common, const std::string& data_dir, bool synthetic,
                 int hidden, int epochs, int batch, int train_count, int test_count,
                 const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    fs::create_directories(out_dir);
    const fs::path dir(data_dir);
    const fs::path train_images_path = dir / "train-images-idx3-ubyte";
    if (synthetic && !fs::exists(train_images_path))
        write_digit_dataset(dir, train_count, test_count, cfg.seed);

    const IdxImages train_images = load_idx_images(train_images_path);
    const auto train_labels_raw = load_idx_labels(dir / "train-labels-idx1-ubyte");
    const IdxImages test_images = load_idx_images(dir / "t10k-images-idx3-ubyte");
    const auto test_labels_raw = load_idx_labels(dir / "t10k-labels-idx1-ubyte");
    if (train_images.count != static_cast<int>(train_labels_raw.size()) ||
        test_images.count != static_cast<int>(test_labels_raw.size()))
        throw format_error("mlp: image/label counts disagree in " + data_dir);

    const int use_train = std::min(train_count, train_images.count);
    const int use_test = std::min(test_count, test_images.count);
    const Mat x_train = train_images.to_matrix(0, use_train);
    const Mat x_test = test_images.to_matrix(0, use_test);
    std::vector<int> y_train(train_labels_raw.begin(), train_labels_raw.begin() + use_train);
    std::vector<int> y_test(test_labels_raw.begin(), test_labels_raw.begin() + use_test);

    const int d = x_train.cols;
    Mlp2 model = init_mlp(d, hidden, 10, cfg.seed);
    AdamConfig adam;   // paper training settings
    std::vector<double> losses;
    model = train_mlp2(x_train, y_train, std::move(model), adam, epochs, batch, cfg.seed,
                       &losses);
    save_mlp(fs::path(out_dir) / "model.mlp", model);

    GemmOptions options;
    options.jobs = common.jobs;
    const Evaluation oracle_eval = evaluate_mlp(model, x_test, y_test, Backend::oracle);
    MvmEngine engine = make_engine(cfg, 0, false);
    const Evaluation analog_eval =
        evaluate_mlp(model, x_test, y_test, Backend::analog, &engine, options);
    write_confusion_csv(fs::path(out_dir) / "confusion.csv", analog_eval.confusion);

    json metrics;
    metrics["train_count"] = use_train;
    metrics["test_count"] = use_test;
    metrics["hidden"] = hidden;
    metrics["epochs"] = epochs;
    metrics["batch"] = batch;
    metrics["synthetic_data"] = synthetic;
    metrics["train_loss_per_epoch"] = losses;
    metrics["accuracy_oracle"] = oracle_eval.accuracy;
    metrics["accuracy_analog"] = analog_eval.accuracy;
    metrics["accuracy_gap"] = oracle_eval.accuracy - analog_eval.accuracy;
    metrics["loss_oracle"] = oracle_eval.loss;
    metrics["loss_analog"] = analog_eval.loss;
    write_json(fs::path(out_dir) / "metrics.json", metrics);
    emit_resolved(out_dir, true, cfg);
    std::cout << "test accuracy oracle=" << format_double(oracle_eval.accuracy)
              << " analog=" << format_double(analog_eval.accuracy) << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optomvm: behavioral simulator and experiment harness for a graphene "
                 "optoelectronic matrix-vector multiplier"};
    app.require_subcommand(1);
    for (int i = 1; i < argc; ++i) {
        if (i > 1) g_invocation += " ";
        g_invocation += argv[i];
    }

    CommonArgs common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--seed", common.seed, "override the config seed")
            ->each([&](const std::string&) { common.seed_set = true; });
        sub->add_option("--jobs", common.jobs, "engine pool size for gemm/sweeps")
            ->check(CLI::Range(1, 64));
    };

    auto* cal = app.add_subcommand("calibrate", "run the pairwise sweep calibration and save it");
    std::string cal_out = "calibration.json";
    add_common(cal);
    cal->add_option("--out", cal_out, "calibration output file");

    auto* mvm_cmd = app.add_subcommand("mvm", "analog matrix-vector multiply");
    std::string mvm_matrix, mvm_vector, mvm_cal, mvm_out = "output.txt";
    add_common(mvm_cmd);
    mvm_cmd->add_option("--matrix", mvm_matrix, "matrix file (n x n)")->required();
    mvm_cmd->add_option("--vector", mvm_vector, "vector file (n x 1)")->required();
    mvm_cmd->add_option("--cal", mvm_cal, "reuse a saved calibration file");
    mvm_cmd->add_option("--out", mvm_out, "output vector file");

    auto* gemm_cmd = app.add_subcommand("gemm", "blocked matrix-matrix multiply");
    std::string gemm_a, gemm_b, gemm_backend = "analog", gemm_out = "C.txt";
    add_common(gemm_cmd);
    gemm_cmd->add_option("--a", gemm_a, "left matrix file")->required();
    gemm_cmd->add_option("--b", gemm_b, "right matrix file")->required();
    gemm_cmd->add_option("--backend", gemm_backend, "analog | oracle");
    gemm_cmd->add_option("--out", gemm_out, "output matrix file");

    auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo error sweep, CSV output");
    std::string sweep_axis = "variation", sweep_out = "sweep_out";
    std::vector<double> sweep_values;
    int sweep_trials = 10000;
    add_common(sweep_cmd);
    sweep_cmd->add_option("--axis", sweep_axis, "variation | adc_bits | power");
    sweep_cmd->add_option("--values", sweep_values, "ascending axis values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--trials", sweep_trials, "multiplications per point")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "output directory");

    auto* svd_cmd = app.add_subcommand("demo-svd", "top-K SVD image reconstruction");
    std::string svd_image, svd_backend = "analog", svd_out = "svd_out";
    int svd_k = 50;
    add_common(svd_cmd);
    svd_cmd->add_option("--image", svd_image, "grayscale PGM input")->required();
    svd_cmd->add_option("--k", svd_k, "number of singular vectors kept")
        ->check(CLI::PositiveNumber);
    svd_cmd->add_option("--backend", svd_backend, "analog | oracle");
    svd_cmd->add_option("--out", svd_out, "output directory");

    auto* blobs_cmd = app.add_subcommand("demo-blobs", "least-squares clustering on blobs");
    int blobs_k = 3, blobs_points = 200, blobs_epochs = 400, blobs_seeds = 5;
    double blobs_spread = 0.75;
    std::string blobs_out = "blobs_out";
    add_common(blobs_cmd);
    blobs_cmd->add_option("--clusters", blobs_k, "cluster count")->check(CLI::Range(2, 16));
    blobs_cmd->add_option("--points", blobs_points, "points per cluster")
        ->check(CLI::PositiveNumber);
    blobs_cmd->add_option("--spread", blobs_spread, "cluster standard deviation")
        ->check(CLI::PositiveNumber);
    blobs_cmd->add_option("--epochs", blobs_epochs, "full-batch training epochs")
        ->check(CLI::PositiveNumber);
    blobs_cmd->add_option("--seeds", blobs_seeds, "number of dataset seeds averaged")
        ->check(CLI::Range(1, 64));
    blobs_cmd->add_option("--out", blobs_out, "output directory");

    auto* mlp_cmd = app.add_subcommand("demo-mlp", "two-layer linear MLP classification");
    std::string mlp_data, mlp_out = "mlp_out";
    bool mlp_synth = false;
    int mlp_hidden = 64, mlp_epochs = 5, mlp_batch = 128;
    int mlp_train = 10000, mlp_test = 2000;
    add_common(mlp_cmd);
    mlp_cmd->add_option("--data-dir", mlp_data, "directory with IDX image/label files")
        ->required();
    mlp_cmd->add_flag("--synthetic", mlp_synth,
                      "generate the rendered-digit fixture into --data-dir if absent");
    mlp_cmd->add_option("--hidden", mlp_hidden, "hidden layer width")->check(CLI::PositiveNumber);
    mlp_cmd->add_option("--epochs", mlp_epochs, "training epochs")->check(CLI::PositiveNumber);
    mlp_cmd->add_option("--batch", mlp_batch, "minibatch size")->check(CLI::PositiveNumber);
    mlp_cmd->add_option("--train-count", mlp_train, "training samples used")
        ->check(CLI::PositiveNumber);
    mlp_cmd->add_option("--test-count", mlp_test, "test samples used")
        ->check(CLI::PositiveNumber);
    mlp_cmd->add_option("--out", mlp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(cal)) return cmd_calibrate(common, cal_out);
        if (app.got_subcommand(mvm_cmd))
            return cmd_mvm(common, mvm_matrix, mvm_vector, mvm_cal, mvm_out);
        if (app.got_subcommand(gemm_cmd))
            return cmd_gemm(common, gemm_a, gemm_b, gemm_backend, gemm_out);
        if (app.got_subcommand(sweep_cmd))
            return cmd_sweep(common, sweep_axis, sweep_values, sweep_trials, sweep_out);
        if (app.got_subcommand(svd_cmd))
            return cmd_demo_svd(common, svd_image, svd_k, svd_backend, svd_out);
        if (app.got_subcommand(blobs_cmd))
            return cmd_demo_blobs(common, blobs_k, blobs_points, blobs_spread, blobs_epochs,
                                  blobs_seeds, blobs_out);
        if (app.got_subcommand(mlp_cmd))
            return cmd_demo_mlp(common, mlp_data, mlp_synth, mlp_hidden, mlp_epochs, mlp_batch,
                                mlp_train, mlp_test, mlp_out);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const calibration_error& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const state_error& e) {
        std::cerr << "calibration error: " << e.what() << "\n";
        return kExitCalibration;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}
