// ptrain: train, evaluate and benchmark weight-perturbation training methods.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ptrain/config.hpp"
#include "ptrain/errors.hpp"
#include "ptrain/experiment.hpp"
#include "ptrain/kernels.hpp"
#include "ptrain/metrics.hpp"
#include "ptrain/train.hpp"
#include "ptrain/verify.hpp"

namespace fs = std::filesystem;
using namespace ptrain;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitError = 2;

void apply_threads(int threads) {
    if (threads > 0) {
        kernels::set_num_threads(threads);
    } else if (const int env = kernels::threads_from_env(); env > 0) {
        kernels::set_num_threads(env);
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_train(const fs::path& config_path, std::uint64_t seed, const fs::path& out, const std::string& method_name,
              bool force) {
    ExperimentConfig config = parse_config_file(config_path);
    const Method method = method_name.empty() ? config.method : parse_method(method_name);
    ensure_dir(out);
    const fs::path ckpt = out / "model.ckpt";
    if (!force && fs::exists(ckpt)) throw IoError(ckpt.string() + " exists (pass --force to overwrite)");
    const LoadedData data = load_data(config.data);
    std::ofstream log(out / "train_log.csv", std::ios::trunc);
    if (!log) throw IoError("cannot write " + (out / "train_log.csv").string());
    FitOptions options;
    options.log = &log;
    const FitResult r = fit(run_config_for(config, method, seed), data.train, data.val, options);
    save_checkpoint(r.net, ckpt);
    std::cout << to_string(method) << " seed " << seed << ": " << r.steps << " steps";
    if (!r.log.empty()) std::cout << ", val error " << r.log.back().val_error;
    if (r.fallbacks) std::cout << ", " << r.fallbacks << " degenerate-direction fallbacks";
    std::cout << "\ncheckpoint: " << ckpt.string() << '\n';
    return 0;
}

int cmd_eval(const fs::path& config_path, const fs::path& checkpoint, std::uint64_t seed, const fs::path& out,
             const std::string& label, bool force) {
    const ExperimentConfig config = parse_config_file(config_path);
    ensure_dir(out);
    const fs::path records_path = out / "records.csv";
    if (!force && fs::exists(records_path)) throw IoError(records_path.string() + " exists (pass --force to overwrite)");
    const LayeredNet net = load_checkpoint(checkpoint);
    const LoadedData data = load_data(config.data);
    const Normalizer normalizer = config.run.standardize ? Normalizer::fit(data.train) : Normalizer::identity();
    const auto records =
        evaluate_cells(net, normalizer, data.test, config.corruptions, config.severities, label, seed);
    std::ofstream csv(records_path, std::ios::trunc);
    if (!csv) throw IoError("cannot write " + records_path.string());
    write_records_csv(csv, records);
    std::cout << "clean error " << records.front().error << "\nrecords: " << records_path.string() << '\n';
    return 0;
}

int cmd_benchmark(const fs::path& config_path, const std::optional<fs::path>& out, bool force) {
    ExperimentConfig config = parse_config_file(config_path);
    if (out) config.out_dir = *out;
    BenchmarkOptions options;
    options.force = force;
    options.progress = &std::cerr;
    const BenchmarkResult r = run_benchmark(config, options);
    std::cerr << r.trained << " runs trained, " << r.cached << " loaded from cache\n";
    write_aggregate_csv(std::cout, r.aggregate);
    return 0;
}

int cmd_verify(std::uint64_t seed, const std::optional<fs::path>& out, bool mutate) {
    VerifyOptions options;
    options.mutate_backward = mutate;
    std::ostringstream jsonl;
    const auto reports = run_verify_suite(seed, &jsonl, options);
    if (out) {
        std::ofstream file(*out, std::ios::trunc);
        if (!file) throw IoError("cannot write " + out->string());
        file << jsonl.str();
    }
    std::cout << jsonl.str();
    return all_hard_checks_pass(reports) ? 0 : kExitFailure;
}

int cmd_report(const fs::path& records_path, const std::string& baseline, bool summary) {
    std::ifstream in(records_path);
    if (!in) throw IoError("cannot open " + records_path.string());
    const auto records = read_records_csv(in);
    if (!summary) {
        const auto ce = compute_ce(records, baseline);
        write_aggregate_csv(std::cout, aggregate(ce));
        return 0;
    }
    std::set<std::pair<std::string, std::uint64_t>> runs;
    for (const auto& r : records) runs.insert({r.method, r.seed});
    std::cout << "method,seed,clean_error,mild_error,severe_error\n";
    char buf[160];
    for (const auto& [method, seed] : runs) {
        std::snprintf(buf, sizeof buf, "%s,%llu,%.6f,%.6f,%.6f\n", method.c_str(),
                      static_cast<unsigned long long>(seed), mean_error(records, method, seed, 0, 0),
                      mean_error(records, method, seed, 1, 3), mean_error(records, method, seed, 4, 5));
        std::cout << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weight-perturbation training and corruption-robustness benchmark"};
    app.require_subcommand(1);
    app.fallthrough();

    fs::path config_path, checkpoint, records_path;
    std::optional<fs::path> out;
    std::uint64_t seed = 0;
    bool force = false, mutate = false, summary = false;
    int threads = 0;
    std::string method, label = "model", baseline = "SGD";

    app.add_option("--threads", threads, "Worker threads (default: PERTURB_TRAIN_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);

    auto* train = app.add_subcommand("train", "Train one model and write its checkpoint");
    train->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
    train->add_option("--seed", seed, "Root seed");
    train->add_option("--out", out, "Output directory")->required();
    train->add_option("--method", method, "Override [train] method");
    train->add_flag("--force", force, "Overwrite an existing checkpoint");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on clean and corrupted test sets");
    eval->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--seed", seed, "Seed for the corruption draws");
    eval->add_option("--out", out, "Output directory")->required();
    eval->add_option("--label", label, "Method label written to the records");
    eval->add_flag("--force", force, "Overwrite existing records");

    auto* bench = app.add_subcommand("benchmark", "Train, evaluate and tabulate every method and seed");
    bench->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
    bench->add_option("--out", out, "Output directory (overrides [benchmark] out)");
    bench->add_flag("--force", force, "Overwrite existing results");

    auto* verify = app.add_subcommand("verify", "Run the numerical verification suite");
    verify->add_option("--seed", seed, "Root seed");
    verify->add_option("--out", out, "Write the JSON-lines report here as well");
    verify->add_flag("--mutate-backward", mutate)->group("");

    auto* report = app.add_subcommand("report", "Tabulate a records CSV");
    report->add_option("--records", records_path, "records.csv")->required()->check(CLI::ExistingFile);
    report->add_option("--baseline", baseline, "Baseline method label");
    report->add_flag("--summary", summary, "Per-run clean/mild/severe errors instead of CE");

    CLI11_PARSE(app, argc, argv);
    try {
        apply_threads(threads);
        if (*train) return cmd_train(config_path, seed, *out, method, force);
        if (*eval) return cmd_eval(config_path, checkpoint, seed, *out, label, force);
        if (*bench) return cmd_benchmark(config_path, out, force);
        if (*verify) return cmd_verify(seed, out, mutate);
        if (*report) return cmd_report(records_path, baseline, summary);
    } catch (const ptrain::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
