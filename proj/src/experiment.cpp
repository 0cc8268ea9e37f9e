#include "ptrain/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"
#include "ptrain/train.hpp"

namespace ptrain {

namespace fs = std::filesystem;

namespace {

Dataset rows_range(const Dataset& ds, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    return ds.subset(idx);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

LoadedData load_data(const DataConfig& config) {
    Dataset train, test;
    std::uint64_t split_seed = derive_seed(0, {stream::split});
    switch (config.kind) {
        case DataConfig::Kind::blobs: {
            const Dataset all = synth_blobs(config.blobs_train + config.blobs_test, config.blobs_classes,
                                            config.blobs_dim, config.blobs_spread,
                                            derive_seed(config.blobs_seed, {stream::data}));
            train = rows_range(all, 0, config.blobs_train);
            test = rows_range(all, config.blobs_train, all.size());
            split_seed = derive_seed(config.blobs_seed, {stream::split});
            break;
        }
        case DataConfig::Kind::idx:
            train = load_idx(config.train_images, config.train_labels);
            test = load_idx(config.test_images, config.test_labels);
            break;
        case DataConfig::Kind::cifar10:
            train = load_cifar10_bin(config.cifar_train);
            test = load_cifar10_bin(config.cifar_test);
            break;
    }
    auto [fit_part, val_part] = split(train, config.val_fraction, split_seed);
    return {std::move(fit_part), std::move(val_part), std::move(test)};
}

std::vector<MetricsRecord> evaluate_cells(const LayeredNet& net, const Normalizer& normalizer, const Dataset& test,
                                          std::span<const CorruptionKind> corruptions, std::span<const int> severities,
                                          const std::string& method, std::uint64_t seed) {
    std::vector<MetricsRecord> out;
    out.push_back({method, "none", 0, seed, predictive_error(net, test, normalizer)});
    for (CorruptionKind kind : corruptions) {
        for (int s : severities) {
            const CorruptionSpec spec{kind, s};
            const std::uint64_t cell_seed =
                derive_seed(seed, {stream::eval_corruption, static_cast<std::uint64_t>(kind),
                                   static_cast<std::uint64_t>(s)});
            const Dataset corrupted = corrupt_dataset(spec, test, cell_seed);
            out.push_back({method, std::string(to_string(kind)), s, seed,
                           predictive_error(net, corrupted, normalizer)});
        }
    }
    return out;
}

BenchmarkResult run_benchmark(const ExperimentConfig& config, const BenchmarkOptions& options) {
    config.validate();
    if (config.severities != std::vector<int>{1, 2, 3, 4, 5})
        throw ConfigError("benchmark: corruption error needs severities 1..5");
    const fs::path out = config.out_dir;
    if (!options.force && (fs::exists(out / "records.csv") || fs::exists(out / "aggregate.csv")))
        throw IoError("results already exist in " + out.string() + " (pass --force to overwrite)");
    std::error_code ec;
    fs::create_directories(out / "cache", ec);
    if (!ec) fs::create_directories(out / "logs", ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());

    const std::string baseline_name(to_string(config.baseline));
    const bool baseline_trained =
        std::find(config.methods.begin(), config.methods.end(), config.baseline) != config.methods.end();
    std::vector<MetricsRecord> external;
    if (!baseline_trained) {
        if (!config.baseline_results)
            throw ConfigError("baseline " + baseline_name + " is neither trained nor given as baseline_results");
        std::ifstream in(*config.baseline_results);
        if (!in) throw ConfigError("cannot open baseline_results " + config.baseline_results->string());
        for (auto& r : read_records_csv(in))
            if (r.method == baseline_name) external.push_back(std::move(r));
        if (external.empty())
            throw ConfigError("baseline_results holds no " + baseline_name + " records");
    }

    const LoadedData data = load_data(config.data);
    BenchmarkResult result;
    for (Method method : config.methods) {
        const std::string name(to_string(method));
        const std::string hash = hex16(training_hash(config, method));
        for (std::uint64_t seed : config.seeds) {
            const RunConfig run = run_config_for(config, method, seed);
            const Normalizer normalizer = run.standardize ? Normalizer::fit(data.train) : Normalizer::identity();
            const fs::path ckpt = out / "cache" / (name + "-" + hash + "-" + std::to_string(seed) + ".ckpt");
            LayeredNet net;
            if (fs::exists(ckpt)) {
                net = load_checkpoint(ckpt);
                ++result.cached;
            } else {
                std::ostringstream log;
                FitOptions fit_options;
                fit_options.log = &log;
                net = fit(run, data.train, data.val, fit_options).net;
                write_text(out / "logs" / (name + "-seed" + std::to_string(seed) + ".csv"), log.str());
                const fs::path tmp = ckpt.string() + ".tmp";
                save_checkpoint(net, tmp);
                fs::rename(tmp, ckpt);
                ++result.trained;
            }
            auto cells = evaluate_cells(net, normalizer, data.test, config.corruptions, config.severities, name, seed);
            if (options.progress)
                *options.progress << name << " seed " << seed << ": clean error " << cells.front().error << '\n';
            result.records.insert(result.records.end(), cells.begin(), cells.end());
        }
    }

    std::vector<MetricsRecord> ce_input = result.records;
    ce_input.insert(ce_input.end(), external.begin(), external.end());
    std::vector<CeRecord> ce;
    try {
        ce = compute_ce(ce_input, baseline_name);
    } catch (const InputError& e) {
        throw ConfigError(std::string("baseline: ") + e.what());
    }
    result.aggregate = aggregate(ce);

    std::ostringstream records, agg;
    write_records_csv(records, result.records);
    write_aggregate_csv(agg, result.aggregate);
    write_text(out / "records.csv", records.str());
    write_text(out / "aggregate.csv", agg.str());
    write_text(out / "config_echo.txt", echo_config(config));
    return result;
}

}  // namespace ptrain
