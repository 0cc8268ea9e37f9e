#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptrain/corrupt.hpp"
#include "ptrain/train.hpp"

namespace ptrain {

struct DataConfig {
    enum class Kind { blobs, idx, cifar10 };

    Kind kind = Kind::blobs;
    // idx
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    // cifar10
    std::vector<std::filesystem::path> cifar_train;
    std::filesystem::path cifar_test;
    // blobs
    std::size_t blobs_train = 10000;
    std::size_t blobs_test = 2000;
    std::size_t blobs_classes = 10;
    std::size_t blobs_dim = 64;
    double blobs_spread = 0.25;
    std::uint64_t blobs_seed = 0;

    double val_fraction = 0.1;
};

/// Per-method perturbation strengths used when a method is instantiated.
struct MethodDefaults {
    double damp_sigma = 0.2;
    double daap_sigma = 0.2;
    double dropout_p = 0.05;
    double sam_rho = 0.045;
    double asam_rho = 1.0;
    CorruptionSpec train_corruption{CorruptionKind::gaussian_noise, 3};
};

/// Everything one benchmark or training invocation needs.
///
/// File format: `[section]` headers followed by `key = value` lines; `#` starts
/// a comment line. Sections and keys:
///
///   [data]      kind (blobs | idx | cifar10, required), train_images, train_labels,
///               test_images, test_labels, cifar_train (comma list), cifar_test,
///               blobs_train, blobs_test, blobs_classes, blobs_dim, blobs_spread,
///               blobs_seed, val_fraction
///   [model]     hidden (comma list of widths), bias, standardize
///   [train]     method, epochs, batch_size, sub_batches, schedule (cifar | imagenet |
///               constant), lr, momentum, nesterov, weight_decay, sigma, daap_sigma,
///               dropout_p, sam_rho, asam_rho, train_corruption, train_severity
///   [benchmark] methods, corruptions (comma list or "all"), severities, seeds,
///               baseline, baseline_results, out
///
/// Unknown sections or keys, duplicates, malformed values and out-of-range
/// values are ConfigErrors naming the line.
struct ExperimentConfig {
    DataConfig data;
    MethodDefaults defaults;
    Method method = Method::sgd;
    /// cifar: lr until half the run, linear to lr/100 at 90%, then flat.
    /// imagenet: lr/1000 -> lr over the first 5/90, cosine back to lr/1000.
    std::string schedule = "cifar";
    std::optional<double> lr;   // 0.1 for cifar and constant, 0.8 for imagenet
    RunConfig run;   // method-independent training settings; perturbation filled per method

    std::vector<Method> methods = {Method::sgd, Method::damp};
    std::vector<CorruptionKind> corruptions{kAllCorruptions.begin(), kAllCorruptions.end()};
    std::vector<int> severities = {1, 2, 3, 4, 5};
    std::vector<std::uint64_t> seeds = {0};
    Method baseline = Method::sgd;
    std::optional<std::filesystem::path> baseline_results;
    std::filesystem::path out_dir = "results";

    /// Cross-field checks (divisibility, non-empty lists). Throws ConfigError.
    void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::filesystem::path& path);

/// Schedule named "cifar", "imagenet" or "constant" with base rate `lr`.
ScheduleSpec make_schedule(const std::string& name, std::optional<double> lr);

/// Training configuration of `method` under `seed`.
RunConfig run_config_for(const ExperimentConfig& config, Method method, std::uint64_t seed);

/// Canonical text form of every setting, one `key = value` per line.
std::string echo_config(const ExperimentConfig& config);

/// FNV-1a over everything that determines the trained weights of `method`
/// (data, model, training settings, the method's own strength); seeds excluded.
std::uint64_t training_hash(const ExperimentConfig& config, Method method);

}  // namespace ptrain
