#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ptrain/config.hpp"
#include "ptrain/data.hpp"
#include "ptrain/metrics.hpp"
#include "ptrain/network.hpp"

namespace ptrain {

struct LoadedData {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Training, validation and test sets. The validation split and the blobs are
/// fixed by the data settings alone, so every run seed sees the same data.
LoadedData load_data(const DataConfig& config);

/// Clean error (severity 0, corruption "none") followed by every
/// (corruption, severity) cell. Cell seeds are derived from `seed`, so all
/// methods trained under one seed face the same corrupted test sets.
std::vector<MetricsRecord> evaluate_cells(const LayeredNet& net, const Normalizer& normalizer, const Dataset& test,
                                          std::span<const CorruptionKind> corruptions, std::span<const int> severities,
                                          const std::string& method, std::uint64_t seed);

struct BenchmarkOptions {
    bool force = false;
    std::ostream* progress = nullptr;
};

struct BenchmarkResult {
    std::vector<MetricsRecord> records;
    std::vector<AggregateRow> aggregate;
    std::size_t trained = 0;   // runs trained from scratch
    std::size_t cached = 0;    // runs loaded from the checkpoint cache
};

/// Trains every (method, seed), evaluates it, computes CE against the baseline
/// and writes records.csv, aggregate.csv, config_echo.txt and per-run training
/// logs under the output directory. Trained weights are cached as
/// cache/<method>-<hash>-<seed>.ckpt and reused on later runs.
/// Throws IoError when results already exist (unless forced) or the directory
/// cannot be written, ConfigError when no baseline is available or the
/// severities are not 1..5.
BenchmarkResult run_benchmark(const ExperimentConfig& config, const BenchmarkOptions& options = {});

}  // namespace ptrain
