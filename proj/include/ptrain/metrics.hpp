#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptrain/corrupt.hpp"
#include "ptrain/data.hpp"
#include "ptrain/network.hpp"

namespace ptrain {

/// Fraction of argmax-misclassified samples (ties resolve to the lowest class index).
double predictive_error(const LayeredNet& net, const Dataset& ds,
                        const Normalizer& normalizer = Normalizer::identity());
double predictive_error(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

/// Sum of the model's errors over severities 1..5 divided by the baseline's.
double corruption_error(std::span<const double> errors, std::span<const double> baseline_errors);

/// Error of one model on one (corruption, severity) cell; severity 0 is the clean set.
struct MetricsRecord {
    std::string method;
    std::string corruption;
    int severity = 0;
    std::uint64_t seed = 0;
    double error = 0.0;

    void validate() const;
};

struct CeRecord {
    std::string method;
    std::string corruption;
    std::uint64_t seed = 0;
    double ce = 0.0;
};

/// CE per (method, corruption, seed) against `baseline_method` of the same seed.
/// Clean (severity 0) records are ignored. Missing baseline cells raise InputError.
std::vector<CeRecord> compute_ce(std::span<const MetricsRecord> records, const std::string& baseline_method);

struct AggregateRow {
    std::string method;
    std::string corruption;   // "Avg" for the per-method mean over corruptions
    double mean_ce = 0.0;
    double std_ce = 0.0;
};

inline constexpr const char* kAvgLabel = "Avg";

/// Mean and sample std of CE across seeds for each (method, corruption), plus an
/// "Avg" row per method: the unweighted mean over corruptions (std over the
/// per-seed averages). Rows sorted by method then corruption, Avg last; the
/// result does not depend on input order.
std::vector<AggregateRow> aggregate(std::span<const CeRecord> records);

/// Mean error of each method over the severity range of all non-clean corruptions,
/// used for mild/severe summaries. `min_severity`..`max_severity` inclusive.
double mean_error(std::span<const MetricsRecord> records, const std::string& method, std::uint64_t seed,
                  int min_severity, int max_severity);

// CSV I/O. Headers are mandatory, floats are written with 6 decimals.
void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records);
std::vector<MetricsRecord> read_records_csv(std::istream& in);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);

}  // namespace ptrain
