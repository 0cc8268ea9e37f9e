#include "ptrain/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>

#include "ptrain/errors.hpp"

namespace ptrain {

double predictive_error(const LayeredNet& net, const Dataset& ds, const Normalizer& normalizer) {
    if (ds.empty()) throw InputError("predictive_error: empty dataset");
    const auto preds = predict(net, normalizer.applied(ds.inputs));
    return predictive_error(preds, ds.labels);
}

double predictive_error(std::span<const std::size_t> predictions, std::span<const std::size_t> labels) {
    if (predictions.size() != labels.size())
        throw DimensionError("predictive_error: " + std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    if (labels.empty()) throw InputError("predictive_error: empty dataset");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) wrong += predictions[i] != labels[i];
    return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double corruption_error(std::span<const double> errors, std::span<const double> baseline_errors) {
    if (errors.size() != 5 || baseline_errors.size() != 5)
        throw InputError("corruption_error: expected 5 severities per model");
    double num = 0.0, den = 0.0;
    for (std::size_t s = 0; s < 5; ++s) {
        num += errors[s];
        den += baseline_errors[s];
    }
    if (!(den > 0.0)) throw DegenerateBaselineError("corruption_error: baseline errors sum to zero");
    return num / den;
}

void MetricsRecord::validate() const {
    if (!(error >= 0.0 && error <= 1.0)) throw InputError("metrics record: error outside [0, 1]");
    if (severity < 0 || severity > 5) throw InputError("metrics record: severity outside 0..5");
    if ((severity == 0) != (corruption == "none"))
        throw InputError("metrics record: severity 0 goes with corruption 'none' and only with it");
    if (method.empty()) throw InputError("metrics record: empty method");
}

namespace {

using CellKey = std::tuple<std::string, std::string, std::uint64_t>;  // method, corruption, seed

std::map<CellKey, std::array<double, 5>> severity_table(std::span<const MetricsRecord> records) {
    std::map<CellKey, std::array<double, 5>> table;
    std::map<CellKey, std::array<bool, 5>> seen;
    for (const auto& r : records) {
        r.validate();
        if (r.severity == 0) continue;
        const CellKey key{r.method, r.corruption, r.seed};
        auto& flags = seen[key];
        if (flags[r.severity - 1])
            throw InputError("duplicate record for " + r.method + "/" + r.corruption + " severity " +
                             std::to_string(r.severity) + " seed " + std::to_string(r.seed));
        flags[r.severity - 1] = true;
        table[key][r.severity - 1] = r.error;
    }
    for (const auto& [key, flags] : seen)
        if (!std::all_of(flags.begin(), flags.end(), [](bool b) { return b; }))
            throw InputError("missing severities for " + std::get<0>(key) + "/" + std::get<1>(key));
    return table;
}

std::string format6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<CeRecord> compute_ce(std::span<const MetricsRecord> records, const std::string& baseline_method) {
    const auto table = severity_table(records);
    std::vector<CeRecord> out;
    for (const auto& [key, errors] : table) {
        const auto& [method, corruption, seed] = key;
        auto base = table.find({baseline_method, corruption, seed});
        if (base == table.end())
            throw InputError("no " + baseline_method + " baseline for " + corruption + " seed " +
                             std::to_string(seed));
        out.push_back({method, corruption, seed, corruption_error(errors, base->second)});
    }
    return out;
}

std::vector<AggregateRow> aggregate(std::span<const CeRecord> records) {
    // method -> corruption -> seed -> ce; ordered maps make the result order-free.
    std::map<std::string, std::map<std::string, std::map<std::uint64_t, double>>> grid;
    for (const auto& r : records) grid[r.method][r.corruption][r.seed] = r.ce;

    std::vector<AggregateRow> rows;
    for (const auto& [method, by_corruption] : grid) {
        std::map<std::uint64_t, std::vector<double>> per_seed;
        std::vector<double> corruption_means;
        for (const auto& [corruption, by_seed] : by_corruption) {
            std::vector<double> ces;
            for (const auto& [seed, ce] : by_seed) {
                ces.push_back(ce);
                per_seed[seed].push_back(ce);
            }
            rows.push_back({method, corruption, mean_of(ces), sample_std(ces)});
            corruption_means.push_back(mean_of(ces));
        }
        std::vector<double> seed_avgs;
        for (const auto& [seed, ces] : per_seed) seed_avgs.push_back(mean_of(ces));
        rows.push_back({method, kAvgLabel, mean_of(corruption_means), sample_std(seed_avgs)});
    }
    return rows;
}

double mean_error(std::span<const MetricsRecord> records, const std::string& method, std::uint64_t seed,
                  int min_severity, int max_severity) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.method != method || r.seed != seed || r.severity < min_severity || r.severity > max_severity)
            continue;
        sum += r.error;
        ++n;
    }
    if (n == 0) throw InputError("mean_error: no records for " + method + " seed " + std::to_string(seed));
    return sum / static_cast<double>(n);
}

void write_records_csv(std::ostream& out, std::span<const MetricsRecord> records) {
    out << "method,corruption,severity,seed,error\n";
    for (const auto& r : records)
        out << r.method << ',' << r.corruption << ',' << r.severity << ',' << r.seed << ',' << format6(r.error)
            << '\n';
}

std::vector<MetricsRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "method,corruption,severity,seed,error")
        throw FormatError("records CSV: missing header 'method,corruption,severity,seed,error'");
    std::vector<MetricsRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 5)
            throw FormatError("records CSV line " + std::to_string(lineno) + ": expected 5 fields");
        MetricsRecord r;
        try {
            std::size_t pos = 0;
            r.method = cells[0];
            r.corruption = cells[1];
            r.severity = std::stoi(cells[2], &pos);
            if (pos != cells[2].size()) throw std::invalid_argument("severity");
            r.seed = std::stoull(cells[3], &pos);
            if (pos != cells[3].size()) throw std::invalid_argument("seed");
            r.error = std::stod(cells[4], &pos);
            if (pos != cells[4].size()) throw std::invalid_argument("error");
            r.validate();
        } catch (const InputError& e) {
            throw FormatError("records CSV line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::exception&) {
            throw FormatError("records CSV line " + std::to_string(lineno) + ": malformed number");
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "method,corruption,mean_CE,std_CE\n";
    for (const auto& r : rows)
        out << r.method << ',' << r.corruption << ',' << format6(r.mean_ce) << ',' << format6(r.std_ce) << '\n';
}

}  // namespace ptrain
