#include "ptrain/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ptrain/errors.hpp"

namespace ptrain {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

// Typed value readers; they throw ConfigError carrying the line number.
struct Line {
    std::size_t number;
    std::string key;
    std::string value;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(number) + ": " + key + ": " + what);
    }

    double real() const {
        double v = 0.0;
        const auto* end = value.data() + value.size();
        auto [ptr, ec] = std::from_chars(value.data(), end, v);
        if (ec != std::errc() || ptr != end || value.empty()) fail("expected a number, got '" + value + "'");
        return v;
    }
    double nonnegative() const {
        const double v = real();
        if (!(v >= 0.0)) fail("must be >= 0");
        return v;
    }
    static std::uint64_t parse_u64(const Line& l, const std::string& s) {
        std::uint64_t v = 0;
        const auto* end = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(s.data(), end, v);
        if (ec != std::errc() || ptr != end || s.empty()) l.fail("expected a non-negative integer, got '" + s + "'");
        return v;
    }
    std::uint64_t u64() const { return parse_u64(*this, value); }
    std::size_t positive() const {
        const auto v = u64();
        if (v == 0) fail("must be >= 1");
        return static_cast<std::size_t>(v);
    }
    bool boolean() const {
        if (value == "true") return true;
        if (value == "false") return false;
        fail("expected true or false, got '" + value + "'");
    }
    std::string text() const {
        if (value.empty()) fail("empty value");
        return value;
    }
    std::vector<std::string> list() const {
        auto items = split_list(value);
        if (items.empty() || std::any_of(items.begin(), items.end(), [](const std::string& s) { return s.empty(); }))
            fail("malformed list '" + value + "'");
        return items;
    }
    Method method() const {
        try {
            return parse_method(value);
        } catch (const InputError&) {
            fail("unknown method '" + value + "'");
        }
    }
    CorruptionKind corruption() const {
        try {
            return parse_corruption_kind(value);
        } catch (const InputError&) {
            fail("unknown corruption '" + value + "'");
        }
    }
};

using Setter = std::function<void(ExperimentConfig&, const Line&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"data",
         {
             {"kind",
              [](ExperimentConfig& c, const Line& l) {
                  if (l.value == "blobs") c.data.kind = DataConfig::Kind::blobs;
                  else if (l.value == "idx") c.data.kind = DataConfig::Kind::idx;
                  else if (l.value == "cifar10") c.data.kind = DataConfig::Kind::cifar10;
                  else l.fail("expected blobs, idx or cifar10");
              }},
             {"train_images", [](ExperimentConfig& c, const Line& l) { c.data.train_images = l.text(); }},
             {"train_labels", [](ExperimentConfig& c, const Line& l) { c.data.train_labels = l.text(); }},
             {"test_images", [](ExperimentConfig& c, const Line& l) { c.data.test_images = l.text(); }},
             {"test_labels", [](ExperimentConfig& c, const Line& l) { c.data.test_labels = l.text(); }},
             {"cifar_train",
              [](ExperimentConfig& c, const Line& l) {
                  c.data.cifar_train.clear();
                  for (const auto& p : l.list()) c.data.cifar_train.emplace_back(p);
              }},
             {"cifar_test", [](ExperimentConfig& c, const Line& l) { c.data.cifar_test = l.text(); }},
             {"blobs_train", [](ExperimentConfig& c, const Line& l) { c.data.blobs_train = l.positive(); }},
             {"blobs_test", [](ExperimentConfig& c, const Line& l) { c.data.blobs_test = l.positive(); }},
             {"blobs_classes",
              [](ExperimentConfig& c, const Line& l) {
                  c.data.blobs_classes = l.positive();
                  if (c.data.blobs_classes < 2) l.fail("need at least 2 classes");
              }},
             {"blobs_dim", [](ExperimentConfig& c, const Line& l) { c.data.blobs_dim = l.positive(); }},
             {"blobs_spread", [](ExperimentConfig& c, const Line& l) { c.data.blobs_spread = l.nonnegative(); }},
             {"blobs_seed", [](ExperimentConfig& c, const Line& l) { c.data.blobs_seed = l.u64(); }},
             {"val_fraction",
              [](ExperimentConfig& c, const Line& l) {
                  c.data.val_fraction = l.real();
                  if (!(c.data.val_fraction > 0.0 && c.data.val_fraction < 1.0)) l.fail("must be in (0, 1)");
              }},
         }},
        {"model",
         {
             {"hidden",
              [](ExperimentConfig& c, const Line& l) {
                  c.run.hidden.clear();
                  if (l.value == "none") return;
                  for (const auto& w : l.list()) {
                      const auto v = Line::parse_u64(l, w);
                      if (v == 0) l.fail("hidden widths must be >= 1");
                      c.run.hidden.push_back(static_cast<std::size_t>(v));
                  }
              }},
             {"bias", [](ExperimentConfig& c, const Line& l) { c.run.bias = l.boolean(); }},
             {"standardize", [](ExperimentConfig& c, const Line& l) { c.run.standardize = l.boolean(); }},
         }},
        {"train",
         {
             {"method", [](ExperimentConfig& c, const Line& l) { c.method = l.method(); }},
             {"epochs", [](ExperimentConfig& c, const Line& l) { c.run.epochs = static_cast<std::size_t>(l.u64()); }},
             {"batch_size", [](ExperimentConfig& c, const Line& l) { c.run.batch_size = l.positive(); }},
             {"sub_batches", [](ExperimentConfig& c, const Line& l) { c.run.sub_batches = l.positive(); }},
             {"schedule",
              [](ExperimentConfig& c, const Line& l) {
                  if (l.value != "cifar" && l.value != "imagenet" && l.value != "constant")
                      l.fail("expected cifar, imagenet or constant");
                  c.schedule = l.value;
              }},
             {"lr", [](ExperimentConfig& c, const Line& l) { c.lr = l.nonnegative(); }},
             {"momentum",
              [](ExperimentConfig& c, const Line& l) {
                  c.run.optimizer.momentum = l.nonnegative();
                  if (!(c.run.optimizer.momentum < 1.0)) l.fail("must be in [0, 1)");
              }},
             {"nesterov", [](ExperimentConfig& c, const Line& l) { c.run.optimizer.nesterov = l.boolean(); }},
             {"weight_decay", [](ExperimentConfig& c, const Line& l) { c.run.optimizer.weight_decay = l.nonnegative(); }},
             {"sigma", [](ExperimentConfig& c, const Line& l) { c.defaults.damp_sigma = l.nonnegative(); }},
             {"daap_sigma", [](ExperimentConfig& c, const Line& l) { c.defaults.daap_sigma = l.nonnegative(); }},
             {"dropout_p",
              [](ExperimentConfig& c, const Line& l) {
                  c.defaults.dropout_p = l.nonnegative();
                  if (!(c.defaults.dropout_p < 1.0)) l.fail("must be in [0, 1)");
              }},
             {"sam_rho", [](ExperimentConfig& c, const Line& l) { c.defaults.sam_rho = l.nonnegative(); }},
             {"asam_rho", [](ExperimentConfig& c, const Line& l) { c.defaults.asam_rho = l.nonnegative(); }},
             {"train_corruption",
              [](ExperimentConfig& c, const Line& l) { c.defaults.train_corruption.kind = l.corruption(); }},
             {"train_severity",
              [](ExperimentConfig& c, const Line& l) {
                  const auto s = l.u64();
                  if (s < 1 || s > 5) l.fail("severity must be in 1..5");
                  c.defaults.train_corruption.severity = static_cast<int>(s);
              }},
         }},
        {"benchmark",
         {
             {"methods",
              [](ExperimentConfig& c, const Line& l) {
                  c.methods.clear();
                  for (const auto& m : l.list()) {
                      Line item{l.number, l.key, m};
                      const Method method = item.method();
                      if (std::find(c.methods.begin(), c.methods.end(), method) != c.methods.end())
                          l.fail("method '" + m + "' listed twice");
                      c.methods.push_back(method);
                  }
              }},
             {"corruptions",
              [](ExperimentConfig& c, const Line& l) {
                  c.corruptions.clear();
                  if (l.value == "all") {
                      c.corruptions.assign(kAllCorruptions.begin(), kAllCorruptions.end());
                      return;
                  }
                  for (const auto& name : l.list()) {
                      const CorruptionKind k = Line{l.number, l.key, name}.corruption();
                      if (k == CorruptionKind::none) l.fail("'none' is always evaluated as the clean set");
                      if (std::find(c.corruptions.begin(), c.corruptions.end(), k) != c.corruptions.end())
                          l.fail("corruption '" + name + "' listed twice");
                      c.corruptions.push_back(k);
                  }
              }},
             {"severities",
              [](ExperimentConfig& c, const Line& l) {
                  c.severities.clear();
                  for (const auto& s : l.list()) {
                      const auto v = Line::parse_u64(l, s);
                      if (v < 1 || v > 5) l.fail("severities must be in 1..5");
                      c.severities.push_back(static_cast<int>(v));
                  }
                  std::sort(c.severities.begin(), c.severities.end());
                  if (std::adjacent_find(c.severities.begin(), c.severities.end()) != c.severities.end())
                      l.fail("severity listed twice");
              }},
             {"seeds",
              [](ExperimentConfig& c, const Line& l) {
                  c.seeds.clear();
                  std::set<std::uint64_t> seen;
                  for (const auto& s : l.list()) {
                      const auto v = Line::parse_u64(l, s);
                      if (!seen.insert(v).second) l.fail("seed " + s + " listed twice");
                      c.seeds.push_back(v);
                  }
              }},
             {"baseline", [](ExperimentConfig& c, const Line& l) { c.baseline = l.method(); }},
             {"baseline_results", [](ExperimentConfig& c, const Line& l) { c.baseline_results = l.text(); }},
             {"out", [](ExperimentConfig& c, const Line& l) { c.out_dir = l.text(); }},
         }},
    };
    return table;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += fmt(items[i]);
    }
    return out;
}

std::string data_kind_name(DataConfig::Kind k) {
    switch (k) {
        case DataConfig::Kind::blobs: return "blobs";
        case DataConfig::Kind::idx: return "idx";
        case DataConfig::Kind::cifar10: return "cifar10";
    }
    return "?";
}

std::string schedule_echo(const ScheduleSpec& s) {
    switch (s.kind) {
        case ScheduleSpec::Kind::constant: return "constant(" + format_real(s.lr) + ")";
        case ScheduleSpec::Kind::piecewise_linear:
            return "piecewise(" + join(s.knots, [](const auto& k) { return format_real(k.first) + ":" + format_real(k.second); }) + ")";
        case ScheduleSpec::Kind::warm_linear_cosine:
            return "warm_cosine(" + format_real(s.warmup_fraction) + "," + format_real(s.start_lr) + "," +
                   format_real(s.peak_lr) + "," + format_real(s.final_lr) + ")";
    }
    return "?";
}

std::string data_echo(const DataConfig& d) {
    std::ostringstream out;
    out << "data.kind = " << data_kind_name(d.kind) << '\n';
    switch (d.kind) {
        case DataConfig::Kind::blobs:
            out << "data.blobs = " << d.blobs_train << "," << d.blobs_test << "," << d.blobs_classes << ","
                << d.blobs_dim << "," << format_real(d.blobs_spread) << "," << d.blobs_seed << '\n';
            break;
        case DataConfig::Kind::idx:
            out << "data.idx = " << d.train_images.string() << "," << d.train_labels.string() << ","
                << d.test_images.string() << "," << d.test_labels.string() << '\n';
            break;
        case DataConfig::Kind::cifar10:
            out << "data.cifar = " << join(d.cifar_train, [](const auto& p) { return p.string(); }) << ";"
                << d.cifar_test.string() << '\n';
            break;
    }
    out << "data.val_fraction = " << format_real(d.val_fraction) << '\n';
    return out.str();
}

std::string run_echo(const RunConfig& r) {
    std::ostringstream out;
    out << "model.hidden = " << join(r.hidden, [](std::size_t w) { return std::to_string(w); }) << '\n'
        << "model.bias = " << (r.bias ? "true" : "false") << '\n'
        << "model.standardize = " << (r.standardize ? "true" : "false") << '\n'
        << "train.epochs = " << r.epochs << '\n'
        << "train.batch_size = " << r.batch_size << '\n'
        << "train.sub_batches = " << r.sub_batches << '\n'
        << "train.schedule = " << schedule_echo(r.schedule) << '\n'
        << "train.momentum = " << format_real(r.optimizer.momentum) << '\n'
        << "train.nesterov = " << (r.optimizer.nesterov ? "true" : "false") << '\n'
        << "train.weight_decay = " << format_real(r.optimizer.weight_decay) << '\n';
    return out.str();
}

std::string method_strength(const ExperimentConfig& c, Method m) {
    switch (m) {
        case Method::sgd: return "-";
        case Method::dropout: return format_real(c.defaults.dropout_p);
        case Method::damp: return format_real(c.defaults.damp_sigma);
        case Method::daap: return format_real(c.defaults.daap_sigma);
        case Method::sam: return format_real(c.defaults.sam_rho);
        case Method::asam: return format_real(c.defaults.asam_rho);
        case Method::corruption_aug:
            return std::string(to_string(c.defaults.train_corruption.kind)) + ":" +
                   std::to_string(c.defaults.train_corruption.severity);
    }
    return "?";
}

}  // namespace

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("benchmark: methods list is empty");
    if (seeds.empty()) throw ConfigError("benchmark: seeds list is empty");
    if (severities.empty()) throw ConfigError("benchmark: severities list is empty");
    if (out_dir.empty()) throw ConfigError("benchmark: empty output directory");
    std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
    if (distinct.size() != seeds.size()) throw ConfigError("benchmark: seeds must be distinct");
    if (data.kind == DataConfig::Kind::idx &&
        (data.train_images.empty() || data.train_labels.empty() || data.test_images.empty() ||
         data.test_labels.empty()))
        throw ConfigError("data: idx needs train_images, train_labels, test_images and test_labels");
    if (data.kind == DataConfig::Kind::cifar10 && (data.cifar_train.empty() || data.cifar_test.empty()))
        throw ConfigError("data: cifar10 needs cifar_train and cifar_test");
    std::vector<Method> all = methods;
    all.push_back(method);
    for (Method m : all) {
        try {
            run_config_for(*this, m, 0).validate();
        } catch (const InputError& e) {
            throw ConfigError(std::string(to_string(m)) + ": " + e.what());
        }
    }
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    std::string raw;
    std::string section;
    std::set<std::string> seen;
    bool have_kind = false;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(number) + ": malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!schema().contains(section))
                throw ConfigError("line " + std::to_string(number) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
        Line l{number, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
        if (section.empty()) throw ConfigError("line " + std::to_string(number) + ": key outside any section");
        const auto& keys = schema().at(section);
        const auto it = keys.find(l.key);
        if (it == keys.end())
            throw ConfigError("line " + std::to_string(number) + ": unknown key '" + l.key + "' in [" + section + "]");
        if (!seen.insert(section + "." + l.key).second) l.fail("duplicate key");
        it->second(config, l);
        if (section == "data" && l.key == "kind") have_kind = true;
    }
    if (!have_kind) throw ConfigError("missing required key [data] kind");
    config.run.schedule = make_schedule(config.schedule, config.lr);
    config.validate();
    return config;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return parse_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ScheduleSpec make_schedule(const std::string& name, std::optional<double> lr) {
    if (name == "cifar") {
        const double base = lr.value_or(0.1);
        return ScheduleSpec::piecewise({{0.0, base}, {0.5, base}, {0.9, base / 100.0}, {1.0, base / 100.0}});
    }
    if (name == "imagenet") {
        const double peak = lr.value_or(0.8);
        return ScheduleSpec::warm_linear_cosine(5.0 / 90.0, peak / 1000.0, peak, peak / 1000.0);
    }
    if (name == "constant") return ScheduleSpec::constant(lr.value_or(0.1));
    throw ConfigError("unknown schedule '" + name + "'");
}

RunConfig run_config_for(const ExperimentConfig& config, Method method, std::uint64_t seed) {
    RunConfig r = config.run;
    r.method = method;
    r.seed = seed;
    r.perturbation = PerturbationSpec::none();
    r.train_corruption = {};
    switch (method) {
        case Method::sgd: break;
        case Method::dropout: r.perturbation = PerturbationSpec::dropout(config.defaults.dropout_p); break;
        case Method::damp: r.perturbation = PerturbationSpec::multiplicative(config.defaults.damp_sigma); break;
        case Method::daap: r.perturbation = PerturbationSpec::additive(config.defaults.daap_sigma); break;
        case Method::sam: r.perturbation = PerturbationSpec::sam(config.defaults.sam_rho); break;
        case Method::asam: r.perturbation = PerturbationSpec::asam(config.defaults.asam_rho); break;
        case Method::corruption_aug: r.train_corruption = config.defaults.train_corruption; break;
    }
    if (method != Method::damp && method != Method::daap) r.sub_batches = 1;
    return r;
}

std::string echo_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << data_echo(c.data) << run_echo(c.run);
    out << "train.method = " << to_string(c.method) << '\n';
    for (Method m : {Method::dropout, Method::damp, Method::daap, Method::sam, Method::asam, Method::corruption_aug})
        out << "train.strength." << to_string(m) << " = " << method_strength(c, m) << '\n';
    out << "benchmark.methods = " << join(c.methods, [](Method m) { return std::string(to_string(m)); }) << '\n'
        << "benchmark.corruptions = "
        << join(c.corruptions, [](CorruptionKind k) { return std::string(to_string(k)); }) << '\n'
        << "benchmark.severities = " << join(c.severities, [](int s) { return std::to_string(s); }) << '\n'
        << "benchmark.seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
        << "benchmark.baseline = " << to_string(c.baseline) << '\n'
        << "benchmark.baseline_results = " << (c.baseline_results ? c.baseline_results->string() : "-") << '\n';
    return out.str();
}

std::uint64_t training_hash(const ExperimentConfig& config, Method method) {
    RunConfig r = run_config_for(config, method, 0);
    const std::string text = data_echo(config.data) + run_echo(r) + "method = " + std::string(to_string(method)) +
                             "\nstrength = " + method_strength(config, method) +
                             "\nsub_batches = " + std::to_string(r.sub_batches) + "\n";
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ptrain
