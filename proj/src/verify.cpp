#include "ptrain/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include <json.hpp>

#include "ptrain/errors.hpp"
#include "ptrain/perturb.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

std::string to_jsonl(const CheckReport& report) {
    nlohmann::ordered_json j;
    j["check"] = report.check;
    j["seed"] = report.seed;
    j["measured"] = report.measured;
    j["threshold"] = report.threshold;
    j["pass"] = report.pass;
    if (!report.hard) j["diagnostic"] = true;
    return j.dump();
}

namespace {

void require_bias_free(const LayeredNet& net, const char* what) {
    for (std::size_t h = 0; h < net.depth(); ++h)
        if (net.bias(h)) throw PreconditionError(std::string(what) + ": net must be bias-free");
}

Tensor random_normal(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> normal(0.0, scale);
    for (auto& v : t.data()) v = normal(rng);
    return t;
}

std::vector<bool> relu_pattern(const LayeredNet& net, const ForwardTrace& trace) {
    std::vector<bool> pattern;
    for (std::size_t h = 0; h < net.depth(); ++h) {
        if (net.activation(h) != Activation::relu) continue;
        for (double z : trace.pre_activations[h].data()) pattern.push_back(z > 0.0);
    }
    return pattern;
}

// Cross-entropy of one sample with every intermediate in long double.
long double loss_extended(const ParamTensors& p, const std::vector<Activation>& acts, std::span<const double> x,
                          std::size_t label) {
    std::vector<long double> f(x.begin(), x.end());
    for (std::size_t h = 0; h < p.depth(); ++h) {
        const Tensor& w = p.weights[h];
        std::vector<long double> z(w.rows(), 0.0L);
        for (std::size_t i = 0; i < w.rows(); ++i) {
            long double acc = p.biases[h] ? static_cast<long double>((*p.biases[h])[i]) : 0.0L;
            for (std::size_t j = 0; j < w.cols(); ++j) acc += static_cast<long double>(w.at(i, j)) * f[j];
            z[i] = acts[h] == Activation::relu ? std::max(acc, 0.0L) : acc;
        }
        f = std::move(z);
    }
    const long double mx = *std::max_element(f.begin(), f.end());
    long double sum = 0.0L;
    for (long double v : f) sum += std::exp(v - mx);
    return std::log(sum) - (f[label] - mx);
}

double rel_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

// Random layout of 1-3 tensors whose entries span several orders of magnitude.
ParamTensors random_layout(Rng& rng) {
    std::uniform_int_distribution<std::size_t> count(1, 3), dim(1, 6);
    std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
    ParamTensors p;
    const std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::pow(10.0, log_scale(rng));
        p.weights.push_back(random_normal({dim(rng), dim(rng)}, rng, s));
        p.biases.push_back(i % 2 ? std::optional<Tensor>(random_normal({p.weights.back().rows()}, rng, s))
                                 : std::nullopt);
    }
    return p;
}

bool same_run_settings(const RunConfig& a, const RunConfig& b) {
    const auto& sa = a.schedule;
    const auto& sb = b.schedule;
    return a.train_corruption.kind == b.train_corruption.kind &&
           a.train_corruption.severity == b.train_corruption.severity && a.epochs == b.epochs &&
           a.batch_size == b.batch_size && a.sub_batches == b.sub_batches && sa.kind == sb.kind &&
           sa.lr == sb.lr && sa.knots == sb.knots && sa.warmup_fraction == sb.warmup_fraction &&
           sa.start_lr == sb.start_lr && sa.peak_lr == sb.peak_lr && sa.final_lr == sb.final_lr &&
           a.optimizer.momentum == b.optimizer.momentum && a.optimizer.nesterov == b.optimizer.nesterov &&
           a.optimizer.weight_decay == b.optimizer.weight_decay && a.seed == b.seed && a.hidden == b.hidden &&
           a.bias == b.bias && a.standardize == b.standardize;
}

}  // namespace

// --- weight-space equivalence ------------------------------------------------------

MwpReport check_mwp_equivalence(const Tensor& w, const Tensor& x, const Tensor& eps) {
    if (w.rank() != 1 || !w.same_shape(x) || !w.same_shape(eps))
        throw DimensionError("check_mwp_equivalence: w, x, eps must be vectors of one length");
    MwpReport r;
    double scale = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(std::abs(x[i]) >= kMwpMinAbsInput))
            throw PreconditionError("check_mwp_equivalence: |x_" + std::to_string(i) + "| below 1e-6");
        const double xi = 1.0 + eps[i] / x[i];
        r.lhs += w[i] * (x[i] + eps[i]);
        r.rhs += (w[i] * xi) * x[i];
        scale += std::abs(w[i]) * (std::abs(x[i]) + std::abs(eps[i]));
    }
    const double denom = std::max({std::abs(r.lhs), std::abs(r.rhs), scale});
    r.relative_diff = denom > 0.0 ? std::abs(r.lhs - r.rhs) / denom : 0.0;
    r.pass = r.relative_diff <= kMwpTolerance;
    return r;
}

CheckReport check_mwp_random(std::size_t cases, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, 32);
    std::uniform_real_distribution<double> mag(0.1, 2.0), unit(-1.0, 1.0);
    std::bernoulli_distribution sign(0.5);
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t n = len(rng);
        Tensor w({n}), x({n}), e({n});
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = unit(rng) * 2.0;
            x[i] = sign(rng) ? mag(rng) : -mag(rng);
            e[i] = unit(rng);
        }
        worst = std::max(worst, check_mwp_equivalence(w, x, e).relative_diff);
    }
    return {"mwp_equivalence", seed, worst, kMwpTolerance, worst <= kMwpTolerance};
}

// --- first-order shift ---------------------------------------------------------------

ShiftReport check_first_order_shift(const LayeredNet& net, const Tensor& x, std::size_t label,
                                    const Tensor& direction, std::span<const double> scales, std::size_t h,
                                    bool linearized) {
    require_bias_free(net, "check_first_order_shift");
    if (h >= net.depth()) throw InputError("check_first_order_shift: layer index out of range");
    if (x.rank() != 1 || !x.same_shape(direction))
        throw DimensionError("check_first_order_shift: x and direction must be vectors of one length");
    if (scales.empty()) throw InputError("check_first_order_shift: no scales");
    for (std::size_t i = 0; i < scales.size(); ++i)
        if (!(scales[i] > 0.0) || (i > 0 && !(scales[i] < scales[i - 1])))
            throw InputError("check_first_order_shift: scales must be positive and strictly decreasing");

    const ForwardTrace base = forward(net, x);
    const GradientSet grad = backward(net, base, label);
    const Tensor& dz = grad.pre_activations[h];
    const Tensor& w = net.weight(h);
    const double base_loss = cross_entropy(base.logits(), label);
    const auto pattern = relu_pattern(net, base);

    ShiftReport report;
    for (double t : scales) {
        const ForwardTrace moved = forward(net, add(x, scale(direction, t)));
        if (!linearized && relu_pattern(net, moved) != pattern) {
            report.skipped = true;
            report.skip_reason = "activation_pattern";
        }
        const Tensor df = subtract(moved.activation_at(h), base.activation_at(h));
        double first = 0.0;
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double wdf = 0.0;
            for (std::size_t j = 0; j < w.cols(); ++j) wdf += w.at(i, j) * df[j];
            first += dz[i] * wdf;
        }
        double change = 0.0;
        if (linearized) {
            const Tensor dzh = subtract(moved.pre_activations[h], base.pre_activations[h]);
            for (std::size_t i = 0; i < dz.size(); ++i) change += dz[i] * dzh[i];
        } else {
            change = cross_entropy(moved.logits(), label) - base_loss;
        }
        report.residuals.push_back(std::abs(change - first));
    }
    if (linearized) {
        report.pass = std::all_of(report.residuals.begin(), report.residuals.end(),
                                  [](double r) { return r <= kShiftDegenerate; });
        return report;
    }
    if (!report.skipped &&
        std::any_of(report.residuals.begin(), report.residuals.end(), [](double r) { return r < kShiftDegenerate; })) {
        report.skipped = true;
        report.skip_reason = "degenerate";
    }
    if (report.skipped) return report;
    for (std::size_t i = 0; i + 1 < report.residuals.size(); ++i)
        report.ratios.push_back(report.residuals[i] / report.residuals[i + 1]);
    report.pass = std::all_of(report.ratios.begin(), report.ratios.end(),
                              [](double r) { return r >= kShiftRatioLow && r <= kShiftRatioHigh; });
    return report;
}

ShiftSuiteReport check_first_order_suite(std::size_t nets, std::uint64_t seed, std::size_t min_evaluated) {
    constexpr std::array<double, 3> scales{1e-2, 5e-3, 2.5e-3};
    const std::array<std::size_t, 4> widths{8, 16, 16, 4};
    ShiftSuiteReport suite;
    suite.min_ratio = std::numeric_limits<double>::infinity();
    suite.max_ratio = -std::numeric_limits<double>::infinity();
    bool ratios_ok = true;
    for (std::size_t n = 0; n < nets; ++n) {
        const LayeredNet net = make_mlp(widths, false, derive_seed(seed, {n, 0}));
        Rng rng(derive_seed(seed, {n, 1}));
        std::uniform_int_distribution<std::size_t> label(0, widths.back() - 1);
        for (std::size_t h = 0; h < net.depth(); ++h) {
            const Tensor x = random_normal({widths.front()}, rng);
            Tensor d = random_normal({widths.front()}, rng);
            d = scale(d, 1.0 / frobenius_norm(d));
            const ShiftReport r = check_first_order_shift(net, x, label(rng), d, scales, h);
            ++suite.probes;
            if (r.skipped) {
                ++suite.skipped;
                continue;
            }
            ++suite.evaluated;
            for (double q : r.ratios) {
                suite.min_ratio = std::min(suite.min_ratio, q);
                suite.max_ratio = std::max(suite.max_ratio, q);
            }
            ratios_ok = ratios_ok && r.pass;
        }
    }
    if (suite.evaluated == 0) suite.min_ratio = suite.max_ratio = 0.0;
    suite.pass = ratios_ok && suite.evaluated >= min_evaluated && suite.skip_rate() < 0.5;
    return suite;
}

// --- constructed multiplier ------------------------------------------------------------

Theorem1Report check_theorem1_form(const LayeredNet& net, const Dataset& ds, const CorruptionSpec& g,
                                   std::uint64_t seed, const Normalizer& normalizer) {
    require_bias_free(net, "check_theorem1_form");
    if (ds.empty()) throw InputError("check_theorem1_form: empty dataset");
    const Tensor clean_in = normalizer.applied(ds.inputs);
    const Tensor shifted_in = normalizer.applied(corrupt_dataset(g, ds, seed).inputs);
    const ForwardTrace clean = forward(net, clean_in);
    const ForwardTrace moved = forward(net, shifted_in);
    const GradientSet grad = backward_batch(net, clean, ds.labels);

    Theorem1Report report;
    NoiseDraw multiplier{NoiseMode::multiplicative, zeros_like(net)};
    std::size_t entries = 0, masked = 0;
    for (std::size_t h = 0; h < net.depth(); ++h) {
        const Tensor& dz = grad.pre_activations[h];
        const Tensor num = matmul_tn(dz, subtract(moved.activation_at(h), clean.activation_at(h)));
        const Tensor den = matmul_tn(dz, clean.activation_at(h));
        Tensor& m = multiplier.values.weights[h];
        LayerXiStats stats;
        stats.entries = num.size();
        stats.min = std::numeric_limits<double>::infinity();
        stats.max = -std::numeric_limits<double>::infinity();
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < num.size(); ++i) {
            double xi = 0.0;
            if (std::abs(den[i]) < kXiMaskThreshold)
                ++stats.masked;
            else
                xi = num[i] / den[i];
            m[i] = 1.0 + xi;
            stats.min = std::min(stats.min, xi);
            stats.max = std::max(stats.max, xi);
            abs_sum += std::abs(xi);
        }
        stats.mean_abs = stats.entries ? abs_sum / static_cast<double>(stats.entries) : 0.0;
        entries += stats.entries;
        masked += stats.masked;
        report.layers.push_back(stats);
    }
    report.masked_fraction = entries ? static_cast<double>(masked) / static_cast<double>(entries) : 0.0;
    report.corrupted_loss = batch_loss(net, shifted_in, ds.labels);
    report.perturbed_loss = batch_loss(perturbed_copy(net, multiplier), clean_in, ds.labels);
    report.gap = report.corrupted_loss - report.perturbed_loss;
    double sq = 0.0;
    for (const auto& w : net.params().weights) sq += frobenius_inner(w, w);
    report.weight_norm_sq = sq;
    report.weight_norm = std::sqrt(sq);
    report.c_hat = sq > 0.0 ? 2.0 * std::max(0.0, report.gap) / sq : 0.0;
    report.finite = std::isfinite(report.gap) && std::isfinite(report.c_hat);
    for (const auto& l : report.layers)
        report.finite = report.finite && std::isfinite(l.min) && std::isfinite(l.max) && std::isfinite(l.mean_abs);
    return report;
}

// --- degenerate reductions ---------------------------------------------------------------

CheckReport check_reduces_to_sgd(const RunConfig& candidate, const RunConfig& sgd, const Dataset& train,
                                 std::size_t steps) {
    if (sgd.method != Method::sgd) throw InputError("check_reduces_to_sgd: reference config is not SGD");
    if (!same_run_settings(candidate, sgd))
        throw InputError("check_reduces_to_sgd: configs differ beyond method and perturbation");
    FitOptions options;
    options.max_steps = steps;
    const FitResult a = fit(candidate, train, Dataset{}, options);
    const FitResult b = fit(sgd, train, Dataset{}, options);
    const auto wa = a.net.params().flatten();
    const auto wb = b.net.params().flatten();
    double worst = 0.0;
    for (std::size_t i = 0; i < wa.size(); ++i) worst = std::max(worst, std::abs(wa[i] - wb[i]));
    const std::string name = "reduces_to_sgd:" + std::string(to_string(candidate.method));
    return {name, candidate.seed, worst, kReductionTolerance, worst <= kReductionTolerance};
}

// --- gradients -----------------------------------------------------------------------------

CheckReport check_gradients(const GradCheckSpec& spec, std::size_t cases, std::uint64_t seed,
                            const BackwardFn& backward_fn) {
    if (cases == 0) throw InputError("check_gradients: need at least one case");
    if (spec.min_layers == 0 || spec.min_layers > spec.max_layers || spec.max_width < 2)
        throw InputError("check_gradients: invalid net spec");
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        Rng rng(derive_seed(seed, {c}));
        std::uniform_int_distribution<std::size_t> depth_dist(spec.min_layers, spec.max_layers);
        std::uniform_int_distribution<std::size_t> width(1, spec.max_width), classes(2, spec.max_width);
        const std::size_t depth = depth_dist(rng);
        std::vector<std::size_t> widths{width(rng)};
        for (std::size_t h = 1; h < depth; ++h) widths.push_back(width(rng));
        widths.push_back(classes(rng));
        LayeredNet net = make_mlp(widths, spec.with_bias, derive_seed(seed, {c, 1}));
        std::normal_distribution<double> bias_noise(0.0, 0.1);
        for (auto& b : net.params().biases)
            if (b)
                for (auto& v : b->data()) v = bias_noise(rng);
        const Tensor x = random_normal({widths.front()}, rng);
        const std::size_t label = std::uniform_int_distribution<std::size_t>(0, widths.back() - 1)(rng);

        const GradientSet g = backward_fn(net, forward(net, x), label);
        std::vector<Activation> acts;
        for (std::size_t h = 0; h < net.depth(); ++h) acts.push_back(net.activation(h));

        ParamTensors p = net.params();
        std::vector<double> xv(x.data().begin(), x.data().end());
        auto central = [&](double& slot) {
            const double orig = slot;
            const double up = orig + kGradStep, down = orig - kGradStep;
            slot = up;
            const long double lu = loss_extended(p, acts, xv, label);
            slot = down;
            const long double ld = loss_extended(p, acts, xv, label);
            slot = orig;
            return static_cast<double>((lu - ld) / (static_cast<long double>(up) - static_cast<long double>(down)));
        };
        for (std::size_t h = 0; h < p.depth(); ++h) {
            Tensor& w = p.weights[h];
            for (std::size_t i = 0; i < w.size(); ++i)
                worst = std::max(worst, rel_error(central(w[i]), g.params.weights[h][i]));
            if (p.biases[h])
                for (std::size_t i = 0; i < p.biases[h]->size(); ++i)
                    worst = std::max(worst, rel_error(central((*p.biases[h])[i]), (*g.params.biases[h])[i]));
        }
        for (std::size_t i = 0; i < xv.size(); ++i) worst = std::max(worst, rel_error(central(xv[i]), g.input[i]));
    }
    return {"gradients", seed, worst, kGradTolerance, worst <= kGradTolerance};
}

GradientSet mutated_backward(const LayeredNet& net, const ForwardTrace& trace, std::size_t label) {
    GradientSet g = backward(net, trace, label);
    for (auto& v : g.params.weights.front().data()) v *= 1.01;
    return g;
}

// --- perturbation identities -----------------------------------------------------------------

CheckReport check_sam_norm(std::size_t cases, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> rho_dist(0.01, 2.0);
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        const ParamTensors g = random_layout(rng);
        const double rho = rho_dist(rng);
        const double n = sam_direction(g, rho).values.global_norm();
        worst = std::max(worst, std::abs(n - rho) / rho);
    }
    return {"sam_norm", seed, worst, 1e-12, worst <= 1e-12};
}

CheckReport check_asam_norm(std::size_t cases, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> rho_dist(0.01, 2.0);
    std::bernoulli_distribution zero(0.1);
    double worst = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
        ParamTensors w = random_layout(rng);
        ParamTensors g = w;
        g.for_each([&](Tensor& t) { t = random_normal(t.shape(), rng); });
        w.for_each([&](Tensor& t) {
            for (auto& v : t.data())
                if (zero(rng)) v = 0.0;
        });
        const double rho = rho_dist(rng);
        NoiseDraw xi;
        try {
            xi = asam_direction(w, g, rho);
        } catch (const DegenerateDirectionError&) {
            continue;
        }
        const auto wf = w.flatten();
        const auto xf = xi.values.flatten();
        double acc = 0.0;
        for (std::size_t i = 0; i < wf.size(); ++i)
            if (wf[i] != 0.0) acc += (xf[i] / std::abs(wf[i])) * (xf[i] / std::abs(wf[i]));
        worst = std::max(worst, std::abs(std::sqrt(acc) - rho) / rho);
    }
    return {"asam_norm", seed, worst, 1e-12, worst <= 1e-12};
}

MomentReport check_noise_moments(std::size_t draws, double sigma, std::uint64_t seed) {
    if (draws < 2) throw InputError("check_noise_moments: need at least two draws");
    ParamTensors layout;
    layout.weights.push_back(Tensor({draws}));
    layout.biases.emplace_back();
    const auto v = sample_mwp(layout, sigma, seed).values.flatten();
    MomentReport r;
    double sum = 0.0;
    for (double x : v) sum += x;
    r.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
    r.pass = std::abs(r.mean - 1.0) <= 1e-3 && std::abs(r.stddev - sigma) <= 0.01 * sigma;
    return r;
}

// --- suite ---------------------------------------------------------------------------------------

std::vector<CheckReport> run_verify_suite(std::uint64_t seed, std::ostream* jsonl, const VerifyOptions& options) {
    std::vector<CheckReport> out;
    auto emit = [&](CheckReport r) {
        if (jsonl) *jsonl << to_jsonl(r) << '\n';
        out.push_back(std::move(r));
    };
    auto sub = [&](std::uint64_t tag) { return derive_seed(seed, {stream::verify, tag}); };

    emit(check_mwp_random(1000, sub(0)));
    emit(check_gradients({}, 10, sub(1), options.mutate_backward ? BackwardFn(mutated_backward) : BackwardFn(backward)));

    const ShiftSuiteReport shift = check_first_order_suite(12, sub(2));
    emit({"first_order_shift_ratio", sub(2), std::max(std::abs(shift.min_ratio - 4.0), std::abs(shift.max_ratio - 4.0)),
          0.8, shift.pass});
    emit({"first_order_shift_skip_rate", sub(2), shift.skip_rate(), 0.5, shift.skip_rate() < 0.5});
    {
        const std::array<std::size_t, 4> widths{6, 5, 5, 3};
        std::vector<Layer> layers;
        for (const auto& l : make_mlp(widths, false, sub(3)).layers())
            layers.push_back(Layer{l.weight, std::nullopt, Activation::identity});
        const LayeredNet linear(std::move(layers));
        Rng rng(sub(3));
        const std::array<double, 3> scales{1e-2, 5e-3, 2.5e-3};
        double worst = 0.0;
        bool pass = true;
        for (std::size_t h = 0; h < linear.depth(); ++h) {
            const auto r = check_first_order_shift(linear, random_normal({6}, rng), h % 3, random_normal({6}, rng),
                                                   scales, h, true);
            for (double q : r.residuals) worst = std::max(worst, q);
            pass = pass && r.pass;
        }
        emit({"first_order_shift_linearized", sub(3), worst, kShiftDegenerate, pass});
    }

    {
        const Dataset data = synth_blobs(256, 4, 16, 0.1, sub(4));
        RunConfig sgd;
        sgd.hidden = {16};
        sgd.batch_size = 32;
        sgd.seed = sub(4);
        auto variant = [&](Method m, PerturbationSpec p, std::size_t sub_batches) {
            RunConfig c = sgd;
            c.method = m;
            c.perturbation = p;
            c.sub_batches = sub_batches;
            return c;
        };
        RunConfig sgd8 = sgd;
        sgd8.sub_batches = 8;
        sgd.sub_batches = 1;
        auto tagged = [](CheckReport r, const std::string& suffix) {
            r.check += suffix;
            return r;
        };
        emit(tagged(check_reduces_to_sgd(variant(Method::damp, PerturbationSpec::multiplicative(0.0), 1), sgd, data),
                    ":M1"));
        emit(tagged(check_reduces_to_sgd(variant(Method::damp, PerturbationSpec::multiplicative(0.0), 8), sgd8, data),
                    ":M8"));
        emit(tagged(check_reduces_to_sgd(variant(Method::daap, PerturbationSpec::additive(0.0), 8), sgd8, data), ":M8"));
        emit(check_reduces_to_sgd(variant(Method::sam, PerturbationSpec::sam(0.0), 1), sgd, data));
        emit(check_reduces_to_sgd(variant(Method::asam, PerturbationSpec::asam(0.0), 1), sgd, data));
    }

    emit(check_sam_norm(100, sub(5)));
    emit(check_asam_norm(100, sub(6)));
    {
        const MomentReport m = check_noise_moments(1'000'000, 0.2, sub(7));
        const double measured = std::max(std::abs(m.mean - 1.0) / 1e-3, std::abs(m.stddev - 0.2) / 2e-3);
        emit({"noise_moments", sub(7), measured, 1.0, m.pass});
    }
    {
        const Dataset data = synth_blobs(512, 4, 16, 0.1, sub(8));
        RunConfig cfg;
        cfg.hidden = {16};
        cfg.bias = false;
        cfg.batch_size = 32;
        cfg.epochs = 3;
        cfg.seed = sub(8);
        const FitResult trained = fit(cfg, data, Dataset{});
        const Theorem1Report t = check_theorem1_form(trained.net, data, {CorruptionKind::gaussian_noise, 1}, sub(8),
                                                     trained.normalizer);
        CheckReport r{"theorem1_masked_fraction", sub(8), t.masked_fraction, 0.05, t.finite && t.masked_fraction < 0.05};
        r.hard = false;
        emit(r);
        CheckReport c{"theorem1_c_hat", sub(8), t.c_hat, 0.0, t.finite};
        c.hard = false;
        emit(c);
    }
    return out;
}

bool all_hard_checks_pass(std::span<const CheckReport> reports) {
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return !r.hard || r.pass; });
}

}  // namespace ptrain
