#include "ptrain/train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "ptrain/errors.hpp"
#include "ptrain/metrics.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

std::string_view to_string(Method method) {
    switch (method) {
        case Method::sgd: return "SGD";
        case Method::dropout: return "Dropout";
        case Method::damp: return "DAMP";
        case Method::daap: return "DAAP";
        case Method::corruption_aug: return "CorruptionAug";
        case Method::sam: return "SAM";
        case Method::asam: return "ASAM";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    auto lower = [](std::string_view s) {
        std::string out(s);
        for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return out;
    };
    const std::string key = lower(name);
    for (Method m : {Method::sgd, Method::dropout, Method::damp, Method::daap, Method::corruption_aug,
                     Method::sam, Method::asam})
        if (lower(to_string(m)) == key) return m;
    throw InputError("unknown method '" + std::string(name) + "'");
}

// --- schedules --------------------------------------------------------------

ScheduleSpec ScheduleSpec::constant(double lr) {
    ScheduleSpec s;
    s.kind = Kind::constant;
    s.lr = lr;
    return s;
}

ScheduleSpec ScheduleSpec::piecewise(std::vector<std::pair<double, double>> knots) {
    ScheduleSpec s;
    s.kind = Kind::piecewise_linear;
    s.knots = std::move(knots);
    s.validate();
    return s;
}

ScheduleSpec ScheduleSpec::warm_linear_cosine(double warmup_fraction, double start_lr, double peak_lr,
                                              double final_lr) {
    ScheduleSpec s;
    s.kind = Kind::warm_linear_cosine;
    s.warmup_fraction = warmup_fraction;
    s.start_lr = start_lr;
    s.peak_lr = peak_lr;
    s.final_lr = final_lr;
    s.validate();
    return s;
}

ScheduleSpec ScheduleSpec::cifar() { return piecewise({{0.0, 0.1}, {0.5, 0.1}, {0.9, 0.001}, {1.0, 0.001}}); }

ScheduleSpec ScheduleSpec::imagenet() { return warm_linear_cosine(5.0 / 90.0, 8e-4, 0.8, 8e-4); }

void ScheduleSpec::validate() const {
    switch (kind) {
        case Kind::constant:
            if (!(lr >= 0.0)) throw InputError("schedule: learning rate must be >= 0");
            break;
        case Kind::piecewise_linear:
            if (knots.empty() || knots.front().first != 0.0)
                throw InputError("schedule: piecewise knots must start at position 0");
            for (std::size_t i = 0; i < knots.size(); ++i) {
                if (!(knots[i].second >= 0.0)) throw InputError("schedule: learning rate must be >= 0");
                if (i > 0 && !(knots[i].first > knots[i - 1].first))
                    throw InputError("schedule: knot positions must increase");
            }
            break;
        case Kind::warm_linear_cosine:
            if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
                throw InputError("schedule: warmup fraction must be in [0, 1)");
            if (!(start_lr >= 0.0 && peak_lr >= 0.0 && final_lr >= 0.0))
                throw InputError("schedule: learning rates must be >= 0");
            break;
    }
}

double lr_at(const ScheduleSpec& schedule, std::size_t t, std::size_t total) {
    if (t >= total)
        throw InputError("lr_at: step " + std::to_string(t) + " outside [0, " + std::to_string(total) + ")");
    const double u = static_cast<double>(t) / static_cast<double>(total);
    switch (schedule.kind) {
        case ScheduleSpec::Kind::constant:
            return schedule.lr;
        case ScheduleSpec::Kind::piecewise_linear: {
            const auto& k = schedule.knots;
            for (std::size_t i = 1; i < k.size(); ++i) {
                if (u <= k[i].first) {
                    const double w = (u - k[i - 1].first) / (k[i].first - k[i - 1].first);
                    return k[i - 1].second + w * (k[i].second - k[i - 1].second);
                }
            }
            return k.back().second;
        }
        case ScheduleSpec::Kind::warm_linear_cosine: {
            if (u < schedule.warmup_fraction)
                return schedule.start_lr +
                       (schedule.peak_lr - schedule.start_lr) * (u / schedule.warmup_fraction);
            const double v = (u - schedule.warmup_fraction) / (1.0 - schedule.warmup_fraction);
            return schedule.final_lr +
                   (schedule.peak_lr - schedule.final_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * v));
        }
    }
    return 0.0;
}

// --- optimiser ----------------------------------------------------------------

OptimizerState OptimizerState::zeros_for(const LayeredNet& net) { return {zeros_like(net)}; }

void sgd_step(LayeredNet& net, const ParamTensors& grad, OptimizerState& state, double lr,
              const OptimizerHyper& hyper) {
    ParamTensors& params = net.params();
    if (!grad.same_layout(params)) throw DimensionError("sgd_step: gradient layout does not match the net");
    if (state.velocity.depth() == 0) state.velocity = zeros_like(params);
    if (!state.velocity.same_layout(params)) throw DimensionError("sgd_step: velocity layout does not match the net");

    const double beta = hyper.momentum, decay = hyper.weight_decay;
    auto update = [&](Tensor& w, const Tensor& g, Tensor& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double d = g[i] + decay * w[i];
            v[i] = beta * v[i] + d;
            w[i] -= hyper.nesterov ? lr * (d + beta * v[i]) : lr * v[i];
        }
        require_finite(w, "sgd_step");
    };
    for (std::size_t h = 0; h < params.depth(); ++h) {
        update(params.weights[h], grad.weights[h], state.velocity.weights[h]);
        if (params.biases[h]) update(*params.biases[h], *grad.biases[h], *state.velocity.biases[h]);
    }
}

// --- steps ----------------------------------------------------------------------

namespace {

void require_batch(const Tensor& inputs, std::span<const std::size_t> labels) {
    if (inputs.rank() != 2 || inputs.rows() != labels.size())
        throw InputError("step: batch inputs and labels disagree");
    if (labels.empty()) throw InputError("step: empty batch");
}

Tensor rows_slice(const Tensor& inputs, std::size_t begin, std::size_t count) {
    const std::size_t d = inputs.cols();
    auto src = inputs.data().subspan(begin * d, count * d);
    return Tensor({count, d}, std::vector<double>(src.begin(), src.end()));
}

StepStats perturbed_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                         NoiseMode mode, double sigma, std::size_t sub_batches, std::uint64_t seed,
                         UpdateContext update) {
    require_batch(inputs, labels);
    auto result = detail::perturbed_sub_batch_gradient(net, inputs, labels, mode, sigma, sub_batches, seed,
                                                       /*parallel=*/true);
    sgd_step(net, result.grad, update.state, update.lr, update.hyper);
    return {result.loss, labels.size(), labels.size(), false};
}

enum class Sharpness { sam, asam };

StepStats sharpness_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double rho,
                         Sharpness which, UpdateContext update) {
    require_batch(inputs, labels);
    if (!(rho >= 0.0)) throw InputError("rho must be >= 0");
    LossAndGrad first = batch_loss_and_grad(net, inputs, labels);
    NoiseDraw direction;
    try {
        direction = which == Sharpness::sam ? sam_direction(first.grad.params, rho)
                                            : asam_direction(net.params(), first.grad.params, rho);
    } catch (const DegenerateDirectionError&) {
        sgd_step(net, first.grad.params, update.state, update.lr, update.hyper);
        return {first.loss, labels.size(), labels.size(), true};
    }
    LossAndGrad second = batch_loss_and_grad(perturbed_copy(net, direction), inputs, labels);
    sgd_step(net, second.grad.params, update.state, update.lr, update.hyper);
    return {first.loss, 2 * labels.size(), labels.size(), false};
}

}  // namespace

namespace detail {

SubBatchResult perturbed_sub_batch_gradient(const LayeredNet& net, const Tensor& inputs,
                                            std::span<const std::size_t> labels, NoiseMode mode,
                                            double sigma, std::size_t sub_batches, std::uint64_t seed,
                                            bool parallel) {
    if (sub_batches == 0) throw InputError("sub-batch count must be >= 1");
    if (labels.size() % sub_batches != 0)
        throw InputError("batch of " + std::to_string(labels.size()) + " is not divisible into " +
                         std::to_string(sub_batches) + " sub-batches");
    if (!(sigma >= 0.0)) throw InputError("sigma must be >= 0");
    const std::size_t per = labels.size() / sub_batches;
    std::vector<LossAndGrad> parts(sub_batches);
    std::vector<std::exception_ptr> errors(sub_batches);

    const auto count = static_cast<std::ptrdiff_t>(sub_batches);
#pragma omp parallel for schedule(static) if (parallel && sub_batches > 1)
    for (std::ptrdiff_t mi = 0; mi < count; ++mi) {
        const auto m = static_cast<std::size_t>(mi);
        try {
            const std::uint64_t sub_seed = derive_seed(seed, {m});
            const NoiseDraw noise = mode == NoiseMode::multiplicative ? sample_mwp(net.params(), sigma, sub_seed)
                                                                      : sample_awp(net.params(), sigma, sub_seed);
            parts[m] = batch_loss_and_grad(perturbed_copy(net, noise), rows_slice(inputs, m * per, per),
                                           labels.subspan(m * per, per));
        } catch (...) {
            errors[m] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    SubBatchResult out{std::move(parts[0].grad.params), parts[0].loss};
    for (std::size_t m = 1; m < sub_batches; ++m) {
        ParamTensors& acc = out.grad;
        const ParamTensors& g = parts[m].grad.params;
        for (std::size_t h = 0; h < acc.depth(); ++h) {
            for (std::size_t i = 0; i < acc.weights[h].size(); ++i) acc.weights[h][i] += g.weights[h][i];
            if (acc.biases[h])
                for (std::size_t i = 0; i < acc.biases[h]->size(); ++i) (*acc.biases[h])[i] += (*g.biases[h])[i];
        }
        out.loss += parts[m].loss;
    }
    const double inv = 1.0 / static_cast<double>(sub_batches);
    out.grad.for_each([&](Tensor& t) {
        for (auto& v : t.data()) v *= inv;
    });
    out.loss *= inv;
    return out;
}

}  // namespace detail

StepStats sgd_batch_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                         UpdateContext update) {
    require_batch(inputs, labels);
    LossAndGrad lg = batch_loss_and_grad(net, inputs, labels);
    sgd_step(net, lg.grad.params, update.state, update.lr, update.hyper);
    return {lg.loss, labels.size(), labels.size(), false};
}

StepStats damp_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double sigma,
                    std::size_t sub_batches, std::uint64_t seed, UpdateContext update) {
    return perturbed_step(net, inputs, labels, NoiseMode::multiplicative, sigma, sub_batches, seed, update);
}

StepStats daap_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double sigma,
                    std::size_t sub_batches, std::uint64_t seed, UpdateContext update) {
    return perturbed_step(net, inputs, labels, NoiseMode::additive, sigma, sub_batches, seed, update);
}

StepStats dropout_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double p,
                       std::uint64_t seed, UpdateContext update) {
    require_batch(inputs, labels);
    const NoiseDraw mask = sample_dropout_mask(net.params(), p, derive_seed(seed, {0}));
    LossAndGrad lg = batch_loss_and_grad(perturbed_copy(net, mask), inputs, labels);
    sgd_step(net, lg.grad.params, update.state, update.lr, update.hyper);
    return {lg.loss, labels.size(), labels.size(), false};
}

StepStats corruption_aug_step(LayeredNet& net, const Tensor& raw_inputs, std::span<const std::size_t> labels,
                              const CorruptionSpec& corruption, std::size_t channels,
                              const Normalizer& normalizer, std::uint64_t seed, UpdateContext update) {
    require_batch(raw_inputs, labels);
    if (labels.size() % 2 != 0)
        throw InputError("corruption_aug_step: batch size " + std::to_string(labels.size()) + " is odd");
    Tensor batch = raw_inputs;
    if (corruption.kind != CorruptionKind::none) {
        std::vector<std::size_t> order(labels.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, {0}));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < labels.size() / 2; ++i) {
            const std::size_t row = order[i];
            const Tensor g = apply(corruption, row_as_vector(raw_inputs, row), derive_seed(seed, {1, row}), channels);
            std::copy(g.data().begin(), g.data().end(), batch.row(row).begin());
        }
    }
    normalizer.apply(batch);
    return sgd_batch_step(net, batch, labels, update);
}

StepStats sam_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double rho,
                   UpdateContext update) {
    return sharpness_step(net, inputs, labels, rho, Sharpness::sam, update);
}

StepStats asam_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double rho,
                    UpdateContext update) {
    return sharpness_step(net, inputs, labels, rho, Sharpness::asam, update);
}

// --- run configuration ------------------------------------------------------------

void RunConfig::validate() const {
    if (batch_size == 0) throw InputError("batch size must be >= 1");
    if (sub_batches == 0) throw InputError("sub-batch count must be >= 1");
    if ((method == Method::damp || method == Method::daap) && batch_size % sub_batches != 0)
        throw InputError("batch size " + std::to_string(batch_size) + " is not divisible by " +
                         std::to_string(sub_batches) + " sub-batches");
    if (method == Method::corruption_aug && batch_size % 2 != 0)
        throw InputError("corruption-augmented training needs an even batch size");
    if (!(optimizer.weight_decay >= 0.0)) throw InputError("weight decay must be >= 0");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw InputError("momentum must be in [0, 1)");
    perturbation.validate();
    schedule.validate();
    auto expect = [&](PerturbationKind kind) {
        if (perturbation.kind != kind)
            throw InputError(std::string("method ") + std::string(to_string(method)) +
                             " does not match its perturbation spec");
    };
    switch (method) {
        case Method::sgd:
        case Method::corruption_aug: expect(PerturbationKind::none); break;
        case Method::dropout: expect(PerturbationKind::bernoulli_dropout); break;
        case Method::damp: expect(PerturbationKind::multiplicative_gaussian); break;
        case Method::daap: expect(PerturbationKind::additive_gaussian); break;
        case Method::sam: expect(PerturbationKind::sam); break;
        case Method::asam: expect(PerturbationKind::asam); break;
    }
    if (method == Method::corruption_aug) train_corruption.validate();
}

void write_log_header(std::ostream& out) { out << "epoch,step,lr,train_loss,val_error,grad_evals\n"; }

void write_log_row(std::ostream& out, const EpochLog& row) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.6g,%.6f,%.6f,%zu\n", row.epoch, row.step, row.lr, row.train_loss,
                  row.val_error, row.grad_evals);
    out << buf;
}

// --- trainer ------------------------------------------------------------------------

Trainer::Trainer(RunConfig config, LayeredNet net, Normalizer normalizer, std::size_t total_steps,
                 std::size_t channels)
    : config_(std::move(config)),
      net_(std::move(net)),
      normalizer_(std::move(normalizer)),
      state_(OptimizerState::zeros_for(net_)),
      total_steps_(total_steps),
      channels_(channels) {
    config_.validate();
}

double Trainer::current_lr() const { return lr_at(config_.schedule, step_, total_steps_); }

StepStats Trainer::step(const Tensor& raw_inputs, std::span<const std::size_t> labels) {
    const double lr = current_lr();
    const std::uint64_t seed = derive_seed(config_.seed, {stream::step, step_});
    UpdateContext update{state_, lr, config_.optimizer};
    const auto& p = config_.perturbation;
    StepStats stats;
    if (config_.method == Method::corruption_aug) {
        stats = corruption_aug_step(net_, raw_inputs, labels, config_.train_corruption, channels_, normalizer_,
                                    seed, update);
    } else {
        const Tensor inputs = normalizer_.applied(raw_inputs);
        switch (config_.method) {
            case Method::sgd: stats = sgd_batch_step(net_, inputs, labels, update); break;
            case Method::dropout: stats = dropout_step(net_, inputs, labels, p.p, seed, update); break;
            case Method::damp:
                stats = damp_step(net_, inputs, labels, p.sigma, config_.sub_batches, seed, update);
                break;
            case Method::daap:
                stats = daap_step(net_, inputs, labels, p.sigma, config_.sub_batches, seed, update);
                break;
            case Method::sam: stats = sam_step(net_, inputs, labels, p.rho, update); break;
            case Method::asam: stats = asam_step(net_, inputs, labels, p.rho, update); break;
            case Method::corruption_aug: break;
        }
    }
    if (stats.fell_back) ++fallbacks_;
    ++step_;
    return stats;
}

LayeredNet initial_net(const RunConfig& config, std::size_t input_dim, std::size_t classes) {
    std::vector<std::size_t> widths{input_dim};
    widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
    widths.push_back(classes);
    return make_mlp(widths, config.bias, derive_seed(config.seed, {stream::init}));
}

FitResult fit(const RunConfig& config, const Dataset& train, const Dataset& val, const FitOptions& options) {
    config.validate();
    if (train.empty()) throw InputError("fit: empty training set");
    FitResult result;
    result.normalizer = config.standardize ? Normalizer::fit(train) : Normalizer::identity();
    LayeredNet net = initial_net(config, train.dim(), train.num_classes);

    const std::size_t per_epoch = train.size() / config.batch_size;
    const std::size_t total = options.max_steps ? *options.max_steps : config.epochs * per_epoch;
    if (per_epoch == 0 && (options.max_steps ? total > 0 : config.epochs > 0))
        throw InputError("fit: batch size " + std::to_string(config.batch_size) + " exceeds the training set");
    if (options.log) write_log_header(*options.log);
    if (total == 0) {
        result.net = std::move(net);
        return result;
    }

    Trainer trainer(config, std::move(net), result.normalizer, total, std::max<std::size_t>(train.channels, 1));
    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 0; trainer.steps_taken() < total; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(config.seed, {stream::shuffle, epoch}));
        std::shuffle(order.begin(), order.end(), rng);

        EpochLog row;
        row.epoch = epoch + 1;
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < per_epoch && trainer.steps_taken() < total; ++b) {
            std::span<const std::size_t> idx(order.data() + b * config.batch_size, config.batch_size);
            const Dataset batch = train.subset(idx);
            row.lr = trainer.current_lr();
            const StepStats stats = trainer.step(batch.inputs, batch.labels);
            loss_sum += stats.loss;
            row.grad_evals += stats.grad_evals();
            ++batches;
        }
        row.step = trainer.steps_taken();
        row.train_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
        row.val_error = val.empty() ? 0.0 : predictive_error(trainer.net(), val, result.normalizer);
        if (options.log) write_log_row(*options.log, row);
        result.log.push_back(row);
    }
    result.steps = trainer.steps_taken();
    result.fallbacks = trainer.fallbacks();
    result.net = trainer.net();
    return result;
}

}  // namespace ptrain
