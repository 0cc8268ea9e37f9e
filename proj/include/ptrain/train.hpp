#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ptrain/corrupt.hpp"
#include "ptrain/data.hpp"
#include "ptrain/network.hpp"
#include "ptrain/perturb.hpp"

namespace ptrain {

enum class Method { sgd, dropout, damp, daap, corruption_aug, sam, asam };

std::string_view to_string(Method method);
/// Case-insensitive: SGD, Dropout, DAMP, DAAP, CorruptionAug, SAM, ASAM.
Method parse_method(std::string_view name);

/// Learning-rate schedule over the fraction u = t / T of the run.
struct ScheduleSpec {
    enum class Kind { constant, warm_linear_cosine, piecewise_linear };

    Kind kind = Kind::constant;
    double lr = 0.1;                              // constant
    std::vector<std::pair<double, double>> knots; // piecewise: (u, lr), u increasing from 0
    double warmup_fraction = 0.0;                 // warm cosine
    double start_lr = 0.0;
    double peak_lr = 0.0;
    double final_lr = 0.0;

    static ScheduleSpec constant(double lr);
    static ScheduleSpec piecewise(std::vector<std::pair<double, double>> knots);
    static ScheduleSpec warm_linear_cosine(double warmup_fraction, double start_lr, double peak_lr,
                                           double final_lr);
    /// 0.1 for the first half, linear to 0.001 at 90% of the run, then flat.
    static ScheduleSpec cifar();
    /// 8e-4 -> 0.8 linearly over the first 5/90 of the run, cosine back to 8e-4.
    static ScheduleSpec imagenet();

    void validate() const;
};

/// Learning rate at step t of T, 0 <= t < T.
double lr_at(const ScheduleSpec& schedule, std::size_t t, std::size_t total);

struct OptimizerHyper {
    double momentum = 0.9;
    bool nesterov = true;
    double weight_decay = 5e-4;
};

struct OptimizerState {
    ParamTensors velocity;

    static OptimizerState zeros_for(const LayeredNet& net);
};

/// d = g + wd * w;  v = momentum * v + d;
/// w -= lr * (d + momentum * v) with Nesterov, w -= lr * v otherwise.
void sgd_step(LayeredNet& net, const ParamTensors& grad, OptimizerState& state, double lr,
              const OptimizerHyper& hyper);

struct StepStats {
    double loss = 0.0;               // mean loss at the point(s) the gradient was taken
    std::size_t sample_grad_evals = 0;
    std::size_t batch_size = 0;
    bool fell_back = false;          // SAM/ASAM direction was degenerate

    /// Gradient evaluations in units of one full pass over the batch.
    std::size_t grad_evals() const { return batch_size ? sample_grad_evals / batch_size : 0; }
};

/// Optimiser plumbing shared by every step function.
struct UpdateContext {
    OptimizerState& state;
    double lr;
    const OptimizerHyper& hyper;
};

/// Batches handed to the step functions below are already standardised,
/// except for corruption_aug_step which corrupts raw [0, 1] rows first.

StepStats sgd_batch_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                         UpdateContext update);

/// Splits the batch into M equal sub-batches, takes sub-batch m's gradient at
/// w * xi_m with xi_m ~ N(1, sigma^2) seeded by derive_seed(seed, {m}), averages
/// in m order, then updates the unperturbed weights.
StepStats damp_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                    double sigma, std::size_t sub_batches, std::uint64_t seed, UpdateContext update);
/// As damp_step with w + xi_m, xi_m ~ N(0, sigma^2).
StepStats daap_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                    double sigma, std::size_t sub_batches, std::uint64_t seed, UpdateContext update);
StepStats dropout_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels,
                       double p, std::uint64_t seed, UpdateContext update);
/// Corrupts a seeded uniformly chosen half of the raw batch, standardises, takes one gradient.
StepStats corruption_aug_step(LayeredNet& net, const Tensor& raw_inputs, std::span<const std::size_t> labels,
                              const CorruptionSpec& corruption, std::size_t channels,
                              const Normalizer& normalizer, std::uint64_t seed, UpdateContext update);
StepStats sam_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double rho,
                   UpdateContext update);
StepStats asam_step(LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels, double rho,
                    UpdateContext update);

namespace detail {

struct SubBatchResult {
    ParamTensors grad;
    double loss = 0.0;
};

/// Averaged gradient over M perturbed sub-batches. `parallel` only changes who
/// computes each sub-batch; the result is identical either way.
SubBatchResult perturbed_sub_batch_gradient(const LayeredNet& net, const Tensor& inputs,
                                            std::span<const std::size_t> labels, NoiseMode mode,
                                            double sigma, std::size_t sub_batches, std::uint64_t seed,
                                            bool parallel);

}  // namespace detail

struct RunConfig {
    Method method = Method::sgd;
    PerturbationSpec perturbation;
    CorruptionSpec train_corruption;
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    std::size_t sub_batches = 8;
    ScheduleSpec schedule = ScheduleSpec::cifar();
    OptimizerHyper optimizer;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {256, 256};
    bool bias = true;
    bool standardize = true;

    /// Throws InputError when B is not divisible by M, M == 0, decay < 0, or the
    /// perturbation does not fit the method.
    void validate() const;
};

/// One line of the training log CSV `epoch,step,lr,train_loss,val_error,grad_evals`.
struct EpochLog {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_error = 0.0;
    std::size_t grad_evals = 0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const EpochLog& row);

/// Owns the net and optimiser state of one run and dispatches steps by method.
/// Step t uses learning rate lr_at(schedule, t, total_steps) and seed
/// derive_seed(config.seed, {stream::step, t}).
class Trainer {
public:
    Trainer(RunConfig config, LayeredNet net, Normalizer normalizer, std::size_t total_steps,
            std::size_t channels = 1);

    /// One optimisation step on a raw [0, 1] batch.
    StepStats step(const Tensor& raw_inputs, std::span<const std::size_t> labels);

    const LayeredNet& net() const { return net_; }
    const Normalizer& normalizer() const { return normalizer_; }
    std::size_t steps_taken() const { return step_; }
    double current_lr() const;
    std::size_t fallbacks() const { return fallbacks_; }

private:
    RunConfig config_;
    LayeredNet net_;
    Normalizer normalizer_;
    OptimizerState state_;
    std::size_t total_steps_;
    std::size_t channels_;
    std::size_t step_ = 0;
    std::size_t fallbacks_ = 0;
};

struct FitOptions {
    /// Stop after this many steps (the schedule then spans exactly these steps).
    std::optional<std::size_t> max_steps;
    /// Receives the CSV log, header first, one row per epoch.
    std::ostream* log = nullptr;
};

struct FitResult {
    LayeredNet net;
    Normalizer normalizer;
    std::vector<EpochLog> log;
    std::size_t steps = 0;
    std::size_t fallbacks = 0;
};

/// Initialises a net from the config seed and trains it. Each epoch visits a
/// seeded permutation of the training set in batches of B; a trailing partial
/// batch is dropped.
FitResult fit(const RunConfig& config, const Dataset& train, const Dataset& val, const FitOptions& options = {});

/// Initial net for a run: widths {train dim, hidden..., classes}.
LayeredNet initial_net(const RunConfig& config, std::size_t input_dim, std::size_t classes);

}  // namespace ptrain
