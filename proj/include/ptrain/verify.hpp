#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ptrain/corrupt.hpp"
#include "ptrain/data.hpp"
#include "ptrain/network.hpp"
#include "ptrain/train.hpp"

namespace ptrain {

/// One line of the verification report. Diagnostic checks (hard == false)
/// never fail the suite.
struct CheckReport {
    std::string check;
    std::uint64_t seed = 0;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool hard = true;
};

/// `{"check":..,"seed":..,"measured":..,"threshold":..,"pass":..}`
std::string to_jsonl(const CheckReport& report);

// --- weight-space equivalence of an input shift ---------------------------------

struct MwpReport {
    double lhs = 0.0;            // w . (x + eps)
    double rhs = 0.0;            // (w * (1 + eps / x)) . x
    double relative_diff = 0.0;
    bool pass = false;
};

inline constexpr double kMwpTolerance = 1e-9;
inline constexpr double kMwpMinAbsInput = 1e-6;

/// Relative difference against max(|lhs|, |rhs|, sum_i |w_i| (|x_i| + |eps_i|)).
/// Throws PreconditionError when some |x_i| < 1e-6.
MwpReport check_mwp_equivalence(const Tensor& w, const Tensor& x, const Tensor& eps);
/// `cases` seeded triples with |x_i| >= 0.1; measured is the largest relative difference.
CheckReport check_mwp_random(std::size_t cases, std::uint64_t seed);

// --- leading term of the loss change under an input shift ----------------------

struct ShiftReport {
    std::vector<double> residuals;   // r(t) per scale
    std::vector<double> ratios;      // r(t) / r(t/2) for consecutive scales
    bool skipped = false;
    std::string skip_reason;         // "activation_pattern" or "degenerate"
    bool pass = false;
};

inline constexpr double kShiftRatioLow = 3.2;
inline constexpr double kShiftRatioHigh = 4.8;
inline constexpr double kShiftDegenerate = 1e-14;

/// Shifts x by t * direction and compares the change of the loss with
/// <grad_z(h+1) loss (x) delta f(h), W(h+1)>_F, f(0) being the input, for
/// h in [0, depth). With `linearized` the loss is replaced by its linearisation
/// in z(h+1), for which the first-order term is exact.
/// Scales must be strictly decreasing and positive; the net must be bias-free.
ShiftReport check_first_order_shift(const LayeredNet& net, const Tensor& x, std::size_t label,
                                    const Tensor& direction, std::span<const double> scales, std::size_t h,
                                    bool linearized = false);

struct ShiftSuiteReport {
    std::size_t probes = 0;
    std::size_t skipped = 0;
    std::size_t evaluated = 0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool pass = false;

    double skip_rate() const { return probes ? static_cast<double>(skipped) / static_cast<double>(probes) : 0.0; }
};

/// Random bias-free 3-layer ReLU nets probed at every layer with scales
/// {1e-2, 5e-3, 2.5e-3}. Passes when at least `min_evaluated` probes were
/// evaluated, every ratio is within bounds and the skip rate is below 1/2.
ShiftSuiteReport check_first_order_suite(std::size_t nets, std::uint64_t seed, std::size_t min_evaluated = 20);

// --- constructed multiplicative perturbation for a corruption ------------------

struct LayerXiStats {
    std::size_t entries = 0;
    std::size_t masked = 0;
    double min = 0.0;
    double max = 0.0;
    double mean_abs = 0.0;
};

struct Theorem1Report {
    std::vector<LayerXiStats> layers;
    double masked_fraction = 0.0;
    double corrupted_loss = 0.0;     // L(w; g(S))
    double perturbed_loss = 0.0;     // L(w * (1 + xi(g)); S)
    double gap = 0.0;                // corrupted_loss - perturbed_loss
    double weight_norm = 0.0;        // ||w||_F over all weight matrices
    double weight_norm_sq = 0.0;
    double c_hat = 0.0;              // 2 max(0, gap) / ||w||_F^2
    bool finite = false;
};

inline constexpr double kXiMaskThreshold = 1e-8;

/// xi(h) = (sum_k grad_z(h) l_k (x) delta_g f_k(h-1)) / (sum_k grad_z(h) l_k (x) f_k(h-1))
/// entrywise, with entries whose denominator is below 1e-8 in magnitude set to 0
/// and counted as masked. The net must be bias-free. The corruption acts on the
/// raw [0, 1] samples; both sets are then standardised by `normalizer`.
Theorem1Report check_theorem1_form(const LayeredNet& net, const Dataset& ds, const CorruptionSpec& g,
                                   std::uint64_t seed, const Normalizer& normalizer = Normalizer::identity());

// --- degenerate training reductions ---------------------------------------------

/// Trains `candidate` and `sgd` for `steps` steps on `train` from the same seed
/// and reports the largest per-coordinate weight difference (pass <= 1e-12).
/// The configs must agree in everything but method and perturbation, and `sgd`
/// must use plain SGD; otherwise InputError.
CheckReport check_reduces_to_sgd(const RunConfig& candidate, const RunConfig& sgd, const Dataset& train,
                                 std::size_t steps = 100);
inline CheckReport check_damp_reduces_to_sgd(const RunConfig& damp, const RunConfig& sgd, const Dataset& train,
                                             std::size_t steps = 100) {
    return check_reduces_to_sgd(damp, sgd, train, steps);
}

inline constexpr double kReductionTolerance = 1e-12;

// --- gradients ------------------------------------------------------------------

using BackwardFn = std::function<GradientSet(const LayeredNet&, const ForwardTrace&, std::size_t)>;

struct GradCheckSpec {
    std::size_t min_layers = 2;
    std::size_t max_layers = 4;
    std::size_t max_width = 16;
    bool with_bias = true;
};

inline constexpr double kGradStep = 1e-6;
inline constexpr double kGradTolerance = 1e-5;

/// Central differences of the loss (evaluated in extended precision) against
/// `backward_fn` for every weight, bias and input coordinate of `cases` random
/// nets and samples. measured = max |a - b| / max(|a|, |b|, 1e-8).
CheckReport check_gradients(const GradCheckSpec& spec, std::size_t cases, std::uint64_t seed,
                            const BackwardFn& backward_fn = backward);

// --- perturbation identities ------------------------------------------------------

/// max over random cases of | ||sam_direction|| - rho | / rho.
CheckReport check_sam_norm(std::size_t cases, std::uint64_t seed);
/// max over random cases of | ||xi / |w| || - rho | / rho, over nonzero weights.
CheckReport check_asam_norm(std::size_t cases, std::uint64_t seed);
/// Sample mean and std of `draws` multiplicative noise values; measured is the
/// larger of |mean - 1| / 0.001 and |std - sigma| / (0.01 sigma), pass when <= 1.
struct MomentReport {
    double mean = 0.0;
    double stddev = 0.0;
    bool pass = false;
};
MomentReport check_noise_moments(std::size_t draws, double sigma, std::uint64_t seed);

// --- suite -----------------------------------------------------------------------

struct VerifyOptions {
    /// Replaces backward with a deliberately wrong one in the gradient check.
    bool mutate_backward = false;
};

/// Runs every check under one root seed. Each report is also written to `jsonl`
/// when given. Deterministic for a fixed seed.
std::vector<CheckReport> run_verify_suite(std::uint64_t seed, std::ostream* jsonl = nullptr,
                                          const VerifyOptions& options = {});
bool all_hard_checks_pass(std::span<const CheckReport> reports);

/// A backward pass with the first weight gradient scaled by 1.01, for negative controls.
GradientSet mutated_backward(const LayeredNet& net, const ForwardTrace& trace, std::size_t label);

}  // namespace ptrain
