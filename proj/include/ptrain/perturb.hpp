#pragma once

#include <cstdint>

#include "ptrain/network.hpp"
#include "ptrain/params.hpp"

namespace ptrain {

enum class PerturbationKind {
    none,
    multiplicative_gaussian,
    additive_gaussian,
    sam,
    asam,
    bernoulli_dropout,
};

/// Which weight perturbation a training method applies. Only the field of the
/// active kind is read: sigma for the Gaussian kinds, rho for SAM/ASAM, p for dropout.
struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::none;
    double sigma = 0.0;
    double rho = 0.0;
    double p = 0.0;

    static PerturbationSpec none() { return {}; }
    static PerturbationSpec multiplicative(double sigma);
    static PerturbationSpec additive(double sigma);
    static PerturbationSpec sam(double rho);
    static PerturbationSpec asam(double rho);
    static PerturbationSpec dropout(double p);

    /// Throws InputError on a negative sigma/rho or p outside [0, 1).
    void validate() const;
};

/// Zero-filled tensors mirroring the net's weights and biases.
ParamTensors zeros_like(const LayeredNet& net);
ParamTensors zeros_like(const ParamTensors& layout);

/// i.i.d. N(1, sigma^2) per parameter; multiplicative.
NoiseDraw sample_mwp(const ParamTensors& layout, double sigma, std::uint64_t seed);
/// i.i.d. N(0, sigma^2) per parameter; additive.
NoiseDraw sample_awp(const ParamTensors& layout, double sigma, std::uint64_t seed);
/// One keep/drop draw per output unit of each layer, shared by that unit's
/// incoming weights and its bias. Kept units are scaled by 1/(1-p).
NoiseDraw sample_dropout_mask(const ParamTensors& layout, double p, std::uint64_t seed);

/// rho * g / ||g||, norm taken over all parameters jointly; additive.
/// Throws DegenerateDirectionError when g vanishes.
NoiseDraw sam_direction(const ParamTensors& grads, double rho);

/// rho * (w*w*g) / ||w*g||, the maximiser of the linearised loss over
/// multiplicative perturbations w*xi with ||xi|| <= rho; additive.
/// Throws DegenerateDirectionError when w*g vanishes.
NoiseDraw asam_direction(const ParamTensors& weights, const ParamTensors& grads, double rho);

}  // namespace ptrain
