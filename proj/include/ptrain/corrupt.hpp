#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "ptrain/data.hpp"
#include "ptrain/network.hpp"
#include "ptrain/tensor.hpp"

namespace ptrain {

enum class CorruptionKind {
    none,
    gaussian_noise,
    shot_noise,
    impulse_noise,
    brightness,
    contrast,
    pixelate,
    gaussian_blur,
};

/// The seven implemented corruptions, in reporting order.
inline constexpr std::array<CorruptionKind, 7> kAllCorruptions{
    CorruptionKind::gaussian_noise, CorruptionKind::shot_noise, CorruptionKind::impulse_noise,
    CorruptionKind::brightness,     CorruptionKind::contrast,   CorruptionKind::pixelate,
    CorruptionKind::gaussian_blur,
};

std::string_view to_string(CorruptionKind kind);
/// Accepts the snake_case names produced by to_string; throws InputError otherwise.
CorruptionKind parse_corruption_kind(std::string_view name);

/// Whether the corruption draws random numbers.
bool is_stochastic(CorruptionKind kind);
/// Whether the corruption needs the 2-D pixel grid.
bool is_spatial(CorruptionKind kind);

/// Severity table value for (kind, severity in 1..5):
///   gaussian_noise  noise std          0.04 0.08 0.18 0.26 0.38
///   shot_noise      photon scale       60   25   12   5    3
///   impulse_noise   replaced fraction  0.01 0.02 0.05 0.08 0.14
///   brightness      additive shift     0.05 0.1  0.15 0.2  0.3
///   contrast        contrast factor    0.75 0.6  0.45 0.3  0.15
///   pixelate        block size (px)    2    3    4    5    7
///   gaussian_blur   kernel std (px)    0.5  0.75 1.0  1.5  2.0
/// Shot scale and contrast factor decrease as the corruption gets stronger.
double severity_parameter(CorruptionKind kind, int severity);

struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::none;
    int severity = 1;

    double parameter() const { return severity_parameter(kind, severity); }
    void validate() const;
};

/// g(x) before clipping to [0, 1]. `channels` equal planes of side x side pixels
/// are assumed for the spatial kinds.
Tensor apply_unclipped(const CorruptionSpec& spec, const Tensor& x, std::uint64_t seed,
                       std::size_t channels = 1);
/// g(x) clipped to [0, 1]. A pure function of (spec, x, seed).
Tensor apply(const CorruptionSpec& spec, const Tensor& x, std::uint64_t seed, std::size_t channels = 1);

/// Corrupts every row of a dataset; row i uses seed derive_seed(seed, {i}).
Dataset corrupt_dataset(const CorruptionSpec& spec, const Dataset& ds, std::uint64_t seed);

/// max ||g(x) - x|| over the dataset (and over 10 draws per sample for stochastic kinds).
double estimate_bound(const CorruptionSpec& spec, const Dataset& ds, std::uint64_t seed);

/// x + epsilon * sign(d loss / d x), clipped to [0, 1]. When the net consumes
/// standardised inputs pass the normaliser; its positive per-channel scaling
/// leaves the gradient sign unchanged.
Tensor fgsm(const LayeredNet& net, const Tensor& x, std::size_t label, double epsilon,
            const Normalizer& normalizer = Normalizer::identity());

}  // namespace ptrain
