#include "ptrain/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

namespace {

constexpr std::array<double, 5> kGaussianSigma{0.04, 0.08, 0.18, 0.26, 0.38};
constexpr std::array<double, 5> kShotScale{60, 25, 12, 5, 3};
constexpr std::array<double, 5> kImpulseFraction{0.01, 0.02, 0.05, 0.08, 0.14};
constexpr std::array<double, 5> kBrightness{0.05, 0.1, 0.15, 0.2, 0.3};
constexpr std::array<double, 5> kContrast{0.75, 0.6, 0.45, 0.3, 0.15};
constexpr std::array<double, 5> kPixelateBlock{2, 3, 4, 5, 7};
constexpr std::array<double, 5> kBlurSigma{0.5, 0.75, 1.0, 1.5, 2.0};

constexpr int kBoundDraws = 10;

std::size_t grid_side(const Tensor& x, std::size_t channels) {
    if (channels == 0 || x.size() % channels != 0)
        throw InputError("corruption: sample width not divisible by channel count");
    const std::size_t plane = x.size() / channels;
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(plane))));
    if (side * side != plane)
        throw InputError("corruption: " + std::to_string(plane) + " pixels per channel is not a square grid");
    return side;
}

void pixelate(std::span<double> plane, std::size_t side, std::size_t block) {
    for (std::size_t by = 0; by < side; by += block) {
        for (std::size_t bx = 0; bx < side; bx += block) {
            const std::size_t ey = std::min(by + block, side), ex = std::min(bx + block, side);
            double sum = 0.0;
            for (std::size_t y = by; y < ey; ++y)
                for (std::size_t x = bx; x < ex; ++x) sum += plane[y * side + x];
            const double mean = sum / static_cast<double>((ey - by) * (ex - bx));
            for (std::size_t y = by; y < ey; ++y)
                for (std::size_t x = bx; x < ex; ++x) plane[y * side + x] = mean;
        }
    }
}

void blur(std::span<double> plane, std::size_t side, double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        total += w;
    }
    for (auto& w : kernel) w /= total;

    const auto n = static_cast<std::ptrdiff_t>(side);
    auto clamp_index = [n](std::ptrdiff_t i) { return std::clamp<std::ptrdiff_t>(i, 0, n - 1); };
    std::vector<double> tmp(plane.size());
    for (std::ptrdiff_t y = 0; y < n; ++y)
        for (std::ptrdiff_t x = 0; x < n; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       plane[static_cast<std::size_t>(y * n + clamp_index(x + k))];
            tmp[static_cast<std::size_t>(y * n + x)] = acc;
        }
    for (std::ptrdiff_t y = 0; y < n; ++y)
        for (std::ptrdiff_t x = 0; x < n; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t k = -radius; k <= radius; ++k)
                acc += kernel[static_cast<std::size_t>(k + radius)] *
                       tmp[static_cast<std::size_t>(clamp_index(y + k) * n + x)];
            plane[static_cast<std::size_t>(y * n + x)] = acc;
        }
}

void require_unit_range(const Tensor& x) {
    for (double v : x.data())
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("corruption: input values must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(CorruptionKind kind) {
    switch (kind) {
        case CorruptionKind::none: return "none";
        case CorruptionKind::gaussian_noise: return "gaussian_noise";
        case CorruptionKind::shot_noise: return "shot_noise";
        case CorruptionKind::impulse_noise: return "impulse_noise";
        case CorruptionKind::brightness: return "brightness";
        case CorruptionKind::contrast: return "contrast";
        case CorruptionKind::pixelate: return "pixelate";
        case CorruptionKind::gaussian_blur: return "gaussian_blur";
    }
    return "unknown";
}

CorruptionKind parse_corruption_kind(std::string_view name) {
    if (name == "none") return CorruptionKind::none;
    for (auto kind : kAllCorruptions)
        if (to_string(kind) == name) return kind;
    throw InputError("unknown corruption '" + std::string(name) + "'");
}

bool is_stochastic(CorruptionKind kind) {
    return kind == CorruptionKind::gaussian_noise || kind == CorruptionKind::shot_noise ||
           kind == CorruptionKind::impulse_noise;
}

bool is_spatial(CorruptionKind kind) {
    return kind == CorruptionKind::pixelate || kind == CorruptionKind::gaussian_blur;
}

double severity_parameter(CorruptionKind kind, int severity) {
    if (severity < 1 || severity > 5)
        throw InputError("severity must be in 1..5, got " + std::to_string(severity));
    const auto i = static_cast<std::size_t>(severity - 1);
    switch (kind) {
        case CorruptionKind::none: return 0.0;
        case CorruptionKind::gaussian_noise: return kGaussianSigma[i];
        case CorruptionKind::shot_noise: return kShotScale[i];
        case CorruptionKind::impulse_noise: return kImpulseFraction[i];
        case CorruptionKind::brightness: return kBrightness[i];
        case CorruptionKind::contrast: return kContrast[i];
        case CorruptionKind::pixelate: return kPixelateBlock[i];
        case CorruptionKind::gaussian_blur: return kBlurSigma[i];
    }
    return 0.0;
}

void CorruptionSpec::validate() const {
    if (severity < 1 || severity > 5)
        throw InputError("severity must be in 1..5, got " + std::to_string(severity));
}

Tensor apply_unclipped(const CorruptionSpec& spec, const Tensor& x, std::uint64_t seed, std::size_t channels) {
    spec.validate();
    if (spec.kind == CorruptionKind::none) return x;
    require_unit_range(x);
    const double param = spec.parameter();
    Tensor out = x;
    auto data = out.data();
    Rng rng(seed);
    switch (spec.kind) {
        case CorruptionKind::gaussian_noise: {
            std::normal_distribution<double> normal(0.0, param);
            for (auto& v : data) v += normal(rng);
            break;
        }
        case CorruptionKind::shot_noise:
            for (auto& v : data) {
                const double mean = v * param;
                if (mean > 0.0) {
                    std::poisson_distribution<long> poisson(mean);
                    v = static_cast<double>(poisson(rng)) / param;
                }
            }
            break;
        case CorruptionKind::impulse_noise: {
            std::bernoulli_distribution hit(param);
            std::bernoulli_distribution salt(0.5);
            for (auto& v : data)
                if (hit(rng)) v = salt(rng) ? 1.0 : 0.0;
            break;
        }
        case CorruptionKind::brightness:
            for (auto& v : data) v += param;
            break;
        case CorruptionKind::contrast: {
            const std::size_t plane = x.size() / std::max<std::size_t>(channels, 1);
            for (std::size_t c = 0; c < channels; ++c) {
                auto p = data.subspan(c * plane, plane);
                double mean = 0.0;
                for (double v : p) mean += v;
                mean /= static_cast<double>(plane);
                for (auto& v : p) v = (v - mean) * param + mean;
            }
            break;
        }
        case CorruptionKind::pixelate:
        case CorruptionKind::gaussian_blur: {
            const std::size_t side = grid_side(x, channels);
            const std::size_t plane = side * side;
            for (std::size_t c = 0; c < channels; ++c) {
                auto p = data.subspan(c * plane, plane);
                if (spec.kind == CorruptionKind::pixelate)
                    pixelate(p, side, static_cast<std::size_t>(param));
                else
                    blur(p, side, param);
            }
            break;
        }
        case CorruptionKind::none:
            break;
    }
    return out;
}

Tensor apply(const CorruptionSpec& spec, const Tensor& x, std::uint64_t seed, std::size_t channels) {
    if (spec.kind == CorruptionKind::none) {
        spec.validate();
        return x;
    }
    Tensor out = apply_unclipped(spec, x, seed, channels);
    for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

Dataset corrupt_dataset(const CorruptionSpec& spec, const Dataset& ds, std::uint64_t seed) {
    spec.validate();
    Dataset out = ds;
    if (spec.kind == CorruptionKind::none) return out;
    const auto n = static_cast<std::ptrdiff_t>(ds.size());
    const std::size_t channels = std::max<std::size_t>(ds.channels, 1);
    if (n == 0) return out;
    // Row 0 outside the parallel region so that shape errors surface as exceptions.
    const Tensor first = apply(spec, ds.sample(0), derive_seed(seed, {0}), channels);
    std::copy(first.data().begin(), first.data().end(), out.inputs.row(0).begin());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 1; i < n; ++i) {
        const auto row = static_cast<std::size_t>(i);
        Tensor g = apply(spec, ds.sample(row), derive_seed(seed, {row}), channels);
        std::copy(g.data().begin(), g.data().end(), out.inputs.row(row).begin());
    }
    return out;
}

double estimate_bound(const CorruptionSpec& spec, const Dataset& ds, std::uint64_t seed) {
    if (ds.empty()) throw InputError("estimate_bound: empty dataset");
    spec.validate();
    if (spec.kind == CorruptionKind::none) return 0.0;
    const int draws = is_stochastic(spec.kind) ? kBoundDraws : 1;
    const std::size_t channels = std::max<std::size_t>(ds.channels, 1);
    double bound = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Tensor x = ds.sample(i);
        for (int d = 0; d < draws; ++d) {
            const Tensor g = apply(spec, x, derive_seed(seed, {i, static_cast<std::uint64_t>(d)}), channels);
            bound = std::max(bound, frobenius_norm(subtract(g, x)));
        }
    }
    return bound;
}

Tensor fgsm(const LayeredNet& net, const Tensor& x, std::size_t label, double epsilon,
            const Normalizer& normalizer) {
    if (!(epsilon >= 0.0)) throw InputError("fgsm: epsilon must be >= 0");
    if (x.rank() != 1) throw DimensionError("fgsm: expected a single sample vector");
    Tensor input = x;
    if (normalizer.enabled()) input = row_as_vector(normalizer.applied(as_row(x)), 0);
    const GradientSet g = backward(net, forward(net, input), label);
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = g.input[i] > 0.0 ? 1.0 : (g.input[i] < 0.0 ? -1.0 : 0.0);
        out[i] = std::clamp(x[i] + epsilon * s, 0.0, 1.0);
    }
    return out;
}

}  // namespace ptrain
