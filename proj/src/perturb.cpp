#include "ptrain/perturb.hpp"

#include <cmath>
#include <random>

#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

PerturbationSpec PerturbationSpec::multiplicative(double sigma) {
    return {PerturbationKind::multiplicative_gaussian, sigma, 0.0, 0.0};
}
PerturbationSpec PerturbationSpec::additive(double sigma) {
    return {PerturbationKind::additive_gaussian, sigma, 0.0, 0.0};
}
PerturbationSpec PerturbationSpec::sam(double rho) { return {PerturbationKind::sam, 0.0, rho, 0.0}; }
PerturbationSpec PerturbationSpec::asam(double rho) { return {PerturbationKind::asam, 0.0, rho, 0.0}; }
PerturbationSpec PerturbationSpec::dropout(double p) {
    return {PerturbationKind::bernoulli_dropout, 0.0, 0.0, p};
}

void PerturbationSpec::validate() const {
    switch (kind) {
        case PerturbationKind::multiplicative_gaussian:
        case PerturbationKind::additive_gaussian:
            if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InputError("sigma must be >= 0");
            break;
        case PerturbationKind::sam:
        case PerturbationKind::asam:
            if (!(rho >= 0.0) || !std::isfinite(rho)) throw InputError("rho must be >= 0");
            break;
        case PerturbationKind::bernoulli_dropout:
            if (!(p >= 0.0 && p < 1.0)) throw InputError("dropout p must be in [0, 1)");
            break;
        case PerturbationKind::none:
            break;
    }
}

ParamTensors zeros_like(const ParamTensors& layout) {
    ParamTensors z;
    for (std::size_t h = 0; h < layout.depth(); ++h) {
        z.weights.emplace_back(layout.weights[h].shape());
        if (layout.biases[h])
            z.biases.emplace_back(Tensor(layout.biases[h]->shape()));
        else
            z.biases.emplace_back(std::nullopt);
    }
    return z;
}

ParamTensors zeros_like(const LayeredNet& net) { return zeros_like(net.params()); }

namespace {

NoiseDraw gaussian_draw(const ParamTensors& layout, double mean, double sigma, std::uint64_t seed,
                        NoiseMode mode) {
    if (!(sigma >= 0.0)) throw InputError("noise sigma must be >= 0");
    NoiseDraw draw{mode, zeros_like(layout)};
    if (sigma == 0.0) {
        draw.values.for_each([&](Tensor& t) {
            for (auto& v : t.data()) v = mean;
        });
        return draw;
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(mean, sigma);
    draw.values.for_each([&](Tensor& t) {
        for (auto& v : t.data()) v = normal(rng);
    });
    return draw;
}

void require_nonnegative_rho(double rho) {
    if (!(rho >= 0.0)) throw InputError("rho must be >= 0");
}

}  // namespace

NoiseDraw sample_mwp(const ParamTensors& layout, double sigma, std::uint64_t seed) {
    return gaussian_draw(layout, 1.0, sigma, seed, NoiseMode::multiplicative);
}

NoiseDraw sample_awp(const ParamTensors& layout, double sigma, std::uint64_t seed) {
    return gaussian_draw(layout, 0.0, sigma, seed, NoiseMode::additive);
}

NoiseDraw sample_dropout_mask(const ParamTensors& layout, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw InputError("dropout p must be in [0, 1)");
    NoiseDraw draw{NoiseMode::multiplicative, zeros_like(layout)};
    const double keep_scale = 1.0 / (1.0 - p);
    Rng rng(seed);
    std::bernoulli_distribution keep(1.0 - p);
    for (std::size_t h = 0; h < layout.depth(); ++h) {
        Tensor& w = draw.values.weights[h];
        auto& b = draw.values.biases[h];
        for (std::size_t unit = 0; unit < w.rows(); ++unit) {
            const double v = keep(rng) ? keep_scale : 0.0;
            for (auto& e : w.row(unit)) e = v;
            if (b) (*b)[unit] = v;
        }
    }
    return draw;
}

NoiseDraw sam_direction(const ParamTensors& grads, double rho) {
    require_nonnegative_rho(rho);
    const double norm = grads.global_norm();
    if (!(norm > 0.0)) throw DegenerateDirectionError("sam_direction: gradient is identically zero");
    NoiseDraw draw{NoiseMode::additive, grads};
    const double factor = rho / norm;
    draw.values.for_each([&](Tensor& t) {
        for (auto& v : t.data()) v *= factor;
    });
    return draw;
}

NoiseDraw asam_direction(const ParamTensors& weights, const ParamTensors& grads, double rho) {
    require_nonnegative_rho(rho);
    if (!weights.same_layout(grads)) throw DimensionError("asam_direction: weight/gradient layout differs");
    const auto w = weights.flatten();
    const auto g = grads.flatten();
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += (w[i] * g[i]) * (w[i] * g[i]);
    const double norm = std::sqrt(acc);
    if (!(norm > 0.0)) throw DegenerateDirectionError("asam_direction: w * g is identically zero");
    NoiseDraw draw{NoiseMode::additive, zeros_like(weights)};
    const double factor = rho / norm;
    std::size_t i = 0;
    draw.values.for_each([&](Tensor& t) {
        for (auto& v : t.data()) {
            v = factor * (w[i] * w[i] * g[i]);
            ++i;
        }
    });
    return draw;
}

}  // namespace ptrain
