#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "ptrain/tensor.hpp"

namespace ptrain {

/// One tensor per weight matrix and per (optional) bias vector of a LayeredNet.
/// Used for gradients, optimizer velocities and weight noise alike.
struct ParamTensors {
    std::vector<Tensor> weights;
    std::vector<std::optional<Tensor>> biases;

    std::size_t depth() const { return weights.size(); }
    std::size_t parameter_count() const;
    bool same_layout(const ParamTensors& other) const;

    /// Visits every tensor, weights of layer h before its bias.
    void for_each(const std::function<void(Tensor&)>& fn);
    void for_each(const std::function<void(const Tensor&)>& fn) const;

    /// Concatenation of all entries in for_each order.
    std::vector<double> flatten() const;
    /// L2 norm over every entry of every tensor jointly.
    double global_norm() const;

    friend bool operator==(const ParamTensors&, const ParamTensors&) = default;
};

enum class NoiseMode { multiplicative, additive };

/// A perturbation of every parameter of a net: w * xi (multiplicative) or w + xi (additive).
struct NoiseDraw {
    NoiseMode mode = NoiseMode::multiplicative;
    ParamTensors values;
};

}  // namespace ptrain
