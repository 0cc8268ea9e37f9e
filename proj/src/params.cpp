#include "ptrain/params.hpp"

#include <cmath>

namespace ptrain {

std::size_t ParamTensors::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const Tensor& t) { n += t.size(); });
    return n;
}

bool ParamTensors::same_layout(const ParamTensors& other) const {
    if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
    for (std::size_t h = 0; h < weights.size(); ++h) {
        if (!weights[h].same_shape(other.weights[h])) return false;
        if (biases[h].has_value() != other.biases[h].has_value()) return false;
        if (biases[h] && !biases[h]->same_shape(*other.biases[h])) return false;
    }
    return true;
}

void ParamTensors::for_each(const std::function<void(Tensor&)>& fn) {
    for (std::size_t h = 0; h < weights.size(); ++h) {
        fn(weights[h]);
        if (h < biases.size() && biases[h]) fn(*biases[h]);
    }
}

void ParamTensors::for_each(const std::function<void(const Tensor&)>& fn) const {
    for (std::size_t h = 0; h < weights.size(); ++h) {
        fn(weights[h]);
        if (h < biases.size() && biases[h]) fn(*biases[h]);
    }
}

std::vector<double> ParamTensors::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each([&](const Tensor& t) { out.insert(out.end(), t.data().begin(), t.data().end()); });
    return out;
}

double ParamTensors::global_norm() const {
    double acc = 0.0;
    for_each([&](const Tensor& t) {
        for (double v : t.data()) acc += v * v;
    });
    return std::sqrt(acc);
}

}  // namespace ptrain
