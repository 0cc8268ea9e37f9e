#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ptrain/params.hpp"
#include "ptrain/tensor.hpp"

namespace ptrain {

enum class Activation : std::uint8_t { identity = 0, relu = 1 };

struct Layer {
    Tensor weight;                // out x in
    std::optional<Tensor> bias;   // out
    Activation activation = Activation::relu;
};

/// Feedforward net z(h) = W(h) f(h-1) + b(h), f(h) = act(z(h)), f(0) = x.
///
/// Consecutive layers chain and the last layer is Identity (logits). The
/// parameter layout is fixed at construction; params() hands out mutable
/// access to values, not to shapes.
class LayeredNet {
public:
    LayeredNet() = default;
    explicit LayeredNet(std::vector<Layer> layers);

    std::size_t depth() const { return activations_.size(); }
    std::size_t input_width() const;
    std::size_t output_width() const;
    std::size_t parameter_count() const { return params_.parameter_count(); }

    const Tensor& weight(std::size_t h) const { return params_.weights.at(h); }
    const std::optional<Tensor>& bias(std::size_t h) const { return params_.biases.at(h); }
    Activation activation(std::size_t h) const { return activations_.at(h); }

    const ParamTensors& params() const { return params_; }
    ParamTensors& params() { return params_; }

    /// Same architecture, parameters replaced. Layout must match.
    LayeredNet with_params(ParamTensors params) const;

    std::vector<Layer> layers() const;

    friend bool operator==(const LayeredNet&, const LayeredNet&) = default;

private:
    ParamTensors params_;
    std::vector<Activation> activations_;
};

/// ReLU MLP with fan-in Gaussian init (std = sqrt(2 / fan_in)) and zero biases.
/// widths = {input, hidden..., classes}.
LayeredNet make_mlp(std::span<const std::size_t> widths, bool with_bias, std::uint64_t seed);

/// Pre-activations z(1..H) and activations f(1..H) of one sample (vectors) or a
/// batch (matrices, one row per sample).
struct ForwardTrace {
    Tensor input;
    std::vector<Tensor> pre_activations;
    std::vector<Tensor> activations;

    std::size_t depth() const { return pre_activations.size(); }
    const Tensor& logits() const { return activations.back(); }
    bool batched() const { return input.rank() == 2; }
    /// f(h) with f(0) the input.
    const Tensor& activation_at(std::size_t h) const { return h == 0 ? input : activations[h - 1]; }
};

/// Loss gradients with respect to every parameter, every pre-activation and the input.
/// For a batch these are gradients of the mean loss, so the per-row
/// pre-activation and input gradients carry a 1/B factor.
struct GradientSet {
    ParamTensors params;
    std::vector<Tensor> pre_activations;
    Tensor input;
};

ForwardTrace forward(const LayeredNet& net, const Tensor& x);

/// -log softmax(logits)[label], stabilised by max subtraction.
double cross_entropy(const Tensor& logits, std::size_t label);
Tensor softmax(const Tensor& logits);

GradientSet backward(const LayeredNet& net, const ForwardTrace& trace, std::size_t label);
GradientSet backward_batch(const LayeredNet& net, const ForwardTrace& trace,
                           std::span<const std::size_t> labels);

struct LossAndGrad {
    double loss = 0.0;
    GradientSet grad;
};

/// Mean loss and mean gradient over the rows of `inputs`.
LossAndGrad batch_loss_and_grad(const LayeredNet& net, const Tensor& inputs,
                                std::span<const std::size_t> labels);
double batch_loss(const LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels);

/// w * xi or w + xi for every weight and bias; the source net is not touched.
LayeredNet perturbed_copy(const LayeredNet& net, const NoiseDraw& noise);

/// Argmax of each logit row, ties to the lowest index.
std::vector<std::size_t> predict(const LayeredNet& net, const Tensor& inputs);

// Checkpoint: "PTNN", u32 version, u32 layer count, then per layer u32 out,
// u32 in, u8 has_bias, u8 activation, row-major f64 weights, f64 biases.
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const LayeredNet& net, std::ostream& out);
LayeredNet read_checkpoint(std::istream& in);
void save_checkpoint(const LayeredNet& net, const std::filesystem::path& path);
LayeredNet load_checkpoint(const std::filesystem::path& path);

}  // namespace ptrain
