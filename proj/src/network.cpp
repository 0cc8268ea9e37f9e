#include "ptrain/network.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

LayeredNet::LayeredNet(std::vector<Layer> layers) {
    if (layers.empty()) throw DimensionError("net needs at least one layer");
    for (std::size_t h = 0; h < layers.size(); ++h) {
        auto& layer = layers[h];
        if (layer.weight.rank() != 2)
            throw DimensionError("layer " + std::to_string(h) + ": weight must be a matrix, got " +
                                 layer.weight.shape_string());
        if (layer.bias && (layer.bias->rank() != 1 || layer.bias->size() != layer.weight.rows()))
            throw DimensionError("layer " + std::to_string(h) + ": bias " +
                                 layer.bias->shape_string() + " does not match weight " +
                                 layer.weight.shape_string());
        if (h > 0 && layers[h - 1].weight.rows() != layer.weight.cols())
            throw DimensionError("layer " + std::to_string(h) + ": input width " +
                                 std::to_string(layer.weight.cols()) + " does not chain with " +
                                 std::to_string(layers[h - 1].weight.rows()));
    }
    if (layers.back().activation != Activation::identity)
        throw InputError("final layer must be Identity (logits)");
    for (auto& layer : layers) {
        params_.weights.push_back(std::move(layer.weight));
        params_.biases.push_back(std::move(layer.bias));
        activations_.push_back(layer.activation);
    }
}

std::size_t LayeredNet::input_width() const { return params_.weights.front().cols(); }
std::size_t LayeredNet::output_width() const { return params_.weights.back().rows(); }

LayeredNet LayeredNet::with_params(ParamTensors params) const {
    if (!params.same_layout(params_)) throw DimensionError("with_params: parameter layout differs");
    LayeredNet copy;
    copy.params_ = std::move(params);
    copy.activations_ = activations_;
    return copy;
}

std::vector<Layer> LayeredNet::layers() const {
    std::vector<Layer> out;
    for (std::size_t h = 0; h < depth(); ++h)
        out.push_back(Layer{params_.weights[h], params_.biases[h], activations_[h]});
    return out;
}

LayeredNet make_mlp(std::span<const std::size_t> widths, bool with_bias, std::uint64_t seed) {
    if (widths.size() < 2) throw InputError("make_mlp: need at least input and output widths");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Layer> layers;
    for (std::size_t h = 0; h + 1 < widths.size(); ++h) {
        const std::size_t in = widths[h], out = widths[h + 1];
        if (in == 0 || out == 0) throw InputError("make_mlp: zero width");
        const double std_dev = std::sqrt(2.0 / static_cast<double>(in));
        Tensor w({out, in});
        for (auto& v : w.data()) v = std_dev * normal(rng);
        std::optional<Tensor> b;
        if (with_bias) b = Tensor({out});
        const bool last = h + 2 == widths.size();
        layers.push_back(Layer{std::move(w), std::move(b), last ? Activation::identity : Activation::relu});
    }
    return LayeredNet(std::move(layers));
}

namespace {

Tensor apply_activation(const Tensor& z, Activation act) {
    if (act == Activation::identity) return z;
    Tensor f = z;
    for (auto& v : f.data()) v = v > 0.0 ? v : 0.0;
    return f;
}

// Batched forward; `rows` is B x in.
ForwardTrace forward_rows(const LayeredNet& net, const Tensor& rows) {
    if (rows.cols() != net.input_width())
        throw DimensionError("forward: input width " + std::to_string(rows.cols()) +
                             " does not match net input width " + std::to_string(net.input_width()));
    ForwardTrace trace;
    trace.input = rows;
    const Tensor* prev = &trace.input;
    for (std::size_t h = 0; h < net.depth(); ++h) {
        Tensor z = matmul_nt(*prev, net.weight(h));
        if (const auto& b = net.bias(h)) {
            for (std::size_t r = 0; r < z.rows(); ++r) {
                auto zr = z.row(r);
                for (std::size_t j = 0; j < zr.size(); ++j) zr[j] += (*b)[j];
            }
        }
        trace.activations.push_back(apply_activation(z, net.activation(h)));
        trace.pre_activations.push_back(std::move(z));
        prev = &trace.activations.back();
    }
    for (const auto& f : trace.activations) require_finite(f, "forward");
    return trace;
}

void check_trace(const LayeredNet& net, const ForwardTrace& trace) {
    if (trace.depth() != net.depth() || trace.activations.size() != net.depth())
        throw ConsistencyError("trace depth " + std::to_string(trace.depth()) +
                               " does not match net depth " + std::to_string(net.depth()));
    if (trace.input.cols() != net.input_width())
        throw ConsistencyError("trace input width does not match net");
    for (std::size_t h = 0; h < net.depth(); ++h) {
        const auto& z = trace.pre_activations[h];
        if (z.cols() != net.weight(h).rows() || z.rows() != trace.input.rows() ||
            !z.same_shape(trace.activations[h]))
            throw ConsistencyError("trace layer " + std::to_string(h) + " shape " + z.shape_string() +
                                   " does not match net");
    }
}

Tensor to_rows(const Tensor& t) { return t.rank() == 1 ? as_row(t) : t; }

ForwardTrace trace_as_rows(const ForwardTrace& trace) {
    ForwardTrace rows;
    rows.input = to_rows(trace.input);
    for (const auto& z : trace.pre_activations) rows.pre_activations.push_back(to_rows(z));
    for (const auto& f : trace.activations) rows.activations.push_back(to_rows(f));
    return rows;
}

// Reverse pass from d(loss)/d(logits) given as rows.
GradientSet backprop(const LayeredNet& net, const ForwardTrace& rows, Tensor dz) {
    const std::size_t depth = net.depth();
    GradientSet g;
    g.params.weights.resize(depth);
    g.params.biases.resize(depth);
    g.pre_activations.resize(depth);
    for (std::size_t h = depth; h-- > 0;) {
        const Tensor& f_prev = rows.activation_at(h);
        g.params.weights[h] = matmul_tn(dz, f_prev);
        if (net.bias(h)) {
            Tensor db({dz.cols()});
            for (std::size_t r = 0; r < dz.rows(); ++r) {
                auto dr = dz.row(r);
                for (std::size_t j = 0; j < dr.size(); ++j) db[j] += dr[j];
            }
            g.params.biases[h] = std::move(db);
        }
        Tensor df = matmul(dz, net.weight(h));
        g.pre_activations[h] = std::move(dz);
        if (h == 0) {
            g.input = std::move(df);
            break;
        }
        if (net.activation(h - 1) == Activation::relu) {
            const Tensor& z = rows.pre_activations[h - 1];
            for (std::size_t i = 0; i < df.size(); ++i)
                if (!(z[i] > 0.0)) df[i] = 0.0;
        }
        dz = std::move(df);
    }
    return g;
}

Tensor softmax_row(std::span<const double> logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    Tensor p({logits.size()});
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        sum += p[i];
    }
    for (auto& v : p.data()) v /= sum;
    return p;
}

double cross_entropy_row(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size())
        throw InputError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    return std::log(sum) - (logits[label] - mx);
}

}  // namespace

ForwardTrace forward(const LayeredNet& net, const Tensor& x) {
    if (x.rank() == 2) return forward_rows(net, x);
    ForwardTrace rows = forward_rows(net, as_row(x));
    ForwardTrace trace;
    trace.input = x;
    for (auto& z : rows.pre_activations) trace.pre_activations.push_back(row_as_vector(z, 0));
    for (auto& f : rows.activations) trace.activations.push_back(row_as_vector(f, 0));
    return trace;
}

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 1 || logits.empty()) throw DimensionError("softmax: expected a non-empty vector");
    return softmax_row(logits.data());
}

double cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.rank() != 1 || logits.empty())
        throw DimensionError("cross_entropy: expected a non-empty vector of logits");
    return cross_entropy_row(logits.data(), label);
}

GradientSet backward(const LayeredNet& net, const ForwardTrace& trace, std::size_t label) {
    if (trace.batched()) throw ConsistencyError("backward: batched trace, use backward_batch");
    check_trace(net, trace);
    const Tensor& logits = trace.logits();
    if (label >= logits.size())
        throw InputError("backward: label " + std::to_string(label) + " out of range");
    Tensor dz = softmax_row(logits.data());
    dz[label] -= 1.0;
    GradientSet rows = backprop(net, trace_as_rows(trace), as_row(dz));
    GradientSet g;
    g.params = std::move(rows.params);
    for (auto& z : rows.pre_activations) g.pre_activations.push_back(row_as_vector(z, 0));
    g.input = row_as_vector(rows.input, 0);
    return g;
}

GradientSet backward_batch(const LayeredNet& net, const ForwardTrace& trace,
                           std::span<const std::size_t> labels) {
    if (!trace.batched()) throw ConsistencyError("backward_batch: trace is not batched");
    check_trace(net, trace);
    const Tensor& logits = trace.logits();
    if (labels.size() != logits.rows())
        throw ConsistencyError("backward_batch: " + std::to_string(labels.size()) + " labels for " +
                               std::to_string(logits.rows()) + " rows");
    if (labels.empty()) throw InputError("backward_batch: empty batch");
    const double inv_b = 1.0 / static_cast<double>(labels.size());
    Tensor dz(logits.shape());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        if (labels[r] >= logits.cols()) throw InputError("backward_batch: label out of range");
        Tensor p = softmax_row(logits.row(r));
        p[labels[r]] -= 1.0;
        auto dr = dz.row(r);
        for (std::size_t j = 0; j < dr.size(); ++j) dr[j] = p[j] * inv_b;
    }
    return backprop(net, trace, std::move(dz));
}

LossAndGrad batch_loss_and_grad(const LayeredNet& net, const Tensor& inputs,
                                std::span<const std::size_t> labels) {
    if (inputs.rank() != 2) throw DimensionError("batch_loss_and_grad: inputs must be a matrix");
    if (labels.empty() || inputs.rows() == 0) throw InputError("batch_loss_and_grad: empty batch");
    ForwardTrace trace = forward_rows(net, inputs);
    LossAndGrad out;
    out.grad = backward_batch(net, trace, labels);
    const Tensor& logits = trace.logits();
    double sum = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) sum += cross_entropy_row(logits.row(r), labels[r]);
    out.loss = sum / static_cast<double>(labels.size());
    return out;
}

double batch_loss(const LayeredNet& net, const Tensor& inputs, std::span<const std::size_t> labels) {
    if (inputs.rank() != 2) throw DimensionError("batch_loss: inputs must be a matrix");
    if (labels.empty() || inputs.rows() != labels.size())
        throw InputError("batch_loss: empty batch or label count mismatch");
    ForwardTrace trace = forward_rows(net, inputs);
    double sum = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) sum += cross_entropy_row(trace.logits().row(r), labels[r]);
    return sum / static_cast<double>(labels.size());
}

LayeredNet perturbed_copy(const LayeredNet& net, const NoiseDraw& noise) {
    if (!noise.values.same_layout(net.params()))
        throw DimensionError("perturbed_copy: noise layout does not mirror the net");
    ParamTensors p = net.params();
    for (std::size_t h = 0; h < p.depth(); ++h) {
        auto combine = [&](const Tensor& a, const Tensor& b) {
            return noise.mode == NoiseMode::multiplicative ? hadamard(a, b) : add(a, b);
        };
        p.weights[h] = combine(p.weights[h], noise.values.weights[h]);
        if (p.biases[h]) p.biases[h] = combine(*p.biases[h], *noise.values.biases[h]);
    }
    return net.with_params(std::move(p));
}

std::vector<std::size_t> predict(const LayeredNet& net, const Tensor& inputs) {
    ForwardTrace trace = forward(net, inputs.rank() == 1 ? as_row(inputs) : inputs);
    const Tensor& logits = trace.logits();
    std::vector<std::size_t> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

// --- checkpoint -----------------------------------------------------------

namespace {

constexpr std::array<char, 4> kMagic{'P', 'T', 'N', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 4);
}

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_f64(std::ostream& out, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b.data(), 8);
}

void read_exact(std::istream& in, char* dst, std::size_t n) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError("checkpoint: truncated file");
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint8_t get_u8(std::istream& in) {
    char c = 0;
    read_exact(in, &c, 1);
    return static_cast<std::uint8_t>(c);
}

double get_f64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    read_exact(in, reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace

void write_checkpoint(const LayeredNet& net, std::ostream& out) {
    out.write(kMagic.data(), 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(net.depth()));
    for (std::size_t h = 0; h < net.depth(); ++h) {
        const Tensor& w = net.weight(h);
        put_u32(out, static_cast<std::uint32_t>(w.rows()));
        put_u32(out, static_cast<std::uint32_t>(w.cols()));
        put_u8(out, net.bias(h) ? 1 : 0);
        put_u8(out, static_cast<std::uint8_t>(net.activation(h)));
        for (double v : w.data()) put_f64(out, v);
        if (const auto& b = net.bias(h))
            for (double v : b->data()) put_f64(out, v);
    }
    if (!out) throw IoError("checkpoint: write failed");
}

LayeredNet read_checkpoint(std::istream& in) {
    std::array<char, 4> magic{};
    read_exact(in, magic.data(), 4);
    if (magic != kMagic) throw FormatError("checkpoint: bad magic");
    const std::uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = get_u32(in);
    if (count == 0) throw FormatError("checkpoint: zero layers");
    std::vector<Layer> layers;
    for (std::uint32_t h = 0; h < count; ++h) {
        const std::uint32_t out = get_u32(in), width = get_u32(in);
        const std::uint8_t has_bias = get_u8(in), tag = get_u8(in);
        if (has_bias > 1) throw FormatError("checkpoint: bad bias flag");
        if (tag > 1) throw FormatError("checkpoint: unknown activation tag " + std::to_string(tag));
        std::vector<double> w(static_cast<std::size_t>(out) * width);
        for (auto& v : w) v = get_f64(in);
        std::optional<Tensor> bias;
        if (has_bias) {
            std::vector<double> b(out);
            for (auto& v : b) v = get_f64(in);
            bias = Tensor::vector(std::move(b));
        }
        layers.push_back(Layer{Tensor::matrix(out, width, std::move(w)), std::move(bias),
                               static_cast<Activation>(tag)});
    }
    try {
        return LayeredNet(std::move(layers));
    } catch (const Error& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const LayeredNet& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_checkpoint(net, out);
}

LayeredNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_checkpoint(in);
}

}  // namespace ptrain
