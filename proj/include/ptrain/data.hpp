#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "ptrain/tensor.hpp"

namespace ptrain {

/// Labelled samples stored as one N x d matrix of values in [0, 1].
/// `channels` and `side` describe the image layout (channel-major, side x side
/// per channel) when the samples are images; side == 0 means "not an image".
struct Dataset {
    Tensor inputs;
    std::vector<std::size_t> labels;
    std::size_t num_classes = 0;
    std::size_t channels = 1;
    std::size_t side = 0;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::size_t dim() const { return inputs.cols(); }
    Tensor sample(std::size_t i) const { return row_as_vector(inputs, i); }

    /// Rows `indices` in order.
    Dataset subset(std::span<const std::size_t> indices) const;
    /// Throws ConsistencyError when the invariants (sizes, label range, value range) fail.
    void validate() const;
};

Dataset make_dataset(std::vector<std::vector<double>> rows, std::vector<std::size_t> labels,
                     std::size_t num_classes);

/// MNIST-style IDX pair. Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes = 10);
/// Writes `ds` as an IDX pair, quantising pixels to round(255 * v). Requires a square image layout.
void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);

/// CIFAR-10 binary batch: records of 1 label byte + 3072 channel-major pixel bytes.
Dataset load_cifar10_bin(const std::filesystem::path& path);
Dataset load_cifar10_bin(std::span<const std::filesystem::path> paths);

/// `classes` Gaussian clusters around seeded simplex vertices inside [0, 1]^dim.
/// Labels are balanced and shuffled. When dim is a perfect square the samples
/// are tagged as single-channel images.
Dataset synth_blobs(std::size_t n, std::size_t classes, std::size_t dim, double spread, std::uint64_t seed);

/// Seeded disjoint split; the first part holds floor(n * (1 - fraction)) samples.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);

/// Per-channel affine standardisation (x - mean) / std, fitted on training data.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool enabled() const { return !mean.empty(); }
    static Normalizer identity() { return {}; }
    static Normalizer fit(const Dataset& ds);
    /// Applies in place to rows laid out with `channels` equal-size planes.
    void apply(Tensor& rows) const;
    Tensor applied(Tensor rows) const {
        apply(rows);
        return rows;
    }
};

}  // namespace ptrain
