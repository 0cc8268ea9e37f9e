#include "ptrain/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"

namespace ptrain {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                   const std::filesystem::path& path) {
    if (offset + 4 > bytes.size()) throw IoError(path.string() + ": truncated header");
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

std::size_t perfect_square_root(std::size_t n) {
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.num_classes = num_classes;
    out.channels = channels;
    out.side = side;
    out.inputs = Tensor({indices.size(), dim()});
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw InputError("subset: index out of range");
        auto src = inputs.row(indices[i]);
        std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
        out.labels.push_back(labels[indices[i]]);
    }
    return out;
}

void Dataset::validate() const {
    if (inputs.rank() != 2 || inputs.rows() != labels.size())
        throw ConsistencyError("dataset: " + std::to_string(inputs.rows()) + " inputs vs " +
                               std::to_string(labels.size()) + " labels");
    for (std::size_t label : labels)
        if (label >= num_classes) throw ConsistencyError("dataset: label out of range");
    for (double v : inputs.data())
        if (!(v >= 0.0 && v <= 1.0)) throw ConsistencyError("dataset: value outside [0, 1]");
    if (side != 0 && channels * side * side != dim())
        throw ConsistencyError("dataset: image layout does not match sample width");
}

Dataset make_dataset(std::vector<std::vector<double>> rows, std::vector<std::size_t> labels,
                     std::size_t num_classes) {
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * d);
    for (const auto& r : rows) {
        if (r.size() != d) throw DimensionError("make_dataset: ragged rows");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    Dataset ds;
    ds.inputs = Tensor::matrix(rows.size(), d, std::move(flat));
    ds.labels = std::move(labels);
    ds.num_classes = num_classes;
    ds.validate();
    return ds;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes) {
    const auto img = read_bytes(images);
    const auto lab = read_bytes(labels);
    if (be32(img, 0, images) != 0x00000803u) throw FormatError(images.string() + ": bad IDX image magic");
    if (be32(lab, 0, labels) != 0x00000801u) throw FormatError(labels.string() + ": bad IDX label magic");
    const std::size_t n = be32(img, 4, images);
    const std::size_t rows = be32(img, 8, images);
    const std::size_t cols = be32(img, 12, images);
    const std::size_t n_labels = be32(lab, 4, labels);
    if (n != n_labels)
        throw ConsistencyError("IDX: " + std::to_string(n) + " images vs " + std::to_string(n_labels) +
                               " labels");
    const std::size_t pixels = rows * cols;
    if (img.size() < 16 + n * pixels) throw IoError(images.string() + ": truncated pixel data");
    if (lab.size() < 8 + n) throw IoError(labels.string() + ": truncated label data");

    Dataset ds;
    ds.num_classes = num_classes;
    ds.channels = 1;
    ds.side = rows == cols ? rows : 0;
    ds.inputs = Tensor({n, pixels});
    auto out = ds.inputs.data();
    for (std::size_t i = 0; i < n * pixels; ++i) out[i] = img[16 + i] / 255.0;
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.labels[i] = lab[8 + i];
        if (ds.labels[i] >= num_classes)
            throw FormatError(labels.string() + ": label " + std::to_string(ds.labels[i]) + " out of range");
    }
    return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels) {
    const std::size_t side = ds.side != 0 ? ds.side : perfect_square_root(ds.dim());
    if (ds.channels != 1 || side == 0 || side * side != ds.dim())
        throw InputError("write_idx: needs single-channel square images");
    std::ofstream img(images, std::ios::binary | std::ios::trunc);
    std::ofstream lab(labels, std::ios::binary | std::ios::trunc);
    if (!img || !lab) throw IoError("write_idx: cannot open output files");
    put_be32(img, 0x00000803u);
    put_be32(img, static_cast<std::uint32_t>(ds.size()));
    put_be32(img, static_cast<std::uint32_t>(side));
    put_be32(img, static_cast<std::uint32_t>(side));
    for (double v : ds.inputs.data()) {
        const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
        img.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    put_be32(lab, 0x00000801u);
    put_be32(lab, static_cast<std::uint32_t>(ds.size()));
    for (std::size_t label : ds.labels) lab.put(static_cast<char>(static_cast<unsigned char>(label)));
    if (!img || !lab) throw IoError("write_idx: write failed");
}

Dataset load_cifar10_bin(const std::filesystem::path& path) {
    constexpr std::size_t kPixels = 3072, kRecord = kPixels + 1;
    const auto bytes = read_bytes(path);
    if (bytes.size() % kRecord != 0)
        throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                          " is not a multiple of 3073");
    const std::size_t n = bytes.size() / kRecord;
    Dataset ds;
    ds.num_classes = 10;
    ds.channels = 3;
    ds.side = 32;
    ds.inputs = Tensor({n, kPixels});
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t label = bytes[i * kRecord];
        if (label > 9) throw FormatError(path.string() + ": label " + std::to_string(label) + " > 9");
        ds.labels[i] = label;
        auto row = ds.inputs.row(i);
        for (std::size_t p = 0; p < kPixels; ++p) row[p] = bytes[i * kRecord + 1 + p] / 255.0;
    }
    return ds;
}

Dataset load_cifar10_bin(std::span<const std::filesystem::path> paths) {
    Dataset all;
    all.num_classes = 10;
    all.channels = 3;
    all.side = 32;
    std::vector<double> flat;
    for (const auto& p : paths) {
        Dataset part = load_cifar10_bin(p);
        flat.insert(flat.end(), part.inputs.data().begin(), part.inputs.data().end());
        all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
    }
    all.inputs = Tensor({all.labels.size(), 3072}, std::move(flat));
    return all;
}

Dataset synth_blobs(std::size_t n, std::size_t classes, std::size_t dim, double spread, std::uint64_t seed) {
    if (n == 0 || classes == 0 || dim == 0) throw InputError("synth_blobs: n, classes and dim must be >= 1");
    if (!(spread >= 0.0)) throw InputError("synth_blobs: spread must be >= 0");
    constexpr double kRadius = 0.3;
    Rng rng(derive_seed(seed, {stream::data}));
    std::normal_distribution<double> normal(0.0, 1.0);

    // Orthonormal directions give equidistant centres (a regular simplex) when classes <= dim.
    std::vector<std::vector<double>> dirs;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> v(dim);
        for (auto& e : v) e = normal(rng);
        if (classes <= dim) {
            for (const auto& u : dirs) {
                const double proj = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
                for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * u[i];
            }
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (auto& e : v) e = norm > 0.0 ? e / norm : 0.0;
        dirs.push_back(std::move(v));
    }

    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i % classes;
    std::shuffle(labels.begin(), labels.end(), rng);

    Dataset ds;
    ds.num_classes = classes;
    ds.channels = 1;
    ds.side = perfect_square_root(dim);
    ds.inputs = Tensor({n, dim});
    for (std::size_t i = 0; i < n; ++i) {
        auto row = ds.inputs.row(i);
        const auto& u = dirs[labels[i]];
        for (std::size_t j = 0; j < dim; ++j) {
            const double noise = spread > 0.0 ? spread * normal(rng) : 0.0;
            row[j] = std::clamp(0.5 + kRadius * u[j] + noise, 0.0, 1.0);
        }
    }
    ds.labels = std::move(labels);
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split: fraction must be in (0, 1)");
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {stream::split}));
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_first = static_cast<std::size_t>(std::floor(static_cast<double>(ds.size()) * (1.0 - fraction)));
    std::span<const std::size_t> all(order);
    return {ds.subset(all.first(n_first)), ds.subset(all.subspan(n_first))};
}

Normalizer Normalizer::fit(const Dataset& ds) {
    if (ds.empty()) throw InputError("Normalizer::fit: empty dataset");
    const std::size_t channels = std::max<std::size_t>(ds.channels, 1);
    if (ds.dim() % channels != 0) throw DimensionError("Normalizer::fit: width not divisible by channels");
    const std::size_t plane = ds.dim() / channels;
    Normalizer norm;
    norm.mean.assign(channels, 0.0);
    norm.stddev.assign(channels, 0.0);
    const double count = static_cast<double>(ds.size() * plane);
    for (std::size_t c = 0; c < channels; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (double v : ds.inputs.row(i).subspan(c * plane, plane)) sum += v;
        const double mu = sum / count;
        double sq = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (double v : ds.inputs.row(i).subspan(c * plane, plane)) sq += (v - mu) * (v - mu);
        const double sd = std::sqrt(sq / count);
        norm.mean[c] = mu;
        norm.stddev[c] = sd > 0.0 ? sd : 1.0;
    }
    return norm;
}

void Normalizer::apply(Tensor& rows) const {
    if (!enabled()) return;
    const std::size_t channels = mean.size();
    if (rows.cols() % channels != 0) throw DimensionError("Normalizer::apply: width not divisible by channels");
    const std::size_t plane = rows.cols() / channels;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        auto row = rows.row(r);
        for (std::size_t c = 0; c < channels; ++c)
            for (auto& v : row.subspan(c * plane, plane)) v = (v - mean[c]) / stddev[c];
    }
}

}  // namespace ptrain
