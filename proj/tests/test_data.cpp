#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <doctest.h>

#include "ptrain/data.hpp"
#include "ptrain/errors.hpp"

using namespace ptrain;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    const fs::path d = fs::path(PTRAIN_TEST_TMP);
    fs::create_directories(d);
    return d;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> be32(std::uint32_t v) {
    return {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
}

std::vector<unsigned char> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& pixels, std::uint32_t magic = 0x803) {
    std::vector<unsigned char> b;
    for (auto v : {magic, n, rows, cols}) {
        const auto w = be32(v);
        b.insert(b.end(), w.begin(), w.end());
    }
    b.insert(b.end(), pixels.begin(), pixels.end());
    return b;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels, std::uint32_t magic = 0x801) {
    std::vector<unsigned char> b = be32(magic);
    const auto n = be32(static_cast<std::uint32_t>(labels.size()));
    b.insert(b.end(), n.begin(), n.end());
    b.insert(b.end(), labels.begin(), labels.end());
    return b;
}

// Independent logistic regression for two classes, batch gradient descent.
double logistic_error(const Dataset& ds) {
    double w0 = 0, w1 = 0, b = 0;
    const double n = static_cast<double>(ds.size());
    for (int it = 0; it < 2000; ++it) {
        double g0 = 0, g1 = 0, gb = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double x0 = ds.inputs.at(i, 0) - 0.5, x1 = ds.inputs.at(i, 1) - 0.5;
            const double p = 1.0 / (1.0 + std::exp(-(w0 * x0 + w1 * x1 + b)));
            const double e = p - static_cast<double>(ds.labels[i]);
            g0 += e * x0;
            g1 += e * x1;
            gb += e;
        }
        w0 -= 5.0 * g0 / n;
        w1 -= 5.0 * g1 / n;
        b -= 5.0 * gb / n;
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double z = w0 * (ds.inputs.at(i, 0) - 0.5) + w1 * (ds.inputs.at(i, 1) - 0.5) + b;
        wrong += (z > 0.0 ? 1u : 0u) != ds.labels[i];
    }
    return static_cast<double>(wrong) / n;
}

}  // namespace

TEST_CASE("IDX reader") {
    const fs::path dir = tmp_dir();
    const fs::path img = dir / "img.idx", lab = dir / "lab.idx";

    SUBCASE("crafted 2x2 image") {
        write_bytes(img, idx_images(1, 2, 2, {0, 128, 255, 64}));
        write_bytes(lab, idx_labels({3}));
        const Dataset ds = load_idx(img, lab);
        REQUIRE(ds.size() == 1);
        CHECK(ds.labels[0] == 3);
        CHECK(ds.side == 2);
        CHECK(ds.inputs[0] == 0.0);
        CHECK(ds.inputs[1] == doctest::Approx(0.50196078431372548).epsilon(1e-15));
        CHECK(ds.inputs[2] == 1.0);
        CHECK(ds.inputs[3] == doctest::Approx(0.25098039215686274).epsilon(1e-15));
    }
    SUBCASE("empty file") {
        write_bytes(img, idx_images(0, 28, 28, {}));
        write_bytes(lab, idx_labels({}));
        CHECK(load_idx(img, lab).empty());
    }
    SUBCASE("count mismatch") {
        write_bytes(img, idx_images(1, 2, 2, {0, 1, 2, 3}));
        write_bytes(lab, idx_labels({1, 2}));
        CHECK_THROWS_AS(load_idx(img, lab), ConsistencyError);
    }
    SUBCASE("bad magic") {
        write_bytes(img, idx_images(1, 2, 2, {0, 1, 2, 3}, 0x804));
        write_bytes(lab, idx_labels({1}));
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
        write_bytes(img, idx_images(1, 2, 2, {0, 1, 2, 3}));
        write_bytes(lab, idx_labels({1}, 0x803));
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
    }
    SUBCASE("truncation") {
        write_bytes(img, idx_images(2, 2, 2, {0, 1, 2, 3, 4}));
        write_bytes(lab, idx_labels({1, 2}));
        CHECK_THROWS_AS(load_idx(img, lab), IoError);
        write_bytes(img, {0, 0, 8});
        CHECK_THROWS_AS(load_idx(img, lab), IoError);
        CHECK_THROWS_AS(load_idx(dir / "missing.idx", lab), IoError);
    }
    SUBCASE("label out of range") {
        write_bytes(img, idx_images(1, 2, 2, {0, 1, 2, 3}));
        write_bytes(lab, idx_labels({10}));
        CHECK_THROWS_AS(load_idx(img, lab), FormatError);
    }
    SUBCASE("round trip on the 1/255 grid") {
        Dataset ds = synth_blobs(50, 5, 16, 0.2, 3);
        for (double& v : ds.inputs.data()) v = std::round(v * 255.0) / 255.0;
        write_idx(ds, img, lab);
        const Dataset back = load_idx(img, lab, 5);
        CHECK(back.inputs == ds.inputs);
        CHECK(back.labels == ds.labels);
        CHECK(back.side == 4);
    }
}

TEST_CASE("CIFAR-10 binary reader") {
    const fs::path dir = tmp_dir();
    const fs::path f = dir / "batch.bin";
    SUBCASE("single record") {
        std::vector<unsigned char> rec(3073, 255);
        rec[0] = 7;
        write_bytes(f, rec);
        const Dataset ds = load_cifar10_bin(f);
        REQUIRE(ds.size() == 1);
        CHECK(ds.labels[0] == 7);
        CHECK(ds.channels == 3);
        CHECK(ds.side == 32);
        CHECK(std::all_of(ds.inputs.data().begin(), ds.inputs.data().end(), [](double v) { return v == 1.0; }));
    }
    SUBCASE("channel-major layout") {
        std::vector<unsigned char> rec(3073, 0);
        rec[0] = 1;
        rec[1 + 1024] = 51;      // green plane, first pixel
        rec[1 + 2048 + 5] = 255; // blue plane, sixth pixel
        write_bytes(f, rec);
        const Dataset ds = load_cifar10_bin(f);
        CHECK(ds.inputs.at(0, 1024) == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(ds.inputs.at(0, 2053) == 1.0);
    }
    SUBCASE("empty file") {
        write_bytes(f, {});
        CHECK(load_cifar10_bin(f).empty());
    }
    SUBCASE("size not a record multiple") {
        write_bytes(f, std::vector<unsigned char>(3074, 1));
        CHECK_THROWS_AS(load_cifar10_bin(f), FormatError);
    }
    SUBCASE("label above 9") {
        std::vector<unsigned char> rec(3073, 0);
        rec[0] = 10;
        write_bytes(f, rec);
        CHECK_THROWS_AS(load_cifar10_bin(f), FormatError);
    }
    SUBCASE("several batch files concatenate") {
        std::vector<unsigned char> a(3073, 0), b(2 * 3073, 255);
        a[0] = 4;
        b[0] = 1;
        b[3073] = 2;
        write_bytes(dir / "a.bin", a);
        write_bytes(dir / "b.bin", b);
        const std::vector<fs::path> paths{dir / "a.bin", dir / "b.bin"};
        const Dataset ds = load_cifar10_bin(paths);
        CHECK(ds.labels == std::vector<std::size_t>{4, 1, 2});
        CHECK(ds.inputs.at(0, 0) == 0.0);
        CHECK(ds.inputs.at(2, 3071) == 1.0);
    }
}

TEST_CASE("synthetic blobs") {
    SUBCASE("one sample per class") {
        const Dataset ds = synth_blobs(10, 10, 8, 0.1, 1);
        std::vector<std::size_t> l = ds.labels;
        std::sort(l.begin(), l.end());
        for (std::size_t i = 0; i < 10; ++i) CHECK(l[i] == i);
    }
    SUBCASE("balanced, valid and deterministic") {
        const Dataset ds = synth_blobs(1000, 4, 9, 0.3, 2);
        CHECK_NOTHROW(ds.validate());
        std::map<std::size_t, int> counts;
        for (auto l : ds.labels) ++counts[l];
        for (auto [label, c] : counts) CHECK(c == 250);
        CHECK(ds.side == 3);
        CHECK(synth_blobs(1000, 4, 9, 0.3, 2).inputs == ds.inputs);
        CHECK_FALSE(synth_blobs(1000, 4, 9, 0.3, 3).inputs == ds.inputs);
    }
    SUBCASE("zero spread is separable by nearest centroid") {
        const Dataset ds = synth_blobs(200, 5, 12, 0.0, 4);
        std::vector<std::vector<double>> centre(5);
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (centre[ds.labels[i]].empty())
                centre[ds.labels[i]].assign(ds.inputs.row(i).begin(), ds.inputs.row(i).end());
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            std::size_t best = 0;
            double best_d = 1e300;
            for (std::size_t c = 0; c < 5; ++c) {
                double d = 0.0;
                for (std::size_t j = 0; j < 12; ++j) d += std::pow(ds.inputs.at(i, j) - centre[c][j], 2);
                if (d < best_d) best_d = d, best = c;
            }
            wrong += best != ds.labels[i];
        }
        CHECK(wrong == 0);
    }
    SUBCASE("logistic regression separates two tight blobs") {
        CHECK(logistic_error(synth_blobs(1000, 2, 2, 0.05, 5)) <= 0.01);
    }
    CHECK_THROWS_AS(synth_blobs(0, 2, 2, 0.1, 0), InputError);
    CHECK_THROWS_AS(synth_blobs(10, 0, 2, 0.1, 0), InputError);
    CHECK_THROWS_AS(synth_blobs(10, 2, 0, 0.1, 0), InputError);
    CHECK_THROWS_AS(synth_blobs(10, 2, 2, -0.1, 0), InputError);
}

TEST_CASE("split") {
    Dataset ds = make_dataset({}, {}, 3);
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < 100; ++i) {
        rows.push_back({static_cast<double>(i) / 100.0});
        labels.push_back(i % 3);
    }
    ds = make_dataset(rows, labels, 3);
    const auto [a, b] = split(ds, 0.1, 7);
    CHECK(a.size() == 90);
    CHECK(b.size() == 10);
    std::vector<double> all;
    for (const Dataset* part : {&a, &b})
        for (std::size_t i = 0; i < part->size(); ++i) {
            all.push_back(part->inputs.at(i, 0));
            CHECK(part->labels[i] == static_cast<std::size_t>(std::lround(part->inputs.at(i, 0) * 100)) % 3);
        }
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<double>(ds.inputs.data().begin(), ds.inputs.data().end()));
    const auto [a2, b2] = split(ds, 0.1, 7);
    CHECK(a2.inputs == a.inputs);
    CHECK(b2.labels == b.labels);
    CHECK(split(ds, 0.25, 1).first.size() == 75);
    CHECK_THROWS_AS(split(ds, 0.0, 1), InputError);
    CHECK_THROWS_AS(split(ds, 1.0, 1), InputError);
}

TEST_CASE("dataset invariants and normaliser") {
    CHECK_THROWS_AS(make_dataset({{0.1}, {0.2}}, {0}, 2), ConsistencyError);
    CHECK_THROWS_AS(make_dataset({{0.1}, {1.2}}, {0, 1}, 2), ConsistencyError);
    CHECK_THROWS_AS(make_dataset({{0.1}, {0.2}}, {0, 2}, 2), ConsistencyError);
    CHECK_THROWS_AS(make_dataset({{0.1, 0.3}, {0.2}}, {0, 1}, 2), DimensionError);

    const Dataset ds = make_dataset({{0.0, 0.2}, {0.4, 0.6}}, {0, 1}, 2);
    const Normalizer n = Normalizer::fit(ds);
    CHECK(n.mean[0] == doctest::Approx(0.3));
    CHECK(n.stddev[0] == doctest::Approx(std::sqrt(0.05)));
    const Tensor z = n.applied(ds.inputs);
    double s = 0.0, ss = 0.0;
    for (double v : z.data()) s += v, ss += v * v;
    CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ss / 4.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(Normalizer::identity().applied(ds.inputs) == ds.inputs);
    CHECK_THROWS_AS(Normalizer::fit(make_dataset({}, {}, 2)), InputError);
}
