#include <cmath>
#include <random>

#include <doctest.h>

#include "ptrain/corrupt.hpp"
#include "ptrain/errors.hpp"
#include "ptrain/rng.hpp"

using namespace ptrain;

namespace {

Tensor constant(std::size_t n, double v) { return Tensor({n}, v); }

// Strength: larger is stronger for every kind.
double strength(CorruptionKind kind, int s) {
    const double p = severity_parameter(kind, s);
    if (kind == CorruptionKind::shot_noise) return 1.0 / p;
    if (kind == CorruptionKind::contrast) return 1.0 - p;
    return p;
}

double mean_shift(const CorruptionSpec& spec, const Dataset& probe) {
    double acc = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const Tensor x = probe.sample(i);
        acc += frobenius_norm(subtract(apply(spec, x, derive_seed(99, {i}), probe.channels), x));
    }
    return acc / static_cast<double>(probe.size());
}

}  // namespace

TEST_CASE("names and tables") {
    for (CorruptionKind k : kAllCorruptions) CHECK(parse_corruption_kind(to_string(k)) == k);
    CHECK(parse_corruption_kind("none") == CorruptionKind::none);
    CHECK_THROWS_AS(parse_corruption_kind("fog"), InputError);
    CHECK(severity_parameter(CorruptionKind::gaussian_noise, 3) == 0.18);
    CHECK(severity_parameter(CorruptionKind::brightness, 2) == 0.1);
    CHECK(severity_parameter(CorruptionKind::contrast, 5) == 0.15);
    CHECK(severity_parameter(CorruptionKind::shot_noise, 1) == 60);
    CHECK_THROWS_AS(severity_parameter(CorruptionKind::brightness, 0), InputError);
    CHECK_THROWS_AS(severity_parameter(CorruptionKind::brightness, 6), InputError);
    for (CorruptionKind k : kAllCorruptions)
        for (int s = 1; s < 5; ++s) {
            CAPTURE(to_string(k));
            CHECK(strength(k, s + 1) > strength(k, s));
        }
}

TEST_CASE("apply") {
    const Tensor x = synth_blobs(1, 1, 64, 0.2, 1).sample(0);

    SUBCASE("none is the identity") {
        CHECK(apply({CorruptionKind::none, 1}, x, 5) == x);
        CHECK(apply_unclipped({CorruptionKind::none, 1}, x, 5) == x);
    }
    SUBCASE("brightness on a constant image") {
        const Tensor g = apply({CorruptionKind::brightness, 2}, constant(16, 0.5), 0);
        for (double v : g.data()) CHECK(v == doctest::Approx(0.6).epsilon(1e-15));
    }
    SUBCASE("contrast pulls towards the mean") {
        const Tensor g = apply({CorruptionKind::contrast, 1}, Tensor::vector({0.2, 0.4, 0.6, 0.8}), 0);
        CHECK(g[0] == doctest::Approx(0.275));
        CHECK(g[3] == doctest::Approx(0.725));
    }
    SUBCASE("gaussian noise residual std at severity 3") {
        const Tensor c = constant(10000, 0.5);
        const Tensor g = apply_unclipped({CorruptionKind::gaussian_noise, 3}, c, 12);
        double s = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += g[i] - c[i];
        const double mean = s / 1e4;
        for (std::size_t i = 0; i < c.size(); ++i) ss += (g[i] - c[i] - mean) * (g[i] - c[i] - mean);
        CHECK(std::abs(std::sqrt(ss / (1e4 - 1)) - 0.18) <= 0.005);
    }
    SUBCASE("impulse noise hits about the table fraction with 0 or 1") {
        const Tensor c = constant(100000, 0.5);
        const Tensor g = apply({CorruptionKind::impulse_noise, 5}, c, 3);
        std::size_t hits = 0;
        for (double v : g.data()) {
            CHECK((v == 0.5 || v == 0.0 || v == 1.0));
            hits += v != 0.5;
        }
        CHECK(std::abs(static_cast<double>(hits) / 1e5 - 0.14) <= 0.005);
    }
    SUBCASE("shot noise is unbiased before clipping") {
        const Tensor c = constant(100000, 0.3);
        const Tensor g = apply_unclipped({CorruptionKind::shot_noise, 3}, c, 4);
        double s = 0.0;
        for (double v : g.data()) s += v;
        CHECK(s / 1e5 == doctest::Approx(0.3).epsilon(0.01));
    }
    SUBCASE("pixelate makes constant blocks") {
        Tensor img({16});
        for (std::size_t i = 0; i < 16; ++i) img[i] = static_cast<double>(i) / 15.0;
        const Tensor g = apply({CorruptionKind::pixelate, 1}, img, 0);
        // 4x4 grid, 2x2 blocks
        CHECK(g[0] == g[1]);
        CHECK(g[0] == g[4]);
        CHECK(g[0] == g[5]);
        CHECK(g[2] == g[7]);
        CHECK_FALSE(g[0] == g[2]);
    }
    SUBCASE("blur preserves a constant image and smooths an impulse") {
        const Tensor flat = apply({CorruptionKind::gaussian_blur, 5}, constant(64, 0.4), 0);
        for (double v : flat.data()) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));
        Tensor spike({64});
        spike[27] = 1.0;
        const Tensor g = apply({CorruptionKind::gaussian_blur, 3}, spike, 0);
        CHECK(g[27] < 1.0);
        CHECK(g[28] > 0.0);
        CHECK(g[28] == doctest::Approx(g[26]).epsilon(1e-12));
    }
    SUBCASE("range, purity and determinism") {
        for (CorruptionKind k : kAllCorruptions)
            for (int s = 1; s <= 5; ++s) {
                const Tensor before = x;
                const Tensor a = apply({k, s}, x, 77);
                CHECK(x == before);
                CHECK(a == apply({k, s}, x, 77));
                for (double v : a.data()) CHECK((v >= 0.0 && v <= 1.0));
            }
        CHECK_FALSE(apply({CorruptionKind::gaussian_noise, 1}, x, 1) == apply({CorruptionKind::gaussian_noise, 1}, x, 2));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(apply({CorruptionKind::brightness, 0}, x, 0), InputError);
        CHECK_THROWS_AS(apply({CorruptionKind::none, 9}, x, 0), InputError);
        CHECK_THROWS_AS(apply({CorruptionKind::pixelate, 1}, constant(10, 0.5), 0), InputError);
        CHECK_THROWS_AS(apply({CorruptionKind::gaussian_blur, 1}, constant(15, 0.5), 0, 3), InputError);
        CHECK_THROWS_AS(apply({CorruptionKind::brightness, 1}, Tensor::vector({1.5}), 0), InputError);
    }
}

TEST_CASE("mean shift grows with severity for every kind") {
    const Dataset probe = synth_blobs(40, 4, 64, 0.2, 11);
    for (CorruptionKind k : kAllCorruptions) {
        double prev = 0.0;
        for (int s = 1; s <= 5; ++s) {
            const double m = mean_shift({k, s}, probe);
            CAPTURE(to_string(k));
            CAPTURE(s);
            CHECK(m > prev);
            prev = m;
        }
    }
}

TEST_CASE("corrupt_dataset") {
    const Dataset ds = synth_blobs(20, 2, 16, 0.2, 3);
    const CorruptionSpec spec{CorruptionKind::gaussian_noise, 2};
    const Dataset g = corrupt_dataset(spec, ds, 5);
    CHECK(g.labels == ds.labels);
    for (std::size_t i = 0; i < ds.size(); ++i)
        CHECK(g.sample(i) == apply(spec, ds.sample(i), derive_seed(5, {i}), 1));
    CHECK(corrupt_dataset({CorruptionKind::none, 1}, ds, 5).inputs == ds.inputs);
    CHECK_THROWS_AS(corrupt_dataset({CorruptionKind::pixelate, 1}, synth_blobs(4, 2, 10, 0.1, 0), 0), InputError);
}

TEST_CASE("bound estimate") {
    const Dataset ds = synth_blobs(30, 3, 25, 0.1, 6);
    CHECK(estimate_bound({CorruptionKind::none, 3}, ds, 0) == 0.0);
    SUBCASE("uniform shift without clipping") {
        Dataset low = ds;
        for (double& v : low.inputs.data()) v = std::min(v, 0.9);
        CHECK(estimate_bound({CorruptionKind::brightness, 2}, low, 0) == doctest::Approx(0.1 * 5.0).epsilon(1e-12));
    }
    SUBCASE("brute-force recomputation for a stochastic kind") {
        const CorruptionSpec spec{CorruptionKind::gaussian_noise, 4};
        double want = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i)
            for (std::uint64_t d = 0; d < 10; ++d) {
                const Tensor x = ds.sample(i);
                want = std::max(want, frobenius_norm(subtract(apply(spec, x, derive_seed(8, {i, d})), x)));
            }
        CHECK(estimate_bound(spec, ds, 8) == want);
        CHECK(estimate_bound(spec, ds, 8) == estimate_bound(spec, ds, 8));
    }
    CHECK_THROWS_AS(estimate_bound({CorruptionKind::brightness, 1}, make_dataset({}, {}, 2), 0), InputError);
}

TEST_CASE("fgsm") {
    const std::size_t widths[] = {10, 12, 3};
    const LayeredNet net = make_mlp(widths, true, 21);
    const Dataset ds = synth_blobs(100, 3, 10, 0.2, 22);

    SUBCASE("zero epsilon") {
        CHECK(fgsm(net, ds.sample(0), ds.labels[0], 0.0) == ds.sample(0));
    }
    SUBCASE("moves by +-epsilon where not clipped") {
        const double eps = 2.0 / 224.0;
        for (std::size_t i = 0; i < 10; ++i) {
            const Tensor x = ds.sample(i);
            const Tensor a = fgsm(net, x, ds.labels[i], eps);
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (a[j] == 0.0 || a[j] == 1.0) continue;
                const double d = std::abs(a[j] - x[j]);
                CHECK((d == doctest::Approx(eps).epsilon(1e-12) || d == 0.0));
            }
        }
    }
    SUBCASE("first-order ascent") {
        int failures = 0;
        for (std::size_t i = 0; i < 100; ++i) {
            const Tensor x = ds.sample(i);
            const double before = cross_entropy(forward(net, x).logits(), ds.labels[i]);
            const double after = cross_entropy(forward(net, fgsm(net, x, ds.labels[i], 1e-4)).logits(), ds.labels[i]);
            failures += after < before;
        }
        CHECK(failures <= 2);
    }
    SUBCASE("standardised inputs keep the gradient sign") {
        const Normalizer n = Normalizer::fit(ds);
        const Tensor x = ds.sample(3);
        const Tensor a = fgsm(net, x, ds.labels[3], 0.01, n);
        const double before = cross_entropy(forward(net, row_as_vector(n.applied(as_row(x)), 0)).logits(), ds.labels[3]);
        const double after = cross_entropy(forward(net, row_as_vector(n.applied(as_row(a)), 0)).logits(), ds.labels[3]);
        CHECK(after > before);
    }
    CHECK_THROWS_AS(fgsm(net, ds.sample(0), 0, -1.0), InputError);
}
