#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "ptrain/errors.hpp"
#include "ptrain/network.hpp"
#include "ptrain/perturb.hpp"
#include "ptrain/rng.hpp"
#include "ptrain/verify.hpp"

using namespace ptrain;

namespace {

LayeredNet linear(Tensor w) { return LayeredNet({Layer{std::move(w), std::nullopt, Activation::identity}}); }

Tensor random_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    Tensor t({rows, cols});
    for (double& v : t.data()) v = d(rng);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const ParamTensors& a, const ParamTensors& b) {
    REQUIRE(a.same_layout(b));
    const auto fa = a.flatten(), fb = b.flatten();
    double m = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

}  // namespace

TEST_CASE("construction enforces chaining and an identity head") {
    CHECK_THROWS_AS(LayeredNet(std::vector<Layer>{}), DimensionError);
    CHECK_THROWS_AS(LayeredNet({Layer{Tensor({3, 2}), std::nullopt, Activation::relu},
                                Layer{Tensor({2, 4}), std::nullopt, Activation::identity}}),
                    DimensionError);
    CHECK_THROWS_AS(LayeredNet({Layer{Tensor({3, 2}), Tensor({2}), Activation::identity}}), DimensionError);
    CHECK_THROWS_AS(LayeredNet({Layer{Tensor({3, 2}), std::nullopt, Activation::relu}}), InputError);

    const std::size_t widths[] = {5, 7, 3};
    const LayeredNet net = make_mlp(widths, true, 0);
    CHECK(net.depth() == 2);
    CHECK(net.input_width() == 5);
    CHECK(net.output_width() == 3);
    CHECK(net.parameter_count() == 5 * 7 + 7 + 7 * 3 + 3);
    CHECK(net.activation(0) == Activation::relu);
    CHECK(net.activation(1) == Activation::identity);
}

TEST_CASE("fan-in initialisation") {
    const std::size_t widths[] = {200, 400, 10};
    const LayeredNet net = make_mlp(widths, true, 9);
    double ss = 0.0;
    for (double v : net.weight(0).data()) ss += v * v;
    const double std0 = std::sqrt(ss / static_cast<double>(net.weight(0).size()));
    CHECK(std0 == doctest::Approx(std::sqrt(2.0 / 200.0)).epsilon(0.01));
    CHECK(frobenius_norm(*net.bias(0)) == 0.0);
    CHECK(make_mlp(widths, true, 9) == net);
    CHECK_FALSE(make_mlp(widths, true, 10) == net);
}

TEST_CASE("forward") {
    SUBCASE("identity network") {
        const auto t = forward(linear(Tensor::identity(2)), Tensor::vector({1, 2}));
        CHECK(t.logits() == Tensor::vector({1, 2}));
        CHECK(t.depth() == 1);
    }
    SUBCASE("relu clamps negatives") {
        const LayeredNet net({Layer{Tensor::identity(2), std::nullopt, Activation::relu},
                              Layer{Tensor::identity(2), std::nullopt, Activation::identity}});
        const auto t = forward(net, Tensor::vector({-1, 2}));
        CHECK(t.activations[0] == Tensor::vector({0, 2}));
        CHECK(t.pre_activations[0] == Tensor::vector({-1, 2}));
    }
    SUBCASE("hand product") {
        const auto t = forward(linear(Tensor::matrix({{1, 1}})), Tensor::vector({2, 3}));
        CHECK(t.pre_activations[0] == Tensor::vector({5}));
    }
    SUBCASE("bias is added") {
        const LayeredNet net({Layer{Tensor::matrix({{1, 1}}), Tensor::vector({-0.5}), Activation::identity}});
        CHECK(forward(net, Tensor::vector({2, 3})).logits() == Tensor::vector({4.5}));
    }
    SUBCASE("width mismatch") {
        CHECK_THROWS_AS(forward(linear(Tensor::identity(2)), Tensor::vector({1, 2, 3})), DimensionError);
    }
    SUBCASE("determinism and relu consistency") {
        const std::size_t widths[] = {6, 9, 9, 4};
        const LayeredNet net = make_mlp(widths, true, 3);
        const Tensor x = random_rows(5, 6, 4);
        const auto a = forward(net, x), b = forward(net, x);
        CHECK(a.activations == b.activations);
        CHECK(a.pre_activations == b.pre_activations);
        CHECK(a.depth() == 3);
        for (std::size_t h = 0; h + 1 < a.depth(); ++h)
            for (std::size_t i = 0; i < a.pre_activations[h].size(); ++i)
                CHECK(a.activations[h][i] == std::max(a.pre_activations[h][i], 0.0));
    }
    SUBCASE("batched rows equal per-sample traces") {
        const std::size_t widths[] = {6, 9, 4};
        const LayeredNet net = make_mlp(widths, true, 3);
        const Tensor x = random_rows(3, 6, 8);
        const auto batch = forward(net, x);
        for (std::size_t r = 0; r < 3; ++r)
            CHECK(max_abs_diff(row_as_vector(batch.logits(), r), forward(net, row_as_vector(x, r)).logits()) <=
                  1e-15);
    }
}

TEST_CASE("cross entropy") {
    CHECK(cross_entropy(Tensor::vector({0.3, 0.3, 0.3, 0.3}), 2) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    CHECK(cross_entropy(Tensor::vector({1000, 0}), 0) == doctest::Approx(0.0));
    CHECK(std::isfinite(cross_entropy(Tensor::vector({1000, 0}), 1)));
    CHECK(cross_entropy(Tensor::vector({1000, 0}), 1) == doctest::Approx(1000.0));
    CHECK(cross_entropy(Tensor::vector({1, 2}), 1) == doctest::Approx(0.313261687518223).epsilon(1e-13));
    CHECK_THROWS_AS(cross_entropy(Tensor::vector({1, 2}), 2), InputError);
    const Tensor p = softmax(Tensor::vector({1, 2, 3}));
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("backward") {
    SUBCASE("saturated softmax gives vanishing weight gradients") {
        const LayeredNet net({Layer{Tensor::matrix({{1, 0}, {0, 1}}), std::nullopt, Activation::relu},
                              Layer{Tensor::matrix({{1, 0}, {0, 1}}), std::nullopt, Activation::identity}});
        const auto t = forward(net, Tensor::vector({50, 0}));
        const auto g = backward(net, t, 0);
        for (const auto& w : g.params.weights)
            for (double v : w.data()) CHECK(std::abs(v) <= 1e-15);
    }
    SUBCASE("linear softmax closed form") {
        const Tensor w = Tensor::matrix({{0.5, -1.0, 2.0}, {1.5, 0.25, -0.5}, {0.0, 1.0, 1.0}});
        const Tensor x = Tensor::vector({0.2, -0.7, 1.1});
        const LayeredNet net = linear(w);
        const auto t = forward(net, x);
        Tensor delta = softmax(t.logits());
        delta[1] -= 1.0;
        const auto g = backward(net, t, 1);
        CHECK(max_abs_diff(g.params.weights[0], outer(delta, x)) <= 1e-15);
        CHECK(max_abs_diff(g.pre_activations[0], delta) <= 1e-15);
        const Tensor wt_delta({3}, matmul_tn(w, Tensor({3, 1}, delta.values())).values());
        CHECK(max_abs_diff(g.input, wt_delta) <= 1e-15);
    }
    SUBCASE("central differences on random nets with biases") {
        GradCheckSpec spec;
        spec.with_bias = true;
        const CheckReport r = check_gradients(spec, 12, 2024);
        CHECK(r.pass);
        CHECK(r.measured <= 1e-5);
    }
    SUBCASE("central differences catch a wrong backward") {
        const CheckReport r = check_gradients({}, 4, 2024, mutated_backward);
        CHECK_FALSE(r.pass);
    }
    SUBCASE("trace from another net") {
        const std::size_t a[] = {3, 4, 2}, b[] = {3, 5, 2}, c[] = {3, 4, 4, 2};
        const auto t = forward(make_mlp(a, false, 0), Tensor::vector({1, 2, 3}));
        CHECK_THROWS_AS(backward(make_mlp(b, false, 0), t, 0), ConsistencyError);
        CHECK_THROWS_AS(backward(make_mlp(c, false, 0), t, 0), ConsistencyError);
        CHECK_THROWS_AS(backward(make_mlp(a, false, 0), t, 2), InputError);
    }
}

TEST_CASE("batch loss and gradient") {
    const std::size_t widths[] = {4, 8, 3};
    const LayeredNet net = make_mlp(widths, true, 12);
    const Tensor x = random_rows(2, 4, 13);
    const std::size_t y[] = {2, 0};
    const Tensor s1 = row_as_vector(x, 0), s2 = row_as_vector(x, 1);
    const GradientSet g1 = backward(net, forward(net, s1), y[0]);
    const GradientSet g2 = backward(net, forward(net, s2), y[1]);

    SUBCASE("one sample") {
        const auto r = batch_loss_and_grad(net, as_row(s1), std::span(y, 1));
        CHECK(r.loss == doctest::Approx(cross_entropy(forward(net, s1).logits(), y[0])).epsilon(1e-15));
        CHECK(max_abs_diff(r.grad.params, g1.params) <= 1e-15);
    }
    SUBCASE("duplicated sample") {
        Tensor dup({2, 4});
        for (std::size_t j = 0; j < 4; ++j) dup.at(0, j) = dup.at(1, j) = s1[j];
        const std::size_t yy[] = {2, 2};
        const auto r = batch_loss_and_grad(net, dup, yy);
        CHECK(max_abs_diff(r.grad.params, g1.params) <= 1e-15);
    }
    SUBCASE("two samples average") {
        const auto r = batch_loss_and_grad(net, x, y);
        ParamTensors mean = g1.params;
        const auto f2 = g2.params.flatten();
        std::size_t k = 0;
        mean.for_each([&](Tensor& t) {
            for (double& v : t.data()) v = 0.5 * (v + f2[k++]);
        });
        CHECK(max_abs_diff(r.grad.params, mean) <= 1e-14);
        const double l = 0.5 * (cross_entropy(forward(net, s1).logits(), y[0]) +
                                cross_entropy(forward(net, s2).logits(), y[1]));
        CHECK(r.loss == doctest::Approx(l).epsilon(1e-14));
        CHECK(batch_loss(net, x, y) == doctest::Approx(l).epsilon(1e-14));
    }
    SUBCASE("empty batch") {
        CHECK_THROWS_AS(batch_loss_and_grad(net, Tensor({0, 4}), {}), InputError);
    }
}

TEST_CASE("perturbed copy") {
    const LayeredNet net({Layer{Tensor::matrix({{2, 3}}), Tensor::vector({4}), Activation::identity}});
    NoiseDraw ones{NoiseMode::multiplicative, zeros_like(net)};
    ones.values.for_each([](Tensor& t) {
        for (double& v : t.data()) v = 1.0;
    });
    CHECK(perturbed_copy(net, ones) == net);
    CHECK(perturbed_copy(net, NoiseDraw{NoiseMode::additive, zeros_like(net)}) == net);

    NoiseDraw xi{NoiseMode::multiplicative, zeros_like(net)};
    xi.values.weights[0] = Tensor::matrix({{0.5, 2}});
    xi.values.biases[0] = Tensor::vector({0.25});
    const LayeredNet p = perturbed_copy(net, xi);
    CHECK(p.weight(0) == Tensor::matrix({{1, 6}}));
    CHECK(*p.bias(0) == Tensor::vector({1}));

    NoiseDraw add{NoiseMode::additive, xi.values};
    CHECK(perturbed_copy(net, add).weight(0) == Tensor::matrix({{2.5, 5}}));

    SUBCASE("no aliasing") {
        const LayeredNet before = net;
        LayeredNet copy = perturbed_copy(net, ones);
        copy.params().weights[0][0] = 99.0;
        CHECK(net == before);
    }
    SUBCASE("layout mismatch") {
        const std::size_t widths[] = {2, 3, 1};
        NoiseDraw wrong{NoiseMode::multiplicative, zeros_like(make_mlp(widths, true, 0))};
        CHECK_THROWS_AS(perturbed_copy(net, wrong), DimensionError);
    }
}

TEST_CASE("predict breaks ties toward the lowest class") {
    const LayeredNet net = linear(Tensor::matrix({{1, 0}, {1, 0}, {0, 1}}));
    const auto p = predict(net, Tensor::matrix({{1, 0}, {0, 1}, {0, 0}}));
    CHECK(p == std::vector<std::size_t>{0, 2, 0});
}

TEST_CASE("checkpoint") {
    const std::size_t widths[] = {5, 6, 3};
    const LayeredNet net = make_mlp(widths, true, 77);

    SUBCASE("round trip is bitwise") {
        std::stringstream s;
        write_checkpoint(net, s);
        CHECK(read_checkpoint(s) == net);
    }
    SUBCASE("byte layout") {
        const LayeredNet tiny({Layer{Tensor::matrix({{1.5}}), std::nullopt, Activation::identity}});
        std::stringstream s;
        write_checkpoint(tiny, s);
        const std::string bytes = s.str();
        // magic, version 1, count 1, out 1, in 1, no bias, identity, 1.5
        const std::string want("PTNN\x01\0\0\0\x01\0\0\0\x01\0\0\0\x01\0\0\0\0\0\0\0\0\0\0\0\xf8\x3f", 30);
        CHECK(bytes == want);
    }
    SUBCASE("bad magic") {
        std::stringstream s;
        write_checkpoint(net, s);
        std::string bytes = s.str();
        bytes[0] = 'X';
        std::istringstream in(bytes);
        CHECK_THROWS_AS(read_checkpoint(in), FormatError);
    }
    SUBCASE("unknown version or activation") {
        std::stringstream s;
        write_checkpoint(net, s);
        std::string v = s.str();
        v[4] = 2;
        std::istringstream in(v);
        CHECK_THROWS_AS(read_checkpoint(in), FormatError);
        std::string a = s.str();
        a[12 + 9] = 7;
        std::istringstream in2(a);
        CHECK_THROWS_AS(read_checkpoint(in2), FormatError);
    }
    SUBCASE("truncated") {
        std::stringstream s;
        write_checkpoint(net, s);
        const std::string bytes = s.str();
        std::istringstream in(bytes.substr(0, bytes.size() - 3));
        CHECK_THROWS_AS(read_checkpoint(in), IoError);
    }
}
