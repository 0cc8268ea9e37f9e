#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "ptrain/config.hpp"
#include "ptrain/errors.hpp"

using namespace ptrain;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST_CASE("minimal file takes the defaults") {
    const ExperimentConfig c = parse("[data]\nkind = blobs\n");
    CHECK(c.data.kind == DataConfig::Kind::blobs);
    CHECK(c.defaults.damp_sigma == 0.2);
    CHECK(c.defaults.daap_sigma == 0.2);
    CHECK(c.defaults.sam_rho == 0.045);
    CHECK(c.defaults.asam_rho == 1.0);
    CHECK(c.run.optimizer.weight_decay == 5e-4);
    CHECK(c.run.optimizer.momentum == 0.9);
    CHECK(c.run.optimizer.nesterov);
    CHECK(c.run.batch_size == 128);
    CHECK(c.run.sub_batches == 8);
    CHECK(c.methods == std::vector<Method>{Method::sgd, Method::damp});
    CHECK(c.corruptions.size() == 7);
    CHECK(c.severities == std::vector<int>{1, 2, 3, 4, 5});
    CHECK(c.baseline == Method::sgd);
    CHECK(lr_at(c.run.schedule, 0, 100) == 0.1);
}

TEST_CASE("full file") {
    const ExperimentConfig c = parse(R"(# desk run
[data]
kind = blobs
blobs_train = 500
blobs_spread = 0.1
blobs_seed = 4

[model]
hidden = 32, 16
bias = false

[train]
epochs = 3
batch_size = 64
sub_batches = 4
schedule = constant
lr = 0.05
nesterov = false
sigma = 0.1
train_corruption = contrast
train_severity = 2

[benchmark]
methods = SGD, DAMP, ASAM
corruptions = contrast, pixelate
severities = 5, 1
seeds = 3, 1
out = out/x
)");
    CHECK(c.data.blobs_train == 500);
    CHECK(c.data.blobs_spread == 0.1);
    CHECK(c.run.hidden == std::vector<std::size_t>{32, 16});
    CHECK_FALSE(c.run.bias);
    CHECK(c.run.epochs == 3);
    CHECK(lr_at(c.run.schedule, 7, 10) == 0.05);
    CHECK_FALSE(c.run.optimizer.nesterov);
    CHECK(c.defaults.damp_sigma == 0.1);
    CHECK(c.defaults.train_corruption.kind == CorruptionKind::contrast);
    CHECK(c.defaults.train_corruption.severity == 2);
    CHECK(c.methods == std::vector<Method>{Method::sgd, Method::damp, Method::asam});
    CHECK(c.corruptions == std::vector<CorruptionKind>{CorruptionKind::contrast, CorruptionKind::pixelate});
    CHECK(c.severities == std::vector<int>{1, 5});
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 1});
    CHECK(c.out_dir == "out/x");

    SUBCASE("per-method run configs") {
        const RunConfig damp = run_config_for(c, Method::damp, 9);
        CHECK(damp.seed == 9);
        CHECK(damp.sub_batches == 4);
        CHECK(damp.perturbation.sigma == 0.1);
        CHECK(run_config_for(c, Method::sgd, 9).sub_batches == 1);
        CHECK(run_config_for(c, Method::asam, 9).perturbation.rho == 1.0);
        const RunConfig aug = run_config_for(c, Method::corruption_aug, 9);
        CHECK(aug.train_corruption.kind == CorruptionKind::contrast);
        CHECK(aug.train_corruption.severity == 2);
    }
}

TEST_CASE("errors name the line") {
    CHECK(contains(error_of("[data]\nkind = blobs\n[train]\nsigma = -1\n"), "line 4"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[train]\nsigma = -1\n"), "sigma"));
    CHECK(contains(error_of("[data]\nkind = blobs\nfoo = 1\n"), "line 3: unknown key 'foo'"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[extra]\n"), "line 3: unknown section"));
    CHECK(contains(error_of("[data]\nkind = blobs\nkind = idx\n"), "line 3"));
    CHECK(contains(error_of("[data]\nkind = blobs\nkind = idx\n"), "duplicate"));
    CHECK(contains(error_of("[model]\nbias = true\n"), "kind"));
    CHECK(contains(error_of("kind = blobs\n"), "line 1"));
    CHECK(contains(error_of("[data]\nkind blobs\n"), "line 2"));
    CHECK(contains(error_of("[data\nkind = blobs\n"), "line 1"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[train]\nepochs = 2.5\n"), "line 4"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[benchmark]\nseeds = 1, 2, 1\n"), "listed twice"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[benchmark]\nmethods = SGD, SGD\n"), "listed twice"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[benchmark]\nmethods = LBFGS\n"), "unknown method"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[benchmark]\ncorruptions = fog\n"), "unknown corruption"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[benchmark]\nseverities = 0\n"), "1..5"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[train]\nschedule = step\n"), "line 4"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[train]\ndropout_p = 1\n"), "line 4"));
    CHECK(contains(error_of("[data]\nkind = blobs\nval_fraction = 1\n"), "line 3"));
    CHECK(contains(error_of("[data]\nkind = blobs\n[model]\nhidden = 8,,4\n"), "line 4"));
    // cross-field
    CHECK_FALSE(error_of("[data]\nkind = blobs\n[train]\nbatch_size = 100\n").empty());
    CHECK_FALSE(error_of("[data]\nkind = idx\n").empty());
    CHECK_FALSE(error_of("[data]\nkind = cifar10\n").empty());
    CHECK_THROWS_AS(parse_config_file("/nonexistent/ptrain.cfg"), IoError);
}

TEST_CASE("config file errors carry the path") {
    const auto dir = std::filesystem::path(PTRAIN_TEST_TMP);
    std::filesystem::create_directories(dir);
    const auto path = dir / "bad.cfg";
    std::ofstream(path) << "[data]\nkind = blobs\nblobs_dim = 0\n";
    try {
        parse_config_file(path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "bad.cfg"));
        CHECK(contains(e.what(), "line 3"));
    }
}

TEST_CASE("schedules") {
    const ScheduleSpec cifar = make_schedule("cifar", std::nullopt);
    CHECK(lr_at(cifar, 0, 1000) == 0.1);
    CHECK(lr_at(cifar, 499, 1000) == doctest::Approx(0.1));
    CHECK(lr_at(cifar, 950, 1000) == doctest::Approx(0.001));
    const ScheduleSpec scaled = make_schedule("cifar", 0.4);
    CHECK(lr_at(scaled, 950, 1000) == doctest::Approx(0.004));
    const ScheduleSpec inet = make_schedule("imagenet", std::nullopt);
    CHECK(lr_at(inet, 0, 900) == doctest::Approx(8e-4));
    CHECK(lr_at(inet, 50, 900) == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(lr_at(make_schedule("constant", 0.3), 5, 10) == 0.3);
    CHECK_THROWS_AS(make_schedule("step", std::nullopt), ConfigError);
}

TEST_CASE("training hash and echo") {
    const std::string base = "[data]\nkind = blobs\n";
    const ExperimentConfig a = parse(base);

    CHECK(training_hash(a, Method::sgd) == training_hash(parse(base), Method::sgd));
    CHECK(training_hash(a, Method::sgd) != training_hash(a, Method::damp));
    // seeds, evaluation lists and other methods' strengths do not enter
    const ExperimentConfig b = parse(base + "[train]\nsigma = 0.3\nsub_batches = 4\n[benchmark]\nseeds = 5\n"
                                            "corruptions = contrast\n");
    CHECK(training_hash(a, Method::sgd) == training_hash(b, Method::sgd));
    CHECK(training_hash(a, Method::sam) == training_hash(b, Method::sam));
    CHECK(training_hash(a, Method::damp) != training_hash(b, Method::damp));
    CHECK(training_hash(a, Method::sgd) != training_hash(parse(base + "blobs_spread = 0.3\n"), Method::sgd));
    CHECK(training_hash(a, Method::sgd) != training_hash(parse(base + "[train]\nepochs = 11\n"), Method::sgd));

    const std::string echo = echo_config(a);
    CHECK(contains(echo, "data.kind = blobs\n"));
    CHECK(contains(echo, "train.strength.DAMP = 0.20000000000000001\n"));
    CHECK(contains(echo, "train.weight_decay = 0.00050000000000000001\n"));
    CHECK(contains(echo, "benchmark.seeds = 0\n"));
    CHECK(echo == echo_config(parse(base)));
    CHECK(echo != echo_config(b));
}
