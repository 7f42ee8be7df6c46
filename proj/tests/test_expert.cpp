#include <cmath>
#include <random>

#include "bnmoe/expert.hpp"
#include "doctest.h"

using namespace bnmoe;

namespace {

MatD two_blob_data(std::size_t n_per_class, std::uint64_t seed, std::vector<int>* labels) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.5);
    MatD X(2 * n_per_class, 2);
    labels->resize(2 * n_per_class);
    for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
        const int cls = i < n_per_class ? 0 : 1;
        const double cx = cls == 0 ? -2.0 : 2.0;
        X(i, 0) = cx + gauss(rng);
        X(i, 1) = -cx + gauss(rng);
        (*labels)[i] = cls;
    }
    return X;
}

}  // namespace

TEST_CASE("initialization is seeded He-uniform with zero biases") {
    const ExpertNet a = init_expert(4, {6, 6}, 11);
    const ExpertNet b = init_expert(4, {6, 6}, 11);
    const ExpertNet c = init_expert(4, {6, 6}, 12);
    REQUIRE(a.dims == std::vector<std::size_t>{4, 6, 6, 2});
    REQUIRE(a.layer_count() == 3);
    CHECK(a.weights[0] == b.weights[0]);
    CHECK(a.weights[1] == b.weights[1]);
    CHECK(a.weights[0].data != c.weights[0].data);

    for (std::size_t l = 0; l < a.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(a.dims[l]));
        for (double w : a.weights[l].data) {
            CHECK(std::abs(w) <= limit);
        }
        for (double bias : a.biases[l]) CHECK(bias == 0.0);
    }
}

TEST_CASE("zeroed network outputs an even softmax") {
    ExpertNet net = init_expert(3, {6, 6}, 1);
    for (auto& W : net.weights) std::fill(W.data.begin(), W.data.end(), 0.0);
    const auto out = net.predict({0.3, -0.7, 2.0});
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("hand-computed forward pass on a one-hidden-unit stack") {
    // dims [1, 1, 2]; relu(w0*x), then logits (w1*hidden, w2*hidden)
    ExpertNet net;
    net.dims = {1, 1, 2};
    net.weights.emplace_back(1, 1);
    net.weights[0](0, 0) = 2.0;
    net.weights.emplace_back(2, 1);
    net.weights[1](0, 0) = 1.0;
    net.weights[1](1, 0) = -1.0;
    net.biases = {{0.5}, {0.0, 0.25}};

    // x = 1: hidden = relu(2.5) = 2.5, logits = (2.5, -2.25)
    const auto out = net.predict({1.0});
    const double z0 = std::exp(2.5), z1 = std::exp(-2.25);
    CHECK(out[0] == doctest::Approx(z0 / (z0 + z1)).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(z1 / (z0 + z1)).epsilon(1e-14));

    // x = -1: hidden = relu(-1.5) = 0, logits = (0, 0.25)
    const auto neg = net.predict({-1.0});
    const double w0 = 1.0, w1 = std::exp(0.25);
    CHECK(neg[0] == doctest::Approx(w0 / (w0 + w1)).epsilon(1e-14));
}

TEST_CASE("softmax output sums to one and is shift-invariant") {
    const ExpertNet net = init_expert(5, {6, 6}, 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(5);
        for (auto& v : x) v = gauss(rng);
        const auto out = net.predict(x);
        CHECK(out[0] + out[1] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(out[0] > 0.0);
        CHECK(out[1] > 0.0);
        CHECK(net.predict(x) == out);  // dropout off at inference: repeatable
    }
    CHECK_THROWS_AS(net.predict({1.0}), SizeError);
}

TEST_CASE("training separates two blobs and is bit-deterministic") {
    std::vector<int> y;
    const MatD X = two_blob_data(100, 21, &y);
    TrainSpec spec;
    spec.seed = 77;
    const ExpertNet net = train_expert(X, y, spec);
    const ExpertNet again = train_expert(X, y, spec);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(net.weights[l].data == again.weights[l].data);
        CHECK(net.biases[l] == again.biases[l]);
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto out = net.predict(X.row(i));
        hits += (out[1] > out[0] ? 1 : 0) == y[i] ? 1 : 0;
    }
    CHECK(static_cast<double>(hits) / static_cast<double>(X.rows) >= 0.95);
}

TEST_CASE("single-class cluster drives the constant predictor") {
    MatD X(20, 2);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : X.data) v = gauss(rng);
    const std::vector<int> y(20, 1);
    TrainSpec spec;
    spec.seed = 5;
    const ExpertNet net = train_expert(X, y, spec);
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto out = net.predict(X.row(i));
        CHECK(out[1] > out[0]);
    }
}

TEST_CASE("degenerate clusters below five rows still train full-batch") {
    MatD X(3, 2);
    X(0, 0) = -1.0;
    X(1, 0) = 0.0;
    X(2, 0) = 1.0;
    const std::vector<int> y = {0, 0, 1};
    TrainSpec spec;
    spec.seed = 2;
    const ExpertNet net = train_expert(X, y, spec);  // warns on stderr
    CHECK(net.dims.front() == 2);
    const auto out = net.predict(X.row(0));
    CHECK(std::isfinite(out[0]));
}

TEST_CASE("train spec validation") {
    TrainSpec spec;
    spec.epochs = 0;
    CHECK_THROWS_AS(spec.validate(), ParamError);
    spec = TrainSpec{};
    spec.dropout_rate = 1.0;
    CHECK_THROWS_AS(spec.validate(), ParamError);
    spec = TrainSpec{};
    spec.minibatch_fraction = 0.0;
    CHECK_THROWS_AS(spec.validate(), ParamError);
    spec = TrainSpec{};
    spec.learning_rate = 0.0;
    CHECK_THROWS_AS(spec.validate(), ParamError);
    spec = TrainSpec{};
    spec.hidden = {};
    CHECK_THROWS_AS(spec.validate(), ParamError);

    MatD X(6, 1);
    const std::vector<int> bad = {0, 1, 2, 0, 1, 0};
    spec = TrainSpec{};
    CHECK_THROWS_AS(train_expert(X, bad, spec), DataError);
}

TEST_CASE("cross entropy of a known softmax") {
    ExpertNet net = init_expert(1, {6}, 1);
    for (auto& W : net.weights) std::fill(W.data.begin(), W.data.end(), 0.0);
    // uniform softmax: CE = -ln(0.5) on every sample
    MatD X(2, 1);
    X(0, 0) = 3.0;
    X(1, 0) = -4.0;
    const std::vector<int> y = {0, 1};
    CHECK(cross_entropy(net, X, y) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("analytic backprop agrees with central differences across seeds") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed * 31 + 7);
        std::normal_distribution<double> gauss(0.0, 1.0);
        MatD X(8, 3);
        for (auto& v : X.data) v = gauss(rng);
        std::vector<int> y(8);
        for (auto& label : y) label = static_cast<int>(rng() % 2);
        const ExpertNet net = init_expert(3, {6, 6}, seed);
        CHECK(gradient_check(net, X, y, 1e-4) < 1e-4);
    }
}

TEST_CASE("gradient check epsilon must stay in its stable band") {
    const ExpertNet net = init_expert(2, {6, 6}, 1);
    MatD X(4, 2);
    X(0, 0) = 1.0;
    X(1, 1) = -1.0;
    X(2, 0) = 0.5;
    X(3, 1) = 2.0;
    const std::vector<int> y = {0, 1, 1, 0};
    CHECK_THROWS_AS(gradient_check(net, X, y, 1e-7), ParamError);
    CHECK_THROWS_AS(gradient_check(net, X, y, 1e-2), ParamError);
}

TEST_CASE("expert JSON round-trips bit-exactly") {
    std::vector<int> y;
    const MatD X = two_blob_data(30, 3, &y);
    TrainSpec spec;
    spec.seed = 9;
    spec.epochs = 5;
    const ExpertNet net = train_expert(X, y, spec);
    const std::string text = expert_to_json(net);
    const ExpertNet back = expert_from_json(text);
    CHECK(back.dims == net.dims);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        CHECK(back.weights[l].data == net.weights[l].data);
        CHECK(back.biases[l] == net.biases[l]);
    }
    CHECK(expert_to_json(back) == text);
}
