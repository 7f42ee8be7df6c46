#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "bnmoe/gated_ensemble.hpp"
#include "bnmoe/textio.hpp"
#include "doctest.h"

using namespace bnmoe;

namespace {

// Expert with no hidden layer: logits = (w0*x + b0, w1*x + b1), then softmax.
ExpertNet linear_expert(double w0, double b0, double w1, double b1) {
    ExpertNet e;
    e.dims = {1, 2};
    e.weights.emplace_back(2, 1);
    e.weights[0](0, 0) = w0;
    e.weights[0](1, 0) = w1;
    e.biases.push_back({b0, b1});
    return e;
}

// Constant-output expert: softmax of fixed biases, input ignored.
ExpertNet const_expert(double p0) {
    return linear_expert(0.0, std::log(p0 / (1.0 - p0)), 0.0, 0.0);
}

// One feature, K gate states, no edges: the gate posterior equals the prior
// no matter what evidence arrives, which makes every expectation computable
// by hand.
GatedEnsemble tiny_ensemble(const std::vector<double>& gate_prior, double h,
                            std::vector<ExpertNet> experts) {
    const std::size_t k = gate_prior.size();
    GatedEnsemble ens;
    ens.h = h;
    ens.experts = std::move(experts);

    ens.bn.dag = Dag(2);
    ens.bn.gate_node = 1;
    ens.bn.gate_states = static_cast<int>(k);
    ens.bn.discretizer.edges = {{0.0}};

    Cpt feat;
    feat.node = 0;
    feat.r = 2;
    feat.table = MatD(1, 2);
    feat.table(0, 0) = 0.5;
    feat.table(0, 1) = 0.5;

    Cpt gate;
    gate.node = 1;
    gate.r = static_cast<int>(k);
    gate.table = MatD(1, k);
    for (std::size_t c = 0; c < k; ++c) gate.table(0, c) = gate_prior[c];

    ens.bn.cpts = {feat, gate};

    ens.clusters.k = k;
    ens.clusters.centroids = MatD(k, 1);
    for (std::size_t c = 0; c < k; ++c) ens.clusters.centroids(c, 0) = static_cast<double>(c);
    ens.clusters.assignments = {0};
    return ens;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("bnmoe_ens_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("combine is the weighted sum of expert outputs") {
    const std::vector<std::vector<double>> outs = {{0.9, 0.1}, {0.2, 0.8}};
    const std::vector<double> got = combine(outs, {0.6, 0.4});
    CHECK(got[0] == doctest::Approx(0.62).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(0.38).epsilon(1e-12));
    CHECK_THROWS_AS(combine(outs, {1.0}), SizeError);
}

TEST_CASE("positive scaling of the weights never changes the argmax") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> unit(0.01, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::vector<double>> outs(3);
        std::vector<double> w(3);
        for (std::size_t c = 0; c < 3; ++c) {
            const double p = unit(rng);
            outs[c] = {p, 1.0 - p};
            w[c] = unit(rng);
        }
        std::vector<double> scaled = w;
        for (double& v : scaled) v *= 7.25;
        const auto a = combine(outs, w);
        const auto b = combine(outs, scaled);
        CHECK((a[1] > a[0]) == (b[1] > b[0]));
    }
}

TEST_CASE("gate thresholding zeroes small entries without renormalizing") {
    auto ens = tiny_ensemble({0.9995, 0.0005}, 0.001,
                             {const_expert(0.5), const_expert(0.5)});
    const GateRow row = gate_probs(ens, {0.3}, {false});
    CHECK(row.p[0] == doctest::Approx(0.9995).epsilon(1e-12));
    CHECK(row.p[1] == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK(row.p_hat[0] == doctest::Approx(0.9995).epsilon(1e-12));
    CHECK(row.p_hat[1] == 0.0);  // zeroed, and the survivor is left alone
}

TEST_CASE("threshold zero leaves the posterior untouched") {
    auto ens = tiny_ensemble({0.7, 0.3}, 0.0, {const_expert(0.5), const_expert(0.5)});
    const GateRow row = gate_probs(ens, {-1.0}, {false});
    for (std::size_t c = 0; c < 2; ++c) CHECK(row.p_hat[c] == row.p[c]);
}

TEST_CASE("a uniform posterior above the threshold passes through whole") {
    auto ens = tiny_ensemble({0.25, 0.25, 0.25, 0.25}, 0.2,
                             {const_expert(0.5), const_expert(0.5), const_expert(0.5),
                              const_expert(0.5)});
    const GateRow row = gate_probs(ens, {0.1}, {false});
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(row.p_hat[c] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(row.p_hat[c] > 0.0);
    }
}

TEST_CASE("worked prediction: two experts blended by the gate posterior") {
    auto ens = tiny_ensemble({0.6, 0.4}, 0.001, {const_expert(0.9), const_expert(0.2)});
    const Prediction pred = predict_one(ens, {0.3}, {false});
    // 0.6*(0.9,0.1) + 0.4*(0.2,0.8) = (0.62, 0.38)
    CHECK(pred.combined[0] == doctest::Approx(0.62).epsilon(1e-9));
    CHECK(pred.combined[1] == doctest::Approx(0.38).epsilon(1e-9));
    CHECK(pred.label == 0);
    CHECK(pred.imputed == std::vector<int>{-1});
}

TEST_CASE("a tied combination resolves to label zero") {
    auto ens = tiny_ensemble({0.6, 0.4}, 0.0, {const_expert(0.5), const_expert(0.5)});
    const Prediction pred = predict_one(ens, {0.3}, {false});
    CHECK(pred.combined[0] == doctest::Approx(pred.combined[1]).epsilon(1e-15));
    CHECK(pred.label == 0);
}

TEST_CASE("a one-hot gate hands the decision to the surviving expert") {
    // expert 0 prefers class 1 for positive x and class 0 otherwise;
    // expert 1 is its mirror and must not matter at weight zero
    auto ens = tiny_ensemble({0.998, 0.002}, 0.01,
                             {linear_expert(-2.0, 0.0, 2.0, 0.0),
                              linear_expert(2.0, 0.0, -2.0, 0.0)});
    for (double x : {-1.5, -0.2, 0.2, 1.5}) {
        const Prediction pred = predict_one(ens, {x}, {false});
        CHECK(pred.p_hat[1] == 0.0);
        const std::vector<double> solo = ens.experts[0].predict({x});
        CHECK(pred.combined[0] == doctest::Approx(0.998 * solo[0]).epsilon(1e-12));
        CHECK(pred.combined[1] == doctest::Approx(0.998 * solo[1]).epsilon(1e-12));
        CHECK(pred.label == (solo[1] > solo[0] ? 1 : 0));
    }
}

TEST_CASE("an all-zero thresholded gate falls back to the raw posterior") {
    auto ens = tiny_ensemble({0.25, 0.25, 0.25, 0.25}, 0.3,
                             {const_expert(0.9), const_expert(0.9), const_expert(0.9),
                              const_expert(0.9)});
    const GateRow row = gate_probs(ens, {0.1}, {false});
    for (std::size_t c = 0; c < 4; ++c) CHECK(row.p_hat[c] == 0.0);

    const Prediction pred = predict_one(ens, {0.1}, {false});
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(pred.p_hat[c] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pred.combined[0] == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(pred.label == 0);
}

TEST_CASE("batch prediction matches row-by-row prediction") {
    auto ens = tiny_ensemble({0.6, 0.4}, 0.001,
                             {linear_expert(-1.0, 0.2, 1.0, -0.2), const_expert(0.3)});
    MatD S(3, 1);
    S(0, 0) = -2.0;
    S(1, 0) = 0.05;
    S(2, 0) = 3.0;

    const BatchPrediction batch = predict_batch(ens, S);
    CHECK(batch.labels.size() == 3);
    CHECK(batch.P.rows == 3);
    CHECK(batch.P_hat.cols == 2);
    CHECK(batch.combined.cols == 2);
    for (std::size_t r = 0; r < 3; ++r) {
        const Prediction one = predict_one(ens, {S(r, 0)}, {false});
        CHECK(batch.labels[r] == one.label);
        CHECK(batch.combined(r, 0) == one.combined[0]);
        CHECK(batch.combined(r, 1) == one.combined[1]);
        for (std::size_t c = 0; c < 2; ++c) CHECK(batch.P_hat(r, c) == one.p_hat[c]);
        CHECK(batch.imputed(r, 0) == -1);
    }
}

TEST_CASE("batch prediction accepts an empty matrix") {
    auto ens = tiny_ensemble({0.5, 0.5}, 0.001, {const_expert(0.5), const_expert(0.5)});
    const BatchPrediction batch = predict_batch(ens, MatD(0, 0));
    CHECK(batch.labels.empty());
    CHECK(batch.P.rows == 0);
    CHECK(batch.combined.rows == 0);
}

TEST_CASE("batch prediction rejects a column count mismatch") {
    auto ens = tiny_ensemble({0.5, 0.5}, 0.001, {const_expert(0.5), const_expert(0.5)});
    CHECK_THROWS_AS(predict_batch(ens, MatD(2, 3)), SizeError);
}

TEST_CASE("missing cells are fatal unless allowed, then imputed") {
    auto ens = tiny_ensemble({0.6, 0.4}, 0.001, {const_expert(0.9), const_expert(0.2)});
    MatD S(3, 1);
    S(0, 0) = 1.0;
    S(1, 0) = std::numeric_limits<double>::quiet_NaN();
    S(2, 0) = -1.0;

    CHECK_THROWS_WITH_AS(predict_batch(ens, S),
                         doctest::Contains("row 1, feature 0"), MissingCellError);

    const BatchPrediction batch = predict_batch(ens, S, true);
    CHECK(batch.imputed(0, 0) == -1);
    CHECK(batch.imputed(1, 0) >= 0);  // filled from the network
    CHECK(batch.imputed(2, 0) == -1);
    // with everything missing the gate falls back to its prior
    CHECK(batch.P(1, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(batch.labels[1] == 0);  // experts blend to (0.62, 0.38)
}

TEST_CASE("bundle round-trip preserves behavior and bytes") {
    auto ens = tiny_ensemble({0.6, 0.4}, 0.001,
                             {linear_expert(-1.3, 0.4, 0.7, -0.1), const_expert(0.25)});
    TempDir a("rt_a"), b("rt_b");
    save_bundle(ens, a.path.string());

    for (const char* name :
         {"manifest.json", "bn.json", "cluster.json", "expert_0.json", "expert_1.json"})
        CHECK(std::filesystem::exists(a.path / name));

    const GatedEnsemble loaded = load_bundle(a.path.string());
    CHECK(loaded.k() == 2);
    CHECK(loaded.h == ens.h);
    for (double x : {-2.0, -0.4, 0.0, 0.9, 2.3}) {
        const Prediction p0 = predict_one(ens, {x}, {false});
        const Prediction p1 = predict_one(loaded, {x}, {false});
        CHECK(p0.label == p1.label);
        CHECK(p0.combined[0] == p1.combined[0]);
        CHECK(p0.combined[1] == p1.combined[1]);
    }

    save_bundle(loaded, b.path.string());
    for (const char* name :
         {"manifest.json", "bn.json", "cluster.json", "expert_0.json", "expert_1.json"}) {
        const std::string first = read_text_file((a.path / name).string());
        const std::string second = read_text_file((b.path / name).string());
        CHECK(first == second);
    }
}

TEST_CASE("bundle loading rejects a tampered manifest") {
    auto ens = tiny_ensemble({0.5, 0.5}, 0.001, {const_expert(0.5), const_expert(0.5)});
    TempDir dir("tamper");
    save_bundle(ens, dir.path.string());

    write_text_file((dir.path / "manifest.json").string(),
                    "{\"format\": \"something-else\"}\n");
    CHECK_THROWS_AS(load_bundle(dir.path.string()), SchemaError);

    save_bundle(ens, dir.path.string());
    std::filesystem::remove(dir.path / "expert_1.json");
    CHECK_THROWS_AS(load_bundle(dir.path.string()), FileError);
}

TEST_CASE("ensemble validation catches structural mismatches") {
    auto good = tiny_ensemble({0.5, 0.5}, 0.001, {const_expert(0.5), const_expert(0.5)});
    CHECK_NOTHROW(good.validate());

    auto no_experts = good;
    no_experts.experts.clear();
    CHECK_THROWS_AS(no_experts.validate(), SchemaError);

    auto wrong_count = good;
    wrong_count.experts.push_back(const_expert(0.5));
    CHECK_THROWS_AS(wrong_count.validate(), SchemaError);

    auto bad_h = good;
    bad_h.h = 1.0;
    CHECK_THROWS_AS(bad_h.validate(), SchemaError);
    bad_h.h = -0.1;
    CHECK_THROWS_AS(bad_h.validate(), SchemaError);

    auto bad_shape = good;
    bad_shape.experts[0].dims = {2, 2};
    CHECK_THROWS_AS(bad_shape.validate(), SchemaError);
}
