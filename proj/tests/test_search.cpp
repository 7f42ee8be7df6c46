#include <cmath>
#include <limits>
#include <random>

#include "bnmoe/structure_search.hpp"
#include "doctest.h"
#include "oracle_helpers.hpp"

using namespace bnmoe;

namespace {

// Forward-sampled data from the chain 0 -> 1 -> 2 with an isolated node 3;
// dependencies strong enough that the criterion must keep the chain edges.
DiscreteTable chain_data(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DiscreteTable t;
    t.arities = {2, 2, 2, 2};
    t.data = MatI(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = unit(rng) < 0.5 ? 0 : 1;
        const int b = unit(rng) < (a == 0 ? 0.9 : 0.1) ? 0 : 1;
        const int c = unit(rng) < (b == 0 ? 0.85 : 0.15) ? 0 : 1;
        const int d = unit(rng) < 0.5 ? 0 : 1;
        t.data(i, 0) = a;
        t.data(i, 1) = b;
        t.data(i, 2) = c;
        t.data(i, 3) = d;
    }
    return t;
}

// Best score over every DAG on the table's nodes under the parent cap.
double exhaustive_optimum(const DiscreteTable& t, const ScoreSpec& spec) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& adj : oracle::all_dags(t.node_count())) {
        if (oracle::max_parent_count(adj) > spec.max_parents) continue;
        best = std::min(best, score(oracle::dag_from_adjacency(adj), t, spec));
    }
    return best;
}

}  // namespace

TEST_CASE("hill climbing and tabu search reach the exhaustive optimum on chain data") {
    const DiscreteTable t = chain_data(2000, 424242);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::bic_n;
    spec.max_parents = 3;
    const double best = exhaustive_optimum(t, spec);

    const SearchResult hill = hill_climb(t, spec, 3, 1);
    CHECK(hill.score == best);

    const SearchResult tabu = tabu_search(t, spec, 3, 1, 10, 100);
    CHECK(tabu.score == best);
    CHECK(tabu.score <= hill.score);
}

TEST_CASE("learned structure keeps the strong dependency adjacent") {
    const DiscreteTable t = chain_data(2000, 7);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::bic_n;
    const SearchResult res = hill_climb(t, spec, 3, 1);
    CHECK((res.dag.has_edge(0, 1) || res.dag.has_edge(1, 0)));
    CHECK((res.dag.has_edge(1, 2) || res.dag.has_edge(2, 1)));
}

TEST_CASE("independent uniform nodes yield the empty graph under BIC") {
    std::mt19937_64 rng(99);
    DiscreteTable t;
    t.arities = {2, 2, 2};
    t.data = MatI(500, 3);
    for (auto& v : t.data.data) v = static_cast<int>(rng() % 2);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::bic_n;
    const SearchResult res = hill_climb(t, spec, 2, 1);
    CHECK(res.dag.edge_count() == 0);
    CHECK(res.score == exhaustive_optimum(t, spec));
}

TEST_CASE("accepted hill-climbing moves strictly decrease the criterion") {
    const DiscreteTable t = chain_data(800, 13);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::aic;
    const SearchResult res = hill_climb(t, spec, 3, 5);
    REQUIRE(res.score_path.size() >= 1);
    for (std::size_t i = 1; i < res.score_path.size(); ++i)
        CHECK(res.score_path[i] < res.score_path[i - 1]);
    CHECK(res.score == res.score_path.back());
    // at the local optimum the returned score matches a fresh evaluation
    CHECK(res.score == doctest::Approx(score(res.dag, t, spec)).epsilon(1e-12));
}

TEST_CASE("tabu with tenure one and no diversification budget equals hill climbing") {
    const DiscreteTable t = chain_data(600, 3);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::bic_paper;
    const SearchResult hill = hill_climb(t, spec, 3, 9);
    const SearchResult tabu = tabu_search(t, spec, 3, 9, 1, 0);
    CHECK(tabu.score == hill.score);
    CHECK(tabu.dag == hill.dag);
}

TEST_CASE("search is deterministic in its seed") {
    const DiscreteTable t = chain_data(700, 31);
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::bic_n;
    const SearchResult a = hill_climb(t, spec, 3, 4);
    const SearchResult b = hill_climb(t, spec, 3, 4);
    CHECK(a.dag == b.dag);
    CHECK(a.score == b.score);
    const SearchResult ta = tabu_search(t, spec, 3, 4, 10, 50);
    const SearchResult tb = tabu_search(t, spec, 3, 4, 10, 50);
    CHECK(ta.dag == tb.dag);
    CHECK(ta.score == tb.score);
}

TEST_CASE("the parent cap binds") {
    // node 3 depends on all of 0,1,2; with max_parents 2 no node may
    // accumulate three parents even though the data would reward it
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    DiscreteTable t;
    t.arities = {2, 2, 2, 2};
    t.data = MatI(1500, 4);
    for (std::size_t i = 0; i < t.data.rows; ++i) {
        const int a = unit(rng) < 0.5, b = unit(rng) < 0.5, c = unit(rng) < 0.5;
        const int d = unit(rng) < 0.95 ? (a ^ b ^ c) : 1 - (a ^ b ^ c);
        t.data(i, 0) = a;
        t.data(i, 1) = b;
        t.data(i, 2) = c;
        t.data(i, 3) = d;
    }
    ScoreSpec spec;
    spec.criterion = ScoreSpec::Criterion::loglik;
    spec.max_parents = 2;
    const SearchResult res = hill_climb(t, spec, 3, 1);
    for (std::size_t v = 0; v < 4; ++v) CHECK(res.dag.parents(v).size() <= 2);

    spec.max_parents = 3;
    const SearchResult full = tabu_search(t, spec, 3, 1, 5, 20);
    for (std::size_t v = 0; v < 4; ++v) CHECK(full.dag.parents(v).size() <= 3);
}

TEST_CASE("search rejects an out-of-range gate node") {
    const DiscreteTable t = chain_data(100, 1);
    ScoreSpec spec;
    CHECK_THROWS_AS(hill_climb(t, spec, 4, 1), DomainError);
    CHECK_THROWS_AS(tabu_search(t, spec, 9, 1, 10, 100), DomainError);
}

TEST_CASE("naive Bayes structure is the gate-out star") {
    const Dag star = naive_bayes_structure(6, 4);
    CHECK(star.node_count() == 7);
    CHECK(star.edge_count() == 6);
    for (std::size_t f = 0; f < 6; ++f) {
        CHECK(star.has_edge(6, f));
        CHECK(star.parents(f) == std::vector<std::size_t>{6});
    }
    CHECK(star.is_acyclic());
    CHECK_THROWS_AS(naive_bayes_structure(0, 2), ParamError);
    CHECK_THROWS_AS(naive_bayes_structure(3, 0), ParamError);

    const Dag two = naive_bayes_structure(2, 3);
    CHECK(two.has_edge(2, 0));
    CHECK(two.has_edge(2, 1));
    CHECK(two.edge_count() == 2);
}
