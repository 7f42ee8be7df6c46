#include "bnmoe/score.hpp"

#include <cmath>

namespace bnmoe {

double ScoreSpec::c_b(std::size_t node_count, std::size_t n_rows) const {
    switch (criterion) {
        case Criterion::loglik: return 0.0;
        case Criterion::aic: return 2.0;
        case Criterion::bic_paper: return std::log(static_cast<double>(node_count));
        case Criterion::bic_n: return std::log(static_cast<double>(n_rows));
    }
    throw ParamError("score: unknown criterion");
}

ScoreSpec::Criterion ScoreSpec::parse_criterion(const std::string& name) {
    if (name == "loglik") return Criterion::loglik;
    if (name == "aic") return Criterion::aic;
    if (name == "bic-paper" || name == "bic") return Criterion::bic_paper;
    if (name == "bic-n") return Criterion::bic_n;
    throw ParamError("unknown score criterion: " + name);
}

std::string ScoreSpec::criterion_name(Criterion c) {
    switch (c) {
        case Criterion::loglik: return "loglik";
        case Criterion::aic: return "aic";
        case Criterion::bic_paper: return "bic";
        case Criterion::bic_n: return "bic-n";
    }
    return "?";
}

void DiscreteTable::validate() const {
    if (data.cols != arities.size()) throw SizeError("discrete table: arity list length mismatch");
    for (std::size_t i = 0; i < data.rows; ++i)
        for (std::size_t v = 0; v < data.cols; ++v)
            if (data(i, v) < 0 || data(i, v) >= arities[v])
                throw DataError("discrete table: state out of range at row " + std::to_string(i) +
                                ", node " + std::to_string(v));
}

double family_score(const DiscreteTable& table, std::size_t node,
                    const std::vector<std::size_t>& parents, double c_b) {
    const int r = table.arities[node];
    std::size_t q = 1;
    for (std::size_t p : parents) q *= static_cast<std::size_t>(table.arities[p]);

    // n_ijk counts, parent configuration indexed mixed-radix in sorted-id order.
    std::vector<double> counts(q * static_cast<std::size_t>(r), 0.0);
    for (std::size_t row = 0; row < table.n_rows(); ++row) {
        std::size_t j = 0;
        for (std::size_t p : parents) j = j * static_cast<std::size_t>(table.arities[p]) +
                                          static_cast<std::size_t>(table.data(row, p));
        counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(table.data(row, node))] += 1.0;
    }

    double loglik = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
        double n_ij = 0.0;
        for (int k = 0; k < r; ++k) n_ij += counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)];
        if (n_ij == 0.0) continue;
        for (int k = 0; k < r; ++k) {
            double n_ijk = counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)];
            if (n_ijk > 0.0) loglik += n_ijk * std::log(n_ijk / n_ij);
        }
    }
    return -2.0 * loglik + c_b * static_cast<double>(q) * static_cast<double>(r - 1);
}

double score(const Dag& dag, const DiscreteTable& table, const ScoreSpec& spec) {
    if (dag.node_count() != table.node_count()) throw SizeError("score: dag/table node count mismatch");
    table.validate();
    if (!dag.is_acyclic()) throw DataError("score: dag has a cycle");
    const double cb = spec.c_b(table.node_count(), table.n_rows());
    double total = 0.0;
    for (std::size_t v = 0; v < dag.node_count(); ++v)
        total += family_score(table, v, dag.parents(v), cb);
    return total;
}

double FamilyScoreCache::get(std::size_t node, const std::vector<std::size_t>& parents) {
    std::uint64_t key = 0;
    for (std::size_t p : parents) key |= (std::uint64_t{1} << p);
    auto& m = memo_[node];
    auto it = m.find(key);
    if (it != m.end()) return it->second;
    double s = family_score(*table_, node, parents, c_b_);
    m.emplace(key, s);
    return s;
}

}  // namespace bnmoe
