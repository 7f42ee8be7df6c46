#ifndef BNMOE_SCORE_HPP
#define BNMOE_SCORE_HPP

#include <string>
#include <unordered_map>
#include <vector>

#include "bnmoe/common.hpp"
#include "bnmoe/dag.hpp"

namespace bnmoe {

/// Penalized-likelihood criterion. Lower is better.
/// c_B: 0 for loglik, 2 for AIC, ln(node count) for bic_paper, ln(n) for bic_n.
struct ScoreSpec {
    enum class Criterion { loglik, aic, bic_paper, bic_n };
    Criterion criterion = Criterion::bic_paper;
    std::size_t max_parents = 3;

    double c_b(std::size_t node_count, std::size_t n_rows) const;

    static Criterion parse_criterion(const std::string& name);
    static std::string criterion_name(Criterion c);
};

/// Discrete training table for the criterion: columns are node states.
struct DiscreteTable {
    MatI data;                  // [n x node_count], states in {0..arity-1}
    std::vector<int> arities;   // r_i per node

    std::size_t node_count() const { return arities.size(); }
    std::size_t n_rows() const { return data.rows; }
    void validate() const;      // throws DataError on out-of-range states
};

/// One node's contribution:
///   -2 * sum_{j,k} n_ijk * ln(n_ijk / n_ij) + c_B * q_i * (r_i - 1)
/// with the 0*ln(0/.) := 0 convention.
double family_score(const DiscreteTable& table, std::size_t node,
                    const std::vector<std::size_t>& parents, double c_b);

/// Full criterion; decomposes as the sum of family scores over the dag.
double score(const Dag& dag, const DiscreteTable& table, const ScoreSpec& spec);

/// Memoizes family scores by (node, parent set) so structure search only
/// pays for families it has not seen.
class FamilyScoreCache {
public:
    FamilyScoreCache(const DiscreteTable& table, double c_b)
        : table_(&table), c_b_(c_b), memo_(table.node_count()) {}

    double get(std::size_t node, const std::vector<std::size_t>& parents);

private:
    const DiscreteTable* table_;
    double c_b_;
    std::vector<std::unordered_map<std::uint64_t, double>> memo_;  // keyed by parent bitmask
};

}  // namespace bnmoe

#endif
