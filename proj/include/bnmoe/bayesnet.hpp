#ifndef BNMOE_BAYESNET_HPP
#define BNMOE_BAYESNET_HPP

#include <string>
#include <vector>

#include "bnmoe/common.hpp"
#include "bnmoe/dag.hpp"
#include "bnmoe/discretizer.hpp"
#include "bnmoe/score.hpp"

namespace bnmoe {

/// Conditional probability table of one node. Rows are parent
/// configurations, indexed mixed-radix over the parents in sorted-id order
/// with the lowest id most significant; columns are the node's states.
struct Cpt {
    std::size_t node = 0;
    std::vector<std::size_t> parents;  // sorted ascending
    std::vector<int> parent_arities;   // aligned with parents
    int r = 1;                         // state count of the node
    MatD table;                        // [q x r], rows sum to 1

    std::size_t q() const { return table.rows; }
    /// Row index for a full state vector indexed by node id.
    std::size_t config_index(const std::vector<int>& states) const;
};

/// Discrete network over d feature nodes plus one gate node (id = d).
struct BayesianNetwork {
    Dag dag;
    std::vector<Cpt> cpts;  // cpts[i] belongs to node i
    Discretizer discretizer;
    std::size_t gate_node = 0;
    int gate_states = 1;

    std::size_t feature_count() const { return gate_node; }
    void validate() const;  // shape consistency, rows summing to 1
};

/// MAP point estimates under a uniform Dirichlet prior with per-cell count
/// prior_count:
///   theta_ijk = (prior_count + n_ijk - 1) / (r_i * prior_count + n_ij - r_i)
/// for k < r_i - 1, last state by normalization. prior_count must exceed 1
/// so every estimate stays strictly positive.
std::vector<Cpt> fit_cpts(const Dag& dag, const DiscreteTable& table, double prior_count = 2.0);

/// P(gate | observed features). Missing features are marginalized out;
/// observed values are discretized with the network's own bin edges.
std::vector<double> posterior_gate(const BayesianNetwork& bn, const std::vector<double>& x,
                                   const std::vector<bool>& missing);

struct Imputation {
    int state = 0;                     // argmax, ties to the lowest state
    std::vector<double> distribution;  // P(target | evidence)
};

/// Distribution of one missing feature given the others. The target must be
/// flagged missing in the mask.
Imputation impute(const BayesianNetwork& bn, const std::vector<double>& x,
                  const std::vector<bool>& missing, std::size_t target);

/// GraphViz digraph; the gate node is drawn as a box.
std::string export_dot(const BayesianNetwork& bn, const std::vector<std::string>& names);

std::string bn_to_json(const BayesianNetwork& bn);
BayesianNetwork bn_from_json(const std::string& text);

}  // namespace bnmoe

#endif
