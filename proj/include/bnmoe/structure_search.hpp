#ifndef BNMOE_STRUCTURE_SEARCH_HPP
#define BNMOE_STRUCTURE_SEARCH_HPP

#include <cstdint>
#include <vector>

#include "bnmoe/dag.hpp"
#include "bnmoe/score.hpp"

namespace bnmoe {

struct SearchResult {
    Dag dag;
    double score = 0.0;
    std::vector<double> score_path;  // criterion after each accepted move
};

/// Greedy local search from the empty graph over {add, delete, reverse}
/// single-edge moves. Only moves that keep the graph acyclic and respect
/// max_parents are considered; the best strictly improving move is applied
/// until none exists. Deterministic: candidate moves are scanned in a fixed
/// order and ties go to the first scanned.
SearchResult hill_climb(const DiscreteTable& table, const ScoreSpec& spec,
                        std::size_t gate_node, std::uint64_t seed);

/// Hill climbing that escapes local optima by taking the best non-tabu
/// worsening move when no improving one exists (up to max_iters such moves).
/// Applying a move puts its inverse on a FIFO tabu list of length tenure;
/// a tabu move is still allowed when it would beat the incumbent best.
/// Returns the best-scoring dag visited.
SearchResult tabu_search(const DiscreteTable& table, const ScoreSpec& spec,
                         std::size_t gate_node, std::uint64_t seed,
                         std::size_t tenure = 10, std::size_t max_iters = 100);

/// Star graph: the gate node is the sole parent of every feature node.
Dag naive_bayes_structure(std::size_t d, std::size_t k);

}  // namespace bnmoe

#endif
