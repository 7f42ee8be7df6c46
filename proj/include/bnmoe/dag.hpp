#ifndef BNMOE_DAG_HPP
#define BNMOE_DAG_HPP

#include <cstdint>
#include <vector>

#include "bnmoe/common.hpp"

namespace bnmoe {

/// Directed acyclic graph stored as per-node sorted parent lists.
class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t node_count) : parents_(node_count) {}

    std::size_t node_count() const { return parents_.size(); }
    const std::vector<std::size_t>& parents(std::size_t node) const { return parents_[node]; }

    bool has_edge(std::size_t from, std::size_t to) const;
    std::size_t edge_count() const;

    /// True if a directed path from -> to exists (including a direct edge).
    bool has_path(std::size_t from, std::size_t to) const;

    void add_edge(std::size_t from, std::size_t to);     // throws on cycle/duplicate/self-loop
    void remove_edge(std::size_t from, std::size_t to);  // throws if absent
    void reverse_edge(std::size_t from, std::size_t to);  // rolls back if the flip would cycle

    bool is_acyclic() const;
    /// Topological order; throws DataError if the graph has a cycle.
    std::vector<std::size_t> topological_order() const;

    std::vector<std::pair<std::size_t, std::size_t>> edges() const;

    bool operator==(const Dag& o) const { return parents_ == o.parents_; }

private:
    std::vector<std::vector<std::size_t>> parents_;
};

/// Number of labeled DAGs on `nodes` nodes (Robinson's recurrence).
/// Guarded to nodes <= 8 to stay far from 64-bit overflow.
std::uint64_t count_dags(std::size_t nodes);

}  // namespace bnmoe

#endif
