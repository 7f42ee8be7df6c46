#include "bnmoe/dag.hpp"

#include <algorithm>

namespace bnmoe {

bool Dag::has_edge(std::size_t from, std::size_t to) const {
    const auto& p = parents_[to];
    return std::binary_search(p.begin(), p.end(), from);
}

std::size_t Dag::edge_count() const {
    std::size_t n = 0;
    for (const auto& p : parents_) n += p.size();
    return n;
}

bool Dag::has_path(std::size_t from, std::size_t to) const {
    // DFS backwards from `to` over parent links.
    std::vector<char> seen(node_count(), 0);
    std::vector<std::size_t> stack{to};
    while (!stack.empty()) {
        std::size_t v = stack.back();
        stack.pop_back();
        if (v == from) return true;
        if (seen[v]) continue;
        seen[v] = 1;
        for (std::size_t p : parents_[v]) stack.push_back(p);
    }
    return false;
}

void Dag::add_edge(std::size_t from, std::size_t to) {
    if (from == to) throw DataError("dag: self-loop");
    if (has_edge(from, to)) throw DataError("dag: duplicate edge");
    if (has_path(to, from)) throw DataError("dag: edge would create a cycle");
    auto& p = parents_[to];
    p.insert(std::upper_bound(p.begin(), p.end(), from), from);
}

void Dag::remove_edge(std::size_t from, std::size_t to) {
    auto& p = parents_[to];
    auto it = std::lower_bound(p.begin(), p.end(), from);
    if (it == p.end() || *it != from) throw DataError("dag: edge not present");
    p.erase(it);
}

void Dag::reverse_edge(std::size_t from, std::size_t to) {
    remove_edge(from, to);
    try {
        add_edge(to, from);
    } catch (...) {
        add_edge(from, to);  // restore; re-adding the removed edge cannot cycle
        throw;
    }
}

bool Dag::is_acyclic() const {
    std::vector<std::size_t> indeg(node_count(), 0);
    for (std::size_t v = 0; v < node_count(); ++v) indeg[v] = parents_[v].size();
    // Kahn over the reversed representation: a node is ready when all parents done.
    std::vector<std::vector<std::size_t>> children(node_count());
    for (std::size_t v = 0; v < node_count(); ++v)
        for (std::size_t p : parents_[v]) children[p].push_back(v);
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < node_count(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::size_t visited = 0;
    while (!ready.empty()) {
        std::size_t v = ready.back();
        ready.pop_back();
        ++visited;
        for (std::size_t c : children[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    return visited == node_count();
}

std::vector<std::size_t> Dag::topological_order() const {
    std::vector<std::size_t> indeg(node_count(), 0);
    std::vector<std::vector<std::size_t>> children(node_count());
    for (std::size_t v = 0; v < node_count(); ++v) {
        indeg[v] = parents_[v].size();
        for (std::size_t p : parents_[v]) children[p].push_back(v);
    }
    std::vector<std::size_t> order, ready;
    for (std::size_t v = 0; v < node_count(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        std::size_t v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (std::size_t c : children[v])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order.size() != node_count()) throw DataError("dag: cycle detected");
    return order;
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t v = 0; v < node_count(); ++v)
        for (std::size_t p : parents_[v]) out.emplace_back(p, v);
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t count_dags(std::size_t nodes) {
    if (nodes < 1 || nodes > 8) throw SizeError("count_dags: nodes must be in [1, 8]");
    // a(n) = sum_{k=1..n} (-1)^{k+1} C(n,k) 2^{k(n-k)} a(n-k); exact in 64 bits for n <= 8
    auto binom = [](std::uint64_t n, std::uint64_t k) {
        std::uint64_t r = 1;
        for (std::uint64_t i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
        return r;
    };
    std::vector<std::int64_t> a(nodes + 1, 0);
    a[0] = 1;
    for (std::size_t n = 1; n <= nodes; ++n) {
        std::int64_t s = 0;
        for (std::size_t k = 1; k <= n; ++k) {
            std::int64_t term = static_cast<std::int64_t>(binom(n, k))
                                * (std::int64_t{1} << (k * (n - k))) * a[n - k];
            s += (k % 2 == 1) ? term : -term;
        }
        a[n] = s;
    }
    return static_cast<std::uint64_t>(a[nodes]);
}

}  // namespace bnmoe
