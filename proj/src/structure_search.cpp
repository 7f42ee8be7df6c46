#include "bnmoe/structure_search.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace bnmoe {
namespace {

constexpr double kEps = 1e-9;

enum class MoveKind { add, del, rev };

struct Move {
    MoveKind kind;
    std::size_t u, v;  // the edge u->v being added, deleted, or reversed
};

bool same_move(const Move& a, const Move& b) {
    return a.kind == b.kind && a.u == b.u && a.v == b.v;
}

Move inverse(const Move& m) {
    switch (m.kind) {
        case MoveKind::add: return {MoveKind::del, m.u, m.v};
        case MoveKind::del: return {MoveKind::add, m.u, m.v};
        default: return {MoveKind::rev, m.v, m.u};
    }
}

std::vector<std::size_t> with_parent(const std::vector<std::size_t>& ps, std::size_t p) {
    std::vector<std::size_t> out = ps;
    out.insert(std::lower_bound(out.begin(), out.end(), p), p);
    return out;
}

std::vector<std::size_t> without_parent(const std::vector<std::size_t>& ps, std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t q : ps)
        if (q != p) out.push_back(q);
    return out;
}

struct Candidate {
    Move move;
    double total;  // criterion after the move
    double fam_v;  // new family score of move.v
    double fam_u;  // new family score of move.u (reversals only)
};

// All legal single-edge moves with the criterion each would produce, in a
// fixed scan order (additions, then deletions, then reversals; u-major
// within each block) so ties resolve the same way on every run.
std::vector<Candidate> legal_moves(const Dag& dag, FamilyScoreCache& cache,
                                   const std::vector<double>& fam, double cur,
                                   std::size_t max_parents) {
    const std::size_t n = dag.node_count();
    std::vector<Candidate> out;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u == v || dag.has_edge(u, v) || dag.has_edge(v, u)) continue;
            if (dag.parents(v).size() >= max_parents) continue;
            if (dag.has_path(v, u)) continue;  // would close a cycle
            double fv = cache.get(v, with_parent(dag.parents(v), u));
            out.push_back({{MoveKind::add, u, v}, cur - fam[v] + fv, fv, 0.0});
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (!dag.has_edge(u, v)) continue;
            double fv = cache.get(v, without_parent(dag.parents(v), u));
            out.push_back({{MoveKind::del, u, v}, cur - fam[v] + fv, fv, 0.0});
        }
    }
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (!dag.has_edge(u, v)) continue;
            if (dag.parents(u).size() >= max_parents) continue;
            Dag probe = dag;
            probe.remove_edge(u, v);
            if (probe.has_path(u, v)) continue;  // alternate path, reversal would cycle
            double fv = cache.get(v, without_parent(dag.parents(v), u));
            double fu = cache.get(u, with_parent(dag.parents(u), v));
            out.push_back({{MoveKind::rev, u, v}, cur - fam[v] + fv - fam[u] + fu, fv, fu});
        }
    }
    return out;
}

void apply_move(Dag& dag, std::vector<double>& fam, const Candidate& c) {
    switch (c.move.kind) {
        case MoveKind::add: dag.add_edge(c.move.u, c.move.v); break;
        case MoveKind::del: dag.remove_edge(c.move.u, c.move.v); break;
        case MoveKind::rev: dag.reverse_edge(c.move.u, c.move.v); break;
    }
    if (!dag.is_acyclic()) throw std::logic_error("structure search produced a cycle");
    fam[c.move.v] = c.fam_v;
    if (c.move.kind == MoveKind::rev) fam[c.move.u] = c.fam_u;
}

// Summing the family array in index order keeps equal structures at
// bit-identical totals, which the strict-decrease test relies on.
double total_of(const std::vector<double>& fam) {
    return std::accumulate(fam.begin(), fam.end(), 0.0);
}

void check_inputs(const DiscreteTable& table, std::size_t gate_node) {
    table.validate();
    if (gate_node >= table.node_count()) throw DomainError("gate node id out of range");
}

}  // namespace

SearchResult hill_climb(const DiscreteTable& table, const ScoreSpec& spec,
                        std::size_t gate_node, std::uint64_t /*seed*/) {
    check_inputs(table, gate_node);
    const std::size_t n = table.node_count();
    FamilyScoreCache cache(table, spec.c_b(n, table.n_rows()));

    Dag dag(n);
    std::vector<double> fam(n);
    for (std::size_t i = 0; i < n; ++i) fam[i] = cache.get(i, {});
    double cur = total_of(fam);

    SearchResult res;
    res.score_path.push_back(cur);
    for (;;) {
        auto cands = legal_moves(dag, cache, fam, cur, spec.max_parents);
        const Candidate* best = nullptr;
        for (const auto& c : cands)
            if (c.total < cur - kEps && (!best || c.total < best->total)) best = &c;
        if (!best) break;
        apply_move(dag, fam, *best);
        cur = total_of(fam);
        res.score_path.push_back(cur);
    }
    res.dag = dag;
    res.score = cur;
    return res;
}

SearchResult tabu_search(const DiscreteTable& table, const ScoreSpec& spec,
                         std::size_t gate_node, std::uint64_t /*seed*/,
                         std::size_t tenure, std::size_t max_iters) {
    check_inputs(table, gate_node);
    if (tenure < 1) throw ParamError("tabu tenure must be >= 1");
    const std::size_t n = table.node_count();
    FamilyScoreCache cache(table, spec.c_b(n, table.n_rows()));

    Dag dag(n);
    std::vector<double> fam(n);
    for (std::size_t i = 0; i < n; ++i) fam[i] = cache.get(i, {});
    double cur = total_of(fam);

    Dag best_dag = dag;
    double best = cur;
    std::deque<Move> tabu;
    std::size_t diversifications = 0;

    SearchResult res;
    res.score_path.push_back(cur);
    for (;;) {
        auto cands = legal_moves(dag, cache, fam, cur, spec.max_parents);
        const Candidate* pick = nullptr;
        for (const auto& c : cands) {
            bool is_tabu = std::any_of(tabu.begin(), tabu.end(),
                                       [&](const Move& m) { return same_move(m, c.move); });
            if (is_tabu && c.total >= best - kEps) continue;  // aspiration not met
            if (!pick || c.total < pick->total) pick = &c;
        }
        if (!pick) break;
        if (pick->total >= cur - kEps) {
            // Worsening (or flat) move: only max_iters of these are allowed.
            if (diversifications >= max_iters) break;
            ++diversifications;
        }
        tabu.push_back(inverse(pick->move));
        while (tabu.size() > tenure) tabu.pop_front();
        apply_move(dag, fam, *pick);
        cur = total_of(fam);
        res.score_path.push_back(cur);
        if (cur < best) {
            best = cur;
            best_dag = dag;
        }
    }
    res.dag = best_dag;
    res.score = best;
    return res;
}

Dag naive_bayes_structure(std::size_t d, std::size_t k) {
    if (d < 1) throw ParamError("need at least one feature node");
    if (k < 1) throw ParamError("need at least one gate state");
    Dag dag(d + 1);
    for (std::size_t i = 0; i < d; ++i) dag.add_edge(d, i);
    return dag;
}

}  // namespace bnmoe
