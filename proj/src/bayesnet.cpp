#include "bnmoe/bayesnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace bnmoe {
namespace {

// Inference factor. Variables are kept ascending; values are row-major with
// the first variable most significant, matching the Cpt row convention.
struct Factor {
    std::vector<std::size_t> vars;
    std::vector<int> cards;
    std::vector<double> vals;
};

std::size_t table_size(const std::vector<int>& cards) {
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    return n;
}

// Advance a mixed-radix counter; returns false once it wraps to zero.
bool next_assignment(std::vector<int>& asg, const std::vector<int>& cards) {
    for (std::size_t i = asg.size(); i-- > 0;) {
        if (++asg[i] < cards[i]) return true;
        asg[i] = 0;
    }
    return false;
}

Factor factor_from_cpt(const Cpt& cpt) {
    Factor f;
    f.vars = cpt.parents;
    f.vars.insert(std::lower_bound(f.vars.begin(), f.vars.end(), cpt.node), cpt.node);
    f.cards.reserve(f.vars.size());
    for (std::size_t v : f.vars)
        f.cards.push_back(v == cpt.node
                              ? cpt.r
                              : cpt.parent_arities[static_cast<std::size_t>(
                                    std::lower_bound(cpt.parents.begin(), cpt.parents.end(), v) -
                                    cpt.parents.begin())]);
    f.vals.resize(table_size(f.cards));

    std::vector<int> asg(f.vars.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t j = 0;
        int k = 0;
        for (std::size_t i = 0; i < f.vars.size(); ++i) {
            if (f.vars[i] == cpt.node) {
                k = asg[i];
            } else {
                j = j * static_cast<std::size_t>(f.cards[i]) + static_cast<std::size_t>(asg[i]);
            }
        }
        f.vals[flat++] = cpt.table(j, static_cast<std::size_t>(k));
    } while (next_assignment(asg, f.cards));
    return f;
}

Factor restrict_var(const Factor& f, std::size_t var, int state) {
    auto it = std::find(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end()) return f;
    const std::size_t pos = static_cast<std::size_t>(it - f.vars.begin());

    Factor out;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        if (i == pos) continue;
        out.vars.push_back(f.vars[i]);
        out.cards.push_back(f.cards[i]);
    }
    out.vals.resize(table_size(out.cards));

    std::vector<int> asg(out.vars.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t src = 0;
        std::size_t oi = 0;
        for (std::size_t i = 0; i < f.vars.size(); ++i) {
            int s = (i == pos) ? state : asg[oi++];
            src = src * static_cast<std::size_t>(f.cards[i]) + static_cast<std::size_t>(s);
        }
        out.vals[flat++] = f.vals[src];
    } while (next_assignment(asg, out.cards));
    return out;
}

Factor multiply(const Factor& a, const Factor& b) {
    Factor out;
    std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
                   std::back_inserter(out.vars));
    out.cards.resize(out.vars.size());
    std::vector<std::size_t> pos_a, pos_b;  // position in out scope of each source var
    for (std::size_t i = 0; i < a.vars.size(); ++i) {
        std::size_t p = static_cast<std::size_t>(
            std::lower_bound(out.vars.begin(), out.vars.end(), a.vars[i]) - out.vars.begin());
        out.cards[p] = a.cards[i];
        pos_a.push_back(p);
    }
    for (std::size_t i = 0; i < b.vars.size(); ++i) {
        std::size_t p = static_cast<std::size_t>(
            std::lower_bound(out.vars.begin(), out.vars.end(), b.vars[i]) - out.vars.begin());
        out.cards[p] = b.cards[i];
        pos_b.push_back(p);
    }
    out.vals.resize(table_size(out.cards));

    std::vector<int> asg(out.vars.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t ia = 0, ib = 0;
        for (std::size_t i = 0; i < a.vars.size(); ++i)
            ia = ia * static_cast<std::size_t>(a.cards[i]) +
                 static_cast<std::size_t>(asg[pos_a[i]]);
        for (std::size_t i = 0; i < b.vars.size(); ++i)
            ib = ib * static_cast<std::size_t>(b.cards[i]) +
                 static_cast<std::size_t>(asg[pos_b[i]]);
        out.vals[flat++] = a.vals[ia] * b.vals[ib];
    } while (next_assignment(asg, out.cards));
    return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
    auto it = std::find(f.vars.begin(), f.vars.end(), var);
    if (it == f.vars.end()) return f;
    const std::size_t pos = static_cast<std::size_t>(it - f.vars.begin());

    Factor out;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        if (i == pos) continue;
        out.vars.push_back(f.vars[i]);
        out.cards.push_back(f.cards[i]);
    }
    out.vals.assign(table_size(out.cards), 0.0);

    std::vector<int> asg(f.vars.size(), 0);
    std::size_t flat = 0;
    do {
        std::size_t dst = 0;
        for (std::size_t i = 0; i < f.vars.size(); ++i) {
            if (i == pos) continue;
            dst = dst * static_cast<std::size_t>(f.cards[i]) + static_cast<std::size_t>(asg[i]);
        }
        out.vals[dst] += f.vals[flat++];
    } while (next_assignment(asg, f.cards));
    return out;
}

// Exact marginal P(query | evidence) by variable elimination with a greedy
// min-weight elimination order. evidence[node] = -1 means unobserved.
std::vector<double> ve_query(const BayesianNetwork& bn, const std::vector<int>& evidence,
                             std::size_t query) {
    std::vector<Factor> factors;
    factors.reserve(bn.cpts.size());
    for (const Cpt& cpt : bn.cpts) {
        Factor f = factor_from_cpt(cpt);
        for (std::size_t v = 0; v < evidence.size(); ++v)
            if (v != query && evidence[v] >= 0) f = restrict_var(f, v, evidence[v]);
        factors.push_back(std::move(f));
    }

    std::vector<std::size_t> elim;
    for (std::size_t v = 0; v < bn.dag.node_count(); ++v)
        if (v != query && evidence[v] < 0) elim.push_back(v);

    while (!elim.empty()) {
        // Weight of eliminating v: size of the product factor it would form.
        std::size_t best_i = 0;
        std::size_t best_w = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < elim.size(); ++i) {
            std::vector<std::size_t> scope;
            for (const Factor& f : factors)
                if (std::find(f.vars.begin(), f.vars.end(), elim[i]) != f.vars.end())
                    for (std::size_t j = 0; j < f.vars.size(); ++j) {
                        if (std::find(scope.begin(), scope.end(), f.vars[j]) == scope.end())
                            scope.push_back(f.vars[j]);
                    }
            std::size_t w = 1;
            for (std::size_t v : scope) w *= static_cast<std::size_t>(bn.cpts[v].r);
            if (w < best_w) {
                best_w = w;
                best_i = i;
            }
        }
        const std::size_t var = elim[best_i];
        elim.erase(elim.begin() + static_cast<std::ptrdiff_t>(best_i));

        Factor prod;
        prod.vals = {1.0};
        std::vector<Factor> rest;
        for (Factor& f : factors) {
            if (std::find(f.vars.begin(), f.vars.end(), var) != f.vars.end())
                prod = multiply(prod, f);
            else
                rest.push_back(std::move(f));
        }
        rest.push_back(sum_out(prod, var));
        factors = std::move(rest);
    }

    Factor joint;
    joint.vals = {1.0};
    for (const Factor& f : factors) joint = multiply(joint, f);

    const int r = bn.cpts[query].r;
    std::vector<double> post(static_cast<std::size_t>(r), 0.0);
    if (joint.vars.empty()) {
        // Query observed away is impossible here; guard for a degenerate r=1 node.
        post.assign(static_cast<std::size_t>(r), 1.0 / static_cast<double>(r));
        return post;
    }
    double z = 0.0;
    for (double v : joint.vals) z += v;
    for (int k = 0; k < r; ++k) post[static_cast<std::size_t>(k)] = joint.vals[static_cast<std::size_t>(k)] / z;
    return post;
}

std::vector<int> build_evidence(const BayesianNetwork& bn, const std::vector<double>& x,
                                const std::vector<bool>& missing) {
    const std::size_t d = bn.feature_count();
    if (x.size() != d || missing.size() != d)
        throw SizeError("evidence vector length does not match the feature count");
    std::vector<int> evidence(bn.dag.node_count(), -1);
    for (std::size_t i = 0; i < d; ++i) {
        if (missing[i]) continue;
        if (!std::isfinite(x[i])) throw DataError("non-finite observed feature value");
        evidence[i] = bn.discretizer.bin(i, x[i]);
    }
    return evidence;
}

}  // namespace

std::size_t Cpt::config_index(const std::vector<int>& states) const {
    std::size_t j = 0;
    for (std::size_t i = 0; i < parents.size(); ++i)
        j = j * static_cast<std::size_t>(parent_arities[i]) +
            static_cast<std::size_t>(states[parents[i]]);
    return j;
}

void BayesianNetwork::validate() const {
    if (cpts.size() != dag.node_count()) throw SchemaError("network: one cpt per node required");
    if (gate_node != feature_count() || gate_node >= dag.node_count())
        throw SchemaError("network: gate node must be the last node");
    if (discretizer.n_features() != feature_count())
        throw SchemaError("network: discretizer does not cover the feature nodes");
    if (gate_states != cpts[gate_node].r) throw SchemaError("network: gate state count mismatch");

    for (std::size_t i = 0; i < cpts.size(); ++i) {
        const Cpt& c = cpts[i];
        if (c.node != i) throw SchemaError("network: cpt order mismatch");
        if (c.parents != dag.parents(i)) throw SchemaError("network: cpt parents disagree with dag");
        if (c.r < 1) throw SchemaError("network: non-positive state count");
        if (i < feature_count() &&
            static_cast<std::size_t>(c.r) != discretizer.n_bins(i))
            throw SchemaError("network: cpt states disagree with discretizer bins");
        std::size_t q = 1;
        for (std::size_t p = 0; p < c.parents.size(); ++p) {
            if (c.parent_arities[p] != cpts[c.parents[p]].r)
                throw SchemaError("network: parent arity mismatch");
            q *= static_cast<std::size_t>(c.parent_arities[p]);
        }
        if (c.table.rows != q || c.table.cols != static_cast<std::size_t>(c.r))
            throw SchemaError("network: cpt table shape mismatch");
        for (std::size_t row = 0; row < q; ++row) {
            double s = 0.0;
            for (int k = 0; k < c.r; ++k) {
                double v = c.table(row, static_cast<std::size_t>(k));
                if (!(v > 0.0) || v > 1.0) throw SchemaError("network: cpt entry outside (0,1]");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-9) throw SchemaError("network: cpt row does not sum to 1");
        }
    }
}

std::vector<Cpt> fit_cpts(const Dag& dag, const DiscreteTable& table, double prior_count) {
    if (!(prior_count > 1.0))
        throw ParamError("prior count must exceed 1 to keep all estimates positive");
    table.validate();
    if (dag.node_count() != table.node_count())
        throw SizeError("dag and table disagree on node count");

    std::vector<Cpt> cpts;
    cpts.reserve(dag.node_count());
    for (std::size_t i = 0; i < dag.node_count(); ++i) {
        Cpt c;
        c.node = i;
        c.parents = dag.parents(i);
        for (std::size_t p : c.parents) c.parent_arities.push_back(table.arities[p]);
        c.r = table.arities[i];
        const std::size_t q = table_size(c.parent_arities);
        const std::size_t r = static_cast<std::size_t>(c.r);

        MatD counts(q, r, 0.0);
        for (std::size_t row = 0; row < table.n_rows(); ++row) {
            std::size_t j = 0;
            for (std::size_t p = 0; p < c.parents.size(); ++p)
                j = j * static_cast<std::size_t>(c.parent_arities[p]) +
                    static_cast<std::size_t>(table.data(row, c.parents[p]));
            counts(j, static_cast<std::size_t>(table.data(row, i))) += 1.0;
        }

        c.table = MatD(q, r, 0.0);
        for (std::size_t j = 0; j < q; ++j) {
            double n_ij = 0.0;
            for (std::size_t k = 0; k < r; ++k) n_ij += counts(j, k);
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < r; ++k) {
                double theta = (prior_count + counts(j, k) - 1.0) /
                               (static_cast<double>(c.r) * prior_count + n_ij -
                                static_cast<double>(c.r));
                c.table(j, k) = theta;
                acc += theta;
            }
            c.table(j, r - 1) = 1.0 - acc;
        }
        cpts.push_back(std::move(c));
    }
    return cpts;
}

std::vector<double> posterior_gate(const BayesianNetwork& bn, const std::vector<double>& x,
                                   const std::vector<bool>& missing) {
    return ve_query(bn, build_evidence(bn, x, missing), bn.gate_node);
}

Imputation impute(const BayesianNetwork& bn, const std::vector<double>& x,
                  const std::vector<bool>& missing, std::size_t target) {
    if (target >= bn.feature_count()) throw DomainError("impute target is not a feature node");
    if (!missing[target]) throw UsageError("impute target must be flagged missing");

    Imputation out;
    out.distribution = ve_query(bn, build_evidence(bn, x, missing), target);
    out.state = 0;
    for (std::size_t k = 1; k < out.distribution.size(); ++k)
        if (out.distribution[k] > out.distribution[static_cast<std::size_t>(out.state)])
            out.state = static_cast<int>(k);
    return out;
}

std::string export_dot(const BayesianNetwork& bn, const std::vector<std::string>& names) {
    if (names.size() != bn.dag.node_count())
        throw SizeError("one label per node required for dot export");
    std::ostringstream os;
    os << "digraph bn {\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        os << "  \"" << names[i] << "\"";
        if (i == bn.gate_node) os << " [shape=box]";
        os << ";\n";
    }
    for (const auto& [u, v] : bn.dag.edges())
        os << "  \"" << names[u] << "\" -> \"" << names[v] << "\";\n";
    os << "}\n";
    return os.str();
}

std::string bn_to_json(const BayesianNetwork& bn) {
    nlohmann::json j;
    j["nodes"] = bn.dag.node_count();
    j["gate_node"] = bn.gate_node;
    j["gate_states"] = bn.gate_states;

    std::vector<int> arities;
    for (const Cpt& c : bn.cpts) arities.push_back(c.r);
    j["arities"] = arities;

    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [u, v] : bn.dag.edges()) edges.push_back({u, v});
    j["edges"] = edges;

    nlohmann::json cpts = nlohmann::json::array();
    for (const Cpt& c : bn.cpts) {
        nlohmann::json e;
        e["node"] = c.node;
        e["parents"] = c.parents;
        e["table"] = c.table.data;  // row-major [q x r]
        cpts.push_back(e);
    }
    j["cpts"] = cpts;
    j["discretizer"]["edges"] = bn.discretizer.edges;
    return j.dump(2) + "\n";
}

BayesianNetwork bn_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("network json: ") + e.what());
    }
    try {
        BayesianNetwork bn;
        const auto nodes = j.at("nodes").get<std::size_t>();
        bn.dag = Dag(nodes);
        for (const auto& e : j.at("edges"))
            bn.dag.add_edge(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        bn.gate_node = j.at("gate_node").get<std::size_t>();
        bn.gate_states = j.at("gate_states").get<int>();
        bn.discretizer.edges =
            j.at("discretizer").at("edges").get<std::vector<std::vector<double>>>();

        const auto arities = j.at("arities").get<std::vector<int>>();
        if (arities.size() != nodes) throw SchemaError("network json: arity list length mismatch");
        for (const auto& e : j.at("cpts")) {
            Cpt c;
            c.node = e.at("node").get<std::size_t>();
            if (c.node >= nodes) throw SchemaError("network json: cpt node out of range");
            c.parents = e.at("parents").get<std::vector<std::size_t>>();
            for (std::size_t p : c.parents) {
                if (p >= nodes) throw SchemaError("network json: cpt parent out of range");
                c.parent_arities.push_back(arities[p]);
            }
            c.r = arities[c.node];
            const std::size_t q = table_size(c.parent_arities);
            auto flat = e.at("table").get<std::vector<double>>();
            if (flat.size() != q * static_cast<std::size_t>(c.r))
                throw SchemaError("network json: cpt table size mismatch");
            c.table = MatD(q, static_cast<std::size_t>(c.r));
            c.table.data = std::move(flat);
            bn.cpts.push_back(std::move(c));
        }
        std::sort(bn.cpts.begin(), bn.cpts.end(),
                  [](const Cpt& a, const Cpt& b) { return a.node < b.node; });
        bn.validate();
        return bn;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("network json: ") + e.what());
    }
}

}  // namespace bnmoe
