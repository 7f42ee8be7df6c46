#ifndef BNMOE_DISCRETIZER_HPP
#define BNMOE_DISCRETIZER_HPP

#include <vector>

#include "bnmoe/common.hpp"

namespace bnmoe {

/// Per-feature equal-frequency bin edges. Feature j with edges e_1<..<e_{r-1}
/// maps v to the count of edges strictly below-or-equal, i.e. bins are
/// (-inf, e_1], (e_1, e_2], ..., (e_{r-1}, +inf).
struct Discretizer {
    std::vector<std::vector<double>> edges;  // one ascending vector per feature

    std::size_t n_features() const { return edges.size(); }
    std::size_t n_bins(std::size_t feature) const { return edges[feature].size() + 1; }

    int bin(std::size_t feature, double value) const;
    std::vector<int> bins_per_feature() const;

    MatI transform(const MatD& S) const;
};

/// Quantile (equal-frequency) edges; duplicate quantiles collapse, so a
/// feature can end up with fewer than `bins` states. A constant feature
/// degenerates to a single bin.
Discretizer fit_discretizer(const MatD& S, int bins);

}  // namespace bnmoe

#endif
