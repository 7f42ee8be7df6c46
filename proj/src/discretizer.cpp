#include "bnmoe/discretizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace bnmoe {

int Discretizer::bin(std::size_t feature, double value) const {
    const auto& e = edges[feature];
    return static_cast<int>(std::lower_bound(e.begin(), e.end(), value) - e.begin());
}

std::vector<int> Discretizer::bins_per_feature() const {
    std::vector<int> r(edges.size());
    for (std::size_t j = 0; j < edges.size(); ++j) r[j] = static_cast<int>(edges[j].size()) + 1;
    return r;
}

MatI Discretizer::transform(const MatD& S) const {
    if (S.cols != edges.size()) throw SizeError("discretizer: feature count mismatch");
    MatI out(S.rows, S.cols);
    for (std::size_t i = 0; i < S.rows; ++i)
        for (std::size_t j = 0; j < S.cols; ++j) out(i, j) = bin(j, S(i, j));
    return out;
}

namespace {

// Linear-interpolation quantile over a sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

Discretizer fit_discretizer(const MatD& S, int bins) {
    if (bins < 2) throw ParamError("fit_discretizer: bins must be >= 2");
    if (S.rows < static_cast<std::size_t>(bins)) throw SizeError("fit_discretizer: n < bins");

    Discretizer disc;
    disc.edges.resize(S.cols);
    for (std::size_t j = 0; j < S.cols; ++j) {
        std::vector<double> col = S.col(j);
        std::sort(col.begin(), col.end());
        std::vector<double> e;
        for (int b = 1; b < bins; ++b) {
            double q = quantile_sorted(col, static_cast<double>(b) / static_cast<double>(bins));
            if (e.empty() || q > e.back()) e.push_back(q);  // collapse duplicates
        }
        // an edge at (or above) the max would leave its top bin empty
        while (!e.empty() && e.back() >= col.back()) e.pop_back();
        if (e.empty())
            std::fprintf(stderr, "warning: feature %zu is constant after binning (r=1)\n", j);
        disc.edges[j] = std::move(e);
    }
    return disc;
}

}  // namespace bnmoe
