#include "bnmoe/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <json.hpp>

namespace bnmoe {

namespace {

double sqdist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

std::size_t nearest(const MatD& centroids, const double* x) {
    std::size_t best = 0;
    double best_d = sqdist(centroids.row_ptr(0), x, centroids.cols);
    for (std::size_t c = 1; c < centroids.rows; ++c) {
        double dd = sqdist(centroids.row_ptr(c), x, centroids.cols);
        if (dd < best_d) {
            best_d = dd;
            best = c;
        }
    }
    return best;
}

void check_finite(const MatD& S) {
    for (double v : S.data)
        if (!std::isfinite(v)) throw DataError("clustering: non-finite entry in data");
}

}  // namespace

MatD kmeans_pp_init(const MatD& S, std::size_t k, std::uint64_t seed) {
    const std::size_t n = S.rows, d = S.cols;
    std::mt19937_64 rng(seed);
    MatD centroids(k, d);

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t c0 = first(rng);
    for (std::size_t j = 0; j < d; ++j) centroids(0, j) = S(c0, j);

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sqdist(S.row_ptr(i), centroids.row_ptr(0), d);

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            // all remaining points coincide with chosen centroids
            pick = first(rng);
        } else {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng), acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r <= acc) {
                    pick = i;
                    break;
                }
            }
        }
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = S(pick, j);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], sqdist(S.row_ptr(i), centroids.row_ptr(c), d));
    }
    return centroids;
}

ClusterModel lloyd_from(const MatD& S, const MatD& init_centroids, std::uint64_t seed) {
    const std::size_t n = S.rows, d = S.cols, k = init_centroids.rows;
    if (n < k) throw SizeError("kmeans: n < k");

    MatD centroids = init_centroids;
    std::vector<std::size_t> assignments(n);
    for (std::size_t i = 0; i < n; ++i) assignments[i] = nearest(centroids, S.row_ptr(i));

    const int max_iters = 300;
    for (int it = 0; it < max_iters; ++it) {
        MatD sums(k, d);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t c = assignments[i];
            ++counts[c];
            for (std::size_t j = 0; j < d; ++j) sums(c, j) += S(i, j);
        }
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0)
                for (std::size_t j = 0; j < d; ++j)
                    centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);

        // Empty-cluster repair: reseed to the point farthest from its centroid.
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                double dd = sqdist(S.row_ptr(i), centroids.row_ptr(assignments[i]), d);
                if (dd > far_d) {
                    far_d = dd;
                    far = i;
                }
            }
            for (std::size_t j = 0; j < d; ++j) centroids(c, j) = S(far, j);
            counts[c] = 1;
            counts[assignments[far]] -= 1;
            assignments[far] = c;
        }

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t c = nearest(centroids, S.row_ptr(i));
            if (c != assignments[i]) {
                assignments[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
    }

    ClusterModel model;
    model.k = k;
    model.centroids = std::move(centroids);
    model.assignments = std::move(assignments);
    model.seed = seed;
    model.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        model.inertia += sqdist(S.row_ptr(i), model.centroids.row_ptr(model.assignments[i]), d);
    return model;
}

ClusterModel kmeans(const MatD& S, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw SizeError("kmeans: k must be >= 1");
    if (S.rows < k) throw SizeError("kmeans: n < k");
    check_finite(S);
    return lloyd_from(S, kmeans_pp_init(S, k, seed), seed);
}

namespace {

// Spherical-Gaussian BIC of a fitted k-centroid model on its own points,
// identical-variance formulation from the X-means method. Higher is better.
double spherical_bic(const MatD& pts, const ClusterModel& model) {
    const double n = static_cast<double>(pts.rows);
    const double d = static_cast<double>(pts.cols);
    const double k = static_cast<double>(model.k);
    if (pts.rows <= model.k) return -std::numeric_limits<double>::infinity();

    double variance = model.inertia / (n - k);
    variance = std::max(variance, 1e-12);

    std::vector<std::size_t> counts(model.k, 0);
    for (std::size_t a : model.assignments) ++counts[a];

    double loglik = -0.5 * n * d * std::log(2.0 * M_PI * variance) - 0.5 * (n - k);
    for (std::size_t c = 0; c < model.k; ++c)
        if (counts[c] > 0)
            loglik += static_cast<double>(counts[c]) *
                      std::log(static_cast<double>(counts[c]) / n);

    double params = (k - 1.0) + d * k + 1.0;
    return loglik - 0.5 * params * std::log(n);
}

MatD gather_rows(const MatD& S, const std::vector<std::size_t>& ix) {
    MatD out(ix.size(), S.cols);
    for (std::size_t i = 0; i < ix.size(); ++i)
        for (std::size_t j = 0; j < S.cols; ++j) out(i, j) = S(ix[i], j);
    return out;
}

}  // namespace

ClusterModel xmeans(const MatD& S, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
    if (k_min < 2) throw SizeError("xmeans: k_min must be >= 2");
    if (k_min > k_max) throw SizeError("xmeans: k_min > k_max");
    if (k_max > S.rows / 10) throw SizeError("xmeans: k_max must be <= n/10");
    check_finite(S);

    ClusterModel model = kmeans(S, k_min, seed);

    for (std::uint64_t round = 0; model.k < k_max; ++round) {
        std::vector<std::vector<std::size_t>> members(model.k);
        for (std::size_t i = 0; i < S.rows; ++i) members[model.assignments[i]].push_back(i);

        std::vector<double> rows;
        std::size_t new_k = 0;
        std::size_t projected_k = model.k;
        bool any_split = false;
        auto push_centroid = [&](const double* c) {
            rows.insert(rows.end(), c, c + S.cols);
            ++new_k;
        };

        for (std::size_t c = 0; c < model.k; ++c) {
            bool accept = false;
            ClusterModel split;
            if (members[c].size() >= 4 && projected_k < k_max) {
                MatD pts = gather_rows(S, members[c]);
                ClusterModel one;
                one.k = 1;
                one.centroids = MatD(1, S.cols);
                for (std::size_t j = 0; j < S.cols; ++j) one.centroids(0, j) = model.centroids(c, j);
                one.assignments.assign(pts.rows, 0);
                one.inertia = 0.0;
                for (std::size_t i = 0; i < pts.rows; ++i)
                    one.inertia += sqdist(pts.row_ptr(i), one.centroids.row_ptr(0), S.cols);

                split = kmeans(pts, 2, mix_seed(seed, round * 1000 + c));
                accept = spherical_bic(pts, split) > spherical_bic(pts, one);
            }
            if (accept) {
                push_centroid(split.centroids.row_ptr(0));
                push_centroid(split.centroids.row_ptr(1));
                ++projected_k;
                any_split = true;
            } else {
                push_centroid(model.centroids.row_ptr(c));
            }
        }
        if (!any_split) break;

        MatD grown(new_k, S.cols);
        grown.data = std::move(rows);
        model = lloyd_from(S, grown, seed);
    }

    // Global refinement at the final k.
    model = lloyd_from(S, model.centroids, seed);
    return model;
}

std::size_t assign(const ClusterModel& model, const std::vector<double>& x) {
    if (x.size() != model.centroids.cols) throw SizeError("assign: dimension mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw DataError("assign: non-finite input");
    return nearest(model.centroids, x.data());
}

std::string cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["k"] = model.k;
    j["seed"] = model.seed;
    j["centroids"] = nlohmann::json::array();
    for (std::size_t c = 0; c < model.k; ++c)
        j["centroids"].push_back(model.centroids.row(c));
    return j.dump(2);
}

ClusterModel cluster_model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ClusterModel model;
    model.k = j.at("k").get<std::size_t>();
    model.seed = j.at("seed").get<std::uint64_t>();
    auto rows = j.at("centroids");
    if (rows.size() != model.k) throw DataError("cluster model JSON: centroid count != k");
    std::size_t d = rows.empty() ? 0 : rows[0].size();
    model.centroids = MatD(model.k, d);
    for (std::size_t c = 0; c < model.k; ++c) {
        auto row = rows[c].get<std::vector<double>>();
        if (row.size() != d) throw DataError("cluster model JSON: ragged centroids");
        for (std::size_t jx = 0; jx < d; ++jx) model.centroids(c, jx) = row[jx];
    }
    return model;
}

}  // namespace bnmoe
