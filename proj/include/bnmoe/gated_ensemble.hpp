#ifndef BNMOE_GATED_ENSEMBLE_HPP
#define BNMOE_GATED_ENSEMBLE_HPP

#include <string>
#include <vector>

#include "bnmoe/bayesnet.hpp"
#include "bnmoe/clustering.hpp"
#include "bnmoe/common.hpp"
#include "bnmoe/expert.hpp"

namespace bnmoe {

/// K per-cluster experts plus the Bayesian network that gates them.
struct GatedEnsemble {
    std::vector<ExpertNet> experts;  // experts[c] serves gate state c
    BayesianNetwork bn;
    double h = 0.001;                // gate threshold
    ClusterModel clusters;           // training-time provenance

    std::size_t k() const { return experts.size(); }
    void validate() const;
};

struct GateRow {
    std::vector<double> p;      // posterior over gate states
    std::vector<double> p_hat;  // entries < h zeroed, no renormalization
};

struct Prediction {
    int label = 0;                 // argmax of combined, tie -> 0
    std::vector<double> combined;  // sum_c p_hat[c] * expert_c(x), unnormalized
    std::vector<double> p_hat;
    std::vector<int> imputed;      // per feature: imputed state, -1 where observed
};

struct BatchPrediction {
    std::vector<int> labels;
    MatD P;         // [m x K] gate posteriors
    MatD P_hat;     // [m x K] thresholded
    MatD combined;  // [m x 2]
    MatI imputed;   // [m x d], -1 where observed
};

GateRow gate_probs(const GatedEnsemble& ens, const std::vector<double>& x,
                   const std::vector<bool>& missing);

/// Weighted sum of the experts' outputs, accumulated in expert order so the
/// floating-point result is reproducible.
std::vector<double> combine(const std::vector<std::vector<double>>& expert_out,
                            const std::vector<double>& weights);

Prediction predict_one(const GatedEnsemble& ens, const std::vector<double>& x,
                       const std::vector<bool>& missing);

/// Row-wise predict_one. NaN cells count as missing; they are rejected with
/// MissingCellError unless allow_missing is set.
BatchPrediction predict_batch(const GatedEnsemble& ens, const MatD& S_test,
                              bool allow_missing = false);

/// Writes manifest.json, bn.json, cluster.json and one expert_<c>.json per
/// expert into dir (created if absent). Byte-stable for identical models.
void save_bundle(const GatedEnsemble& ens, const std::string& dir);
GatedEnsemble load_bundle(const std::string& dir);

}  // namespace bnmoe

#endif
