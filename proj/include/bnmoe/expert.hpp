#ifndef BNMOE_EXPERT_HPP
#define BNMOE_EXPERT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bnmoe/common.hpp"

namespace bnmoe {

/// Feed-forward classifier with ReLU hidden layers and a softmax head.
/// weights[l] is [dims[l+1] x dims[l]], biases[l] is [dims[l+1]].
struct ExpertNet {
    std::vector<std::size_t> dims;  // e.g. [d, 6, 6, 2]
    std::vector<MatD> weights;
    std::vector<std::vector<double>> biases;

    std::size_t layer_count() const { return weights.size(); }
    /// Forward pass without dropout; returns the softmax 2-vector.
    std::vector<double> predict(const std::vector<double>& x) const;
};

struct TrainSpec {
    std::size_t epochs = 100;
    double dropout_rate = 0.2;          // inverted dropout on hidden activations
    double minibatch_fraction = 0.2;    // of the cluster's rows
    double learning_rate = 0.01;
    std::vector<std::size_t> hidden = {6, 6};
    std::uint64_t seed = 0;

    void validate() const;
};

/// He-uniform weights (limit sqrt(6/fan_in)), zero biases, seeded.
ExpertNet init_expert(std::size_t d, const std::vector<std::size_t>& hidden, std::uint64_t seed);

/// Minibatch SGD on softmax cross-entropy. Deterministic for a given seed.
/// Clusters with fewer than 5 rows fall back to full-batch updates with a
/// warning on stderr.
ExpertNet train_expert(const MatD& S_c, const std::vector<int>& y_c, const TrainSpec& spec);

/// Mean cross-entropy of the batch under the network (dropout off).
double cross_entropy(const ExpertNet& net, const MatD& X, const std::vector<int>& y);

/// Max relative disagreement between the analytic gradient and central
/// finite differences over every weight and bias. Near-zero pairs (both
/// below 1e-8 in magnitude) count as 0, and parameters whose perturbation
/// flips a ReLU gate are excluded: the loss has a kink there and central
/// differences do not estimate a derivative.
double gradient_check(const ExpertNet& net, const MatD& X, const std::vector<int>& y,
                      double epsilon);

std::string expert_to_json(const ExpertNet& net);
ExpertNet expert_from_json(const std::string& text);

}  // namespace bnmoe

#endif
