#ifndef BNMOE_HARNESS_HPP
#define BNMOE_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bnmoe/clustering.hpp"
#include "bnmoe/data_pipeline.hpp"
#include "bnmoe/expert.hpp"
#include "bnmoe/gated_ensemble.hpp"
#include "bnmoe/score.hpp"

namespace bnmoe {

enum class SearchAlgo { hill, tabu };

struct ExperimentConfig {
    KSelection k_selection;
    SearchAlgo algo = SearchAlgo::hill;
    ScoreSpec::Criterion criterion = ScoreSpec::Criterion::bic_paper;
    std::size_t max_parents = 3;
    std::size_t bins = 3;
    double h = 0.001;
    double prior_count = 2.0;
    TrainSpec train;
    std::size_t tabu_tenure = 10;
    std::size_t tabu_max_iters = 100;
    std::size_t trials = 100;
    std::uint64_t seed_base = 0;

    void validate() const;
};

/// "hill-bic", "tabu-aic", ... CLI spelling of (algo, criterion).
std::string method_name(SearchAlgo algo, ScoreSpec::Criterion criterion);
void parse_method(const std::string& name, SearchAlgo& algo, ScoreSpec::Criterion& criterion);

struct Metrics {
    double accuracy = 0.0;
    double f1 = 0.0;
};

/// Accuracy plus F1 of the positive class; an empty positive-class
/// denominator yields F1 = 0.
Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct EvalReport {
    std::string method;
    std::string k_label;                     // "6" or "dynamic"
    std::size_t learned_k = 0;               // most frequent learned K over trials
    std::vector<double> accuracy;            // per trial
    std::vector<double> f1;
    std::vector<double> train_seconds;       // per trial, whole pipeline
    std::vector<double> max_expert_seconds;  // per trial, slowest single expert
    std::vector<std::size_t> k_per_trial;

    double acc_mean = 0.0, acc_se = 0.0;
    double f1_mean = 0.0, f1_se = 0.0;
    double time_mean = 0.0, time_std = 0.0;
    double expert_time_mean = 0.0, expert_time_std = 0.0;

    void finalize();  // fills the aggregates from the per-trial vectors
};

struct PipelineTimings {
    double total_seconds = 0.0;
    double max_expert_seconds = 0.0;
};

/// Cluster, train one expert per cluster, learn the gate network on the
/// discretized features plus the cluster column, and assemble the ensemble.
GatedEnsemble train_pipeline(const ReturnsDataset& train, const ExperimentConfig& cfg,
                             std::uint64_t seed, PipelineTimings* timings = nullptr);

/// trials runs of train_pipeline/predict_batch with seeds seed_base + t.
EvalReport run_trials(const ReturnsDataset& train, const ReturnsDataset& test,
                      const ExperimentConfig& cfg);

/// One expert on the undivided training data.
EvalReport baseline_single(const ReturnsDataset& train, const ReturnsDataset& test,
                           const ExperimentConfig& cfg);

/// Per-cluster experts, test rows routed hard to the nearest centroid.
EvalReport baseline_hard_kmeans(const ReturnsDataset& train, const ReturnsDataset& test,
                                const ExperimentConfig& cfg);

/// Gate structure fixed to the naive-Bayes star (no search), dynamic K.
EvalReport baseline_naive_bayes(const ReturnsDataset& train, const ReturnsDataset& test,
                                const ExperimentConfig& cfg);

/// Experts trained on the generator's true regimes and routed by the true
/// regime of each test row. Upper reference for the learned gate.
EvalReport oracle_gate_eval(const ReturnsDataset& train,
                            const std::vector<std::size_t>& train_regimes,
                            const ReturnsDataset& test,
                            const std::vector<std::size_t>& test_regimes,
                            const ExperimentConfig& cfg);

enum class SweepAxis { method, k };

/// Method axis: the six {hill,tabu} x {loglik,aic,bic} variants.
/// K axis: fixed K in 2..7 plus dynamic. Reports come back in axis order.
std::vector<EvalReport> sweep(const ReturnsDataset& train, const ReturnsDataset& test,
                              const ExperimentConfig& cfg, SweepAxis axis);

/// Index of the winning report: max mean accuracy, ties to higher F1.
std::size_t best_report(const std::vector<EvalReport>& reports);

struct SynthSpec {
    std::size_t regimes = 6;
    std::size_t n_train = 4000;
    std::size_t n_test = 1000;
    std::size_t d = 6;
    double noise = 0.15;      // label flip probability
    double sigma = 0.5;       // within-regime spread
    double separation = 8.0;  // center spacing in sigma units, >= 6 keeps regimes recoverable
    double margin = 1.5;      // minimum |w.offset| in sigma units before the flip
    std::uint64_t seed = 0;
};

struct SynthData {
    ReturnsDataset train;
    ReturnsDataset test;
    std::vector<std::size_t> train_regimes;
    std::vector<std::size_t> test_regimes;
    double bayes_optimal = 0.0;  // 1 - noise
};

/// Mixture of well-separated Gaussian regimes on a base-3 grid over the
/// leading axes, each regime with its own linear label rule; the label is
/// flipped with probability noise, so the Bayes-optimal accuracy is
/// 1 - noise by construction.
SynthData synth_generate(const SynthSpec& spec);

std::string report_to_json(const std::vector<EvalReport>& reports);
/// Comparison table sorted best-first (same ordering rule as best_report).
std::string report_to_csv(const std::vector<EvalReport>& reports);
/// Two-column plot series: one row per report, x taken from k_label when
/// axis_is_k, else from the method label.
std::string plot_data_csv(const std::vector<EvalReport>& reports, bool axis_is_k);

}  // namespace bnmoe

#endif
