#include "bnmoe/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "bnmoe/bayesnet.hpp"
#include "bnmoe/discretizer.hpp"
#include "bnmoe/structure_search.hpp"
#include "json.hpp"

namespace bnmoe {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// One expert per cluster id; rows[i] belongs to cluster assignments[i].
std::vector<ExpertNet> train_cluster_experts(const MatD& S, const std::vector<int>& y,
                                             const std::vector<std::size_t>& assignments,
                                             std::size_t k, const TrainSpec& base,
                                             std::uint64_t seed, double* max_expert_seconds) {
    std::vector<ExpertNet> experts;
    experts.reserve(k);
    double worst = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < assignments.size(); ++i)
            if (assignments[i] == c) rows.push_back(i);
        if (rows.empty())
            throw DataError("cluster " + std::to_string(c) + " received no training rows");
        MatD Sc(rows.size(), S.cols);
        std::vector<int> yc(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t j = 0; j < S.cols; ++j) Sc(i, j) = S(rows[i], j);
            yc[i] = y[rows[i]];
        }
        TrainSpec ts = base;
        ts.seed = mix_seed(seed, 100 + c);
        auto t0 = std::chrono::steady_clock::now();
        experts.push_back(train_expert(Sc, yc, ts));
        worst = std::max(worst, seconds_since(t0));
    }
    if (max_expert_seconds) *max_expert_seconds = worst;
    return experts;
}

GatedEnsemble pipeline_impl(const ReturnsDataset& train, const ExperimentConfig& cfg,
                            std::uint64_t seed, PipelineTimings* timings,
                            bool naive_structure) {
    cfg.validate();
    if (train.size() == 0) throw SizeError("cannot train on an empty dataset");
    const std::size_t d = train.dim();
    auto t0 = std::chrono::steady_clock::now();

    ClusterModel cm =
        cfg.k_selection.mode == KSelection::Mode::fixed
            ? kmeans(train.S, cfg.k_selection.k_fixed, mix_seed(seed, 1))
            : xmeans(train.S, cfg.k_selection.k_min, cfg.k_selection.k_max, mix_seed(seed, 1));
    const std::size_t k = cm.k;

    double max_expert = 0.0;
    std::vector<ExpertNet> experts =
        train_cluster_experts(train.S, train.y, cm.assignments, k, cfg.train, seed, &max_expert);

    Discretizer disc = fit_discretizer(train.S, static_cast<int>(cfg.bins));
    DiscreteTable table;
    table.data = MatI(train.size(), d + 1);
    MatI D = disc.transform(train.S);
    for (std::size_t r = 0; r < train.size(); ++r) {
        for (std::size_t j = 0; j < d; ++j) table.data(r, j) = D(r, j);
        table.data(r, d) = static_cast<int>(cm.assignments[r]);
    }
    table.arities = disc.bins_per_feature();
    table.arities.push_back(static_cast<int>(k));

    Dag dag;
    if (naive_structure) {
        dag = naive_bayes_structure(d, k);
    } else {
        ScoreSpec sspec;
        sspec.criterion = cfg.criterion;
        sspec.max_parents = cfg.max_parents;
        SearchResult sr = cfg.algo == SearchAlgo::hill
                              ? hill_climb(table, sspec, d, mix_seed(seed, 2))
                              : tabu_search(table, sspec, d, mix_seed(seed, 2), cfg.tabu_tenure,
                                            cfg.tabu_max_iters);
        dag = std::move(sr.dag);
    }

    GatedEnsemble ens;
    ens.bn.dag = std::move(dag);
    ens.bn.cpts = fit_cpts(ens.bn.dag, table, cfg.prior_count);
    ens.bn.discretizer = std::move(disc);
    ens.bn.gate_node = d;
    ens.bn.gate_states = static_cast<int>(k);
    ens.experts = std::move(experts);
    ens.h = cfg.h;
    ens.clusters = std::move(cm);
    ens.validate();

    if (timings) {
        timings->total_seconds = seconds_since(t0);
        timings->max_expert_seconds = max_expert;
    }
    return ens;
}

int argmax2(const std::vector<double>& p) { return p[1] > p[0] ? 1 : 0; }

void record_trial(EvalReport& rep, const Metrics& m, double total_s, double expert_s,
                  std::size_t k) {
    rep.accuracy.push_back(m.accuracy);
    rep.f1.push_back(m.f1);
    rep.train_seconds.push_back(total_s);
    rep.max_expert_seconds.push_back(expert_s);
    rep.k_per_trial.push_back(k);
}

std::string fixed_k_label(const ExperimentConfig& cfg) {
    return cfg.k_selection.mode == KSelection::Mode::fixed
               ? std::to_string(cfg.k_selection.k_fixed)
               : std::string("dynamic");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (trials < 1) throw ParamError("at least one trial required");
    if (bins < 2) throw ParamError("need at least two discretizer bins");
    if (h < 0.0 || h >= 1.0) throw ParamError("gate threshold must lie in [0,1)");
    if (prior_count <= 1.0) throw ParamError("prior count must exceed 1");
    if (k_selection.mode == KSelection::Mode::fixed) {
        if (k_selection.k_fixed < 1) throw ParamError("fixed K must be positive");
    } else if (k_selection.k_min < 1 || k_selection.k_max < k_selection.k_min) {
        throw ParamError("dynamic K range is empty");
    }
    train.validate();
}

std::string method_name(SearchAlgo algo, ScoreSpec::Criterion criterion) {
    return (algo == SearchAlgo::hill ? std::string("hill-") : std::string("tabu-")) +
           ScoreSpec::criterion_name(criterion);
}

void parse_method(const std::string& name, SearchAlgo& algo, ScoreSpec::Criterion& criterion) {
    const auto dash = name.find('-');
    if (dash == std::string::npos) throw ParamError("method must look like hill-bic or tabu-aic");
    const std::string head = name.substr(0, dash);
    if (head == "hill")
        algo = SearchAlgo::hill;
    else if (head == "tabu")
        algo = SearchAlgo::tabu;
    else
        throw ParamError("unknown search algorithm: " + head);
    criterion = ScoreSpec::parse_criterion(name.substr(dash + 1));
}

Metrics metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.empty())
        throw UsageError("metrics need two equal-length, non-empty label vectors");
    double tp = 0, fp = 0, fn = 0, hit = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == y_pred[i]) hit += 1;
        if (y_pred[i] == 1 && y_true[i] == 1) tp += 1;
        if (y_pred[i] == 1 && y_true[i] == 0) fp += 1;
        if (y_pred[i] == 0 && y_true[i] == 1) fn += 1;
    }
    Metrics m;
    m.accuracy = hit / static_cast<double>(y_true.size());
    const double denom = 2 * tp + fp + fn;
    m.f1 = denom == 0.0 ? 0.0 : 2 * tp / denom;
    return m;
}

void EvalReport::finalize() {
    acc_mean = mean_of(accuracy);
    f1_mean = mean_of(f1);
    time_mean = mean_of(train_seconds);
    expert_time_mean = mean_of(max_expert_seconds);
    const double n = static_cast<double>(accuracy.size());
    acc_se = n > 0 ? sample_std(accuracy, acc_mean) / std::sqrt(n) : 0.0;
    f1_se = n > 0 ? sample_std(f1, f1_mean) / std::sqrt(n) : 0.0;
    time_std = sample_std(train_seconds, time_mean);
    expert_time_std = sample_std(max_expert_seconds, expert_time_mean);

    std::map<std::size_t, std::size_t> freq;
    for (std::size_t k : k_per_trial) ++freq[k];
    learned_k = 0;
    std::size_t best = 0;
    for (const auto& [k, count] : freq)
        if (count > best) {
            best = count;
            learned_k = k;
        }
}

GatedEnsemble train_pipeline(const ReturnsDataset& train, const ExperimentConfig& cfg,
                             std::uint64_t seed, PipelineTimings* timings) {
    return pipeline_impl(train, cfg, seed, timings, false);
}

EvalReport run_trials(const ReturnsDataset& train, const ReturnsDataset& test,
                      const ExperimentConfig& cfg) {
    cfg.validate();
    EvalReport rep;
    rep.method = method_name(cfg.algo, cfg.criterion);
    rep.k_label = fixed_k_label(cfg);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        PipelineTimings tm;
        GatedEnsemble ens = train_pipeline(train, cfg, cfg.seed_base + t, &tm);
        BatchPrediction bp = predict_batch(ens, test.S);
        record_trial(rep, metrics(test.y, bp.labels), tm.total_seconds, tm.max_expert_seconds,
                     ens.k());
    }
    rep.finalize();
    return rep;
}

EvalReport baseline_single(const ReturnsDataset& train, const ReturnsDataset& test,
                           const ExperimentConfig& cfg) {
    cfg.validate();
    EvalReport rep;
    rep.method = "single";
    rep.k_label = "1";
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        TrainSpec ts = cfg.train;
        ts.seed = mix_seed(cfg.seed_base + t, 100);
        auto t0 = std::chrono::steady_clock::now();
        ExpertNet net = train_expert(train.S, train.y, ts);
        const double dt = seconds_since(t0);
        std::vector<int> pred(test.size());
        for (std::size_t r = 0; r < test.size(); ++r) pred[r] = argmax2(net.predict(test.S.row(r)));
        record_trial(rep, metrics(test.y, pred), dt, dt, 1);
    }
    rep.finalize();
    return rep;
}

EvalReport baseline_hard_kmeans(const ReturnsDataset& train, const ReturnsDataset& test,
                                const ExperimentConfig& cfg) {
    cfg.validate();
    EvalReport rep;
    rep.method = "kmeans-hard";
    rep.k_label = fixed_k_label(cfg);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t seed = cfg.seed_base + t;
        auto t0 = std::chrono::steady_clock::now();
        ClusterModel cm =
            cfg.k_selection.mode == KSelection::Mode::fixed
                ? kmeans(train.S, cfg.k_selection.k_fixed, mix_seed(seed, 1))
                : xmeans(train.S, cfg.k_selection.k_min, cfg.k_selection.k_max, mix_seed(seed, 1));
        double max_expert = 0.0;
        std::vector<ExpertNet> experts = train_cluster_experts(
            train.S, train.y, cm.assignments, cm.k, cfg.train, seed, &max_expert);
        const double dt = seconds_since(t0);

        std::vector<int> pred(test.size());
        for (std::size_t r = 0; r < test.size(); ++r) {
            std::vector<double> x = test.S.row(r);
            pred[r] = argmax2(experts[assign(cm, x)].predict(x));
        }
        record_trial(rep, metrics(test.y, pred), dt, max_expert, cm.k);
    }
    rep.finalize();
    return rep;
}

EvalReport baseline_naive_bayes(const ReturnsDataset& train, const ReturnsDataset& test,
                                const ExperimentConfig& cfg) {
    ExperimentConfig nb = cfg;
    nb.k_selection.mode = KSelection::Mode::dynamic;
    nb.validate();
    EvalReport rep;
    rep.method = "naive-bayes";
    rep.k_label = "dynamic";
    for (std::size_t t = 0; t < nb.trials; ++t) {
        PipelineTimings tm;
        GatedEnsemble ens = pipeline_impl(train, nb, nb.seed_base + t, &tm, true);
        BatchPrediction bp = predict_batch(ens, test.S);
        record_trial(rep, metrics(test.y, bp.labels), tm.total_seconds, tm.max_expert_seconds,
                     ens.k());
    }
    rep.finalize();
    return rep;
}

EvalReport oracle_gate_eval(const ReturnsDataset& train,
                            const std::vector<std::size_t>& train_regimes,
                            const ReturnsDataset& test,
                            const std::vector<std::size_t>& test_regimes,
                            const ExperimentConfig& cfg) {
    cfg.validate();
    if (train_regimes.size() != train.size() || test_regimes.size() != test.size())
        throw SizeError("regime labels must cover every dataset row");
    std::size_t k = 0;
    for (std::size_t r : train_regimes) k = std::max(k, r + 1);

    EvalReport rep;
    rep.method = "oracle-gate";
    rep.k_label = std::to_string(k);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
        const std::uint64_t seed = cfg.seed_base + t;
        auto t0 = std::chrono::steady_clock::now();
        double max_expert = 0.0;
        std::vector<ExpertNet> experts = train_cluster_experts(
            train.S, train.y, train_regimes, k, cfg.train, seed, &max_expert);
        const double dt = seconds_since(t0);

        std::vector<int> pred(test.size());
        for (std::size_t r = 0; r < test.size(); ++r) {
            if (test_regimes[r] >= k) throw DataError("test regime id outside the training set");
            pred[r] = argmax2(experts[test_regimes[r]].predict(test.S.row(r)));
        }
        record_trial(rep, metrics(test.y, pred), dt, max_expert, k);
    }
    rep.finalize();
    return rep;
}

std::vector<EvalReport> sweep(const ReturnsDataset& train, const ReturnsDataset& test,
                              const ExperimentConfig& cfg, SweepAxis axis) {
    std::vector<EvalReport> out;
    if (axis == SweepAxis::method) {
        const ScoreSpec::Criterion bic = cfg.criterion == ScoreSpec::Criterion::bic_n
                                             ? ScoreSpec::Criterion::bic_n
                                             : ScoreSpec::Criterion::bic_paper;
        const ScoreSpec::Criterion criteria[] = {ScoreSpec::Criterion::loglik,
                                                 ScoreSpec::Criterion::aic, bic};
        for (SearchAlgo algo : {SearchAlgo::hill, SearchAlgo::tabu})
            for (ScoreSpec::Criterion crit : criteria) {
                ExperimentConfig c = cfg;
                c.algo = algo;
                c.criterion = crit;
                out.push_back(run_trials(train, test, c));
            }
    } else {
        for (std::size_t k = 2; k <= 7; ++k) {
            ExperimentConfig c = cfg;
            c.k_selection.mode = KSelection::Mode::fixed;
            c.k_selection.k_fixed = k;
            out.push_back(run_trials(train, test, c));
        }
        ExperimentConfig c = cfg;
        c.k_selection.mode = KSelection::Mode::dynamic;
        out.push_back(run_trials(train, test, c));
    }
    return out;
}

std::size_t best_report(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw SizeError("no reports to rank");
    std::size_t best = 0;
    for (std::size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].acc_mean > reports[best].acc_mean ||
            (reports[i].acc_mean == reports[best].acc_mean &&
             reports[i].f1_mean > reports[best].f1_mean))
            best = i;
    }
    return best;
}

SynthData synth_generate(const SynthSpec& sp) {
    if (sp.regimes < 1) throw ParamError("need at least one regime");
    if (sp.d < 1) throw ParamError("need at least one feature");
    if (sp.n_train < 1 || sp.n_test < 1) throw ParamError("need non-empty train and test splits");
    if (sp.noise < 0.0 || sp.noise >= 0.5) throw ParamError("noise must lie in [0, 0.5)");
    if (sp.sigma <= 0.0 || sp.separation <= 0.0)
        throw ParamError("sigma and separation must be positive");
    if (sp.margin < 0.0) throw ParamError("margin must be non-negative");

    // Regime centers form a base-3 grid over the leading axes, so a 3-bin
    // equal-frequency discretizer recovers the regime id exactly and any two
    // regimes are `separation` sigmas apart on at least one axis.
    std::size_t digit_axes = 0;
    std::vector<std::size_t> pow3{1};
    while (pow3.back() < sp.regimes) {
        pow3.push_back(pow3.back() * 3);
        ++digit_axes;
    }
    if (digit_axes > sp.d) throw ParamError("regimes must not exceed 3^d");

    std::mt19937_64 rng(mix_seed(sp.seed, 0x73796e74ULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, sp.regimes - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double step = sp.separation * sp.sigma;
    MatD w(sp.regimes, sp.d);  // per-regime label direction
    for (std::size_t r = 0; r < sp.regimes; ++r) {
        double norm = 0.0;
        for (std::size_t j = 0; j < sp.d; ++j) {
            w(r, j) = gauss(rng);
            norm += w(r, j) * w(r, j);
        }
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < sp.d; ++j) w(r, j) /= norm;
    }

    const std::size_t n = sp.n_train + sp.n_test;
    MatD X(n, sp.d);
    std::vector<int> y(n);
    std::vector<std::size_t> regimes(n);
    std::vector<double> offset(sp.d);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = pick(rng);
        regimes[i] = r;
        // Rejection-sample the within-regime offset until the label rule has
        // at least `margin` sigmas of slack; the flip noise then makes the
        // Bayes-optimal accuracy exactly 1 - noise.
        double raw = 0.0;
        do {
            raw = 0.0;
            for (std::size_t j = 0; j < sp.d; ++j) {
                offset[j] = sp.sigma * gauss(rng);
                raw += w(r, j) * offset[j];
            }
        } while (std::abs(raw) < sp.margin * sp.sigma);
        // Cumulative digit mixing keeps each axis' three center values equally
        // populated whenever 3 divides the regime count, so quantile bin edges
        // fall between clouds rather than inside one.
        std::size_t prev_digit = 0;
        for (std::size_t j = 0; j < sp.d; ++j) {
            double center = 0.0;
            if (j < digit_axes) {
                const std::size_t digit = (r / pow3[j] + prev_digit) % 3;
                prev_digit = digit;
                center = (static_cast<double>(digit) - 1.0) * step;
            }
            X(i, j) = center + offset[j];
        }
        int label = raw > 0.0 ? 1 : 0;
        if (unit(rng) < sp.noise) label = 1 - label;
        y[i] = label;
    }

    SynthData out;
    out.bayes_optimal = 1.0 - sp.noise;
    std::string date = "2000-01-01";
    auto fill = [&](ReturnsDataset& ds, std::size_t begin, std::size_t count) {
        ds.S = MatD(count, sp.d);
        ds.y.resize(count);
        ds.dates.resize(count);
        ds.target_name = "synthetic";
        ds.mean_return = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < sp.d; ++j) ds.S(i, j) = X(begin + i, j);
            ds.y[i] = y[begin + i];
            ds.dates[i] = date;
            date = next_date(date);
        }
    };
    fill(out.train, 0, sp.n_train);
    fill(out.test, sp.n_train, sp.n_test);
    out.train_regimes.assign(regimes.begin(), regimes.begin() + static_cast<std::ptrdiff_t>(sp.n_train));
    out.test_regimes.assign(regimes.begin() + static_cast<std::ptrdiff_t>(sp.n_train), regimes.end());
    return out;
}

namespace {

nlohmann::json report_json_entry(const EvalReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["k"] = r.k_label;
    j["learned_k"] = r.learned_k;
    j["accuracy_mean"] = r.acc_mean;
    j["accuracy_se"] = r.acc_se;
    j["f1_mean"] = r.f1_mean;
    j["f1_se"] = r.f1_se;
    j["time_mean_s"] = r.time_mean;
    j["time_std_s"] = r.time_std;
    j["expert_time_mean_s"] = r.expert_time_mean;
    j["expert_time_std_s"] = r.expert_time_std;
    j["trials"] = r.accuracy.size();
    j["per_trial"]["accuracy"] = r.accuracy;
    j["per_trial"]["f1"] = r.f1;
    j["per_trial"]["train_seconds"] = r.train_seconds;
    j["per_trial"]["max_expert_seconds"] = r.max_expert_seconds;
    j["per_trial"]["k"] = r.k_per_trial;
    return j;
}

std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string report_to_json(const std::vector<EvalReport>& reports) {
    nlohmann::json j = nlohmann::json::array();
    for (const EvalReport& r : reports) j.push_back(report_json_entry(r));
    return j.dump(2) + "\n";
}

std::string report_to_csv(const std::vector<EvalReport>& reports) {
    std::vector<std::size_t> order(reports.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (reports[a].acc_mean != reports[b].acc_mean)
            return reports[a].acc_mean > reports[b].acc_mean;
        return reports[a].f1_mean > reports[b].f1_mean;
    });
    std::ostringstream os;
    os << "method,k,learned_k,accuracy_mean,accuracy_se,f1_mean,f1_se,"
          "time_mean_s,time_std_s,expert_time_mean_s,expert_time_std_s,trials\n";
    for (std::size_t i : order) {
        const EvalReport& r = reports[i];
        os << r.method << ',' << r.k_label << ',' << r.learned_k << ',' << csv_num(r.acc_mean)
           << ',' << csv_num(r.acc_se) << ',' << csv_num(r.f1_mean) << ',' << csv_num(r.f1_se)
           << ',' << csv_num(r.time_mean) << ',' << csv_num(r.time_std) << ','
           << csv_num(r.expert_time_mean) << ',' << csv_num(r.expert_time_std) << ','
           << r.accuracy.size() << '\n';
    }
    return os.str();
}

std::string plot_data_csv(const std::vector<EvalReport>& reports, bool axis_is_k) {
    std::ostringstream os;
    os << (axis_is_k ? "k" : "method") << ",accuracy_mean,accuracy_se\n";
    for (const EvalReport& r : reports)
        os << (axis_is_k ? r.k_label : r.method) << ',' << csv_num(r.acc_mean) << ','
           << csv_num(r.acc_se) << '\n';
    return os.str();
}

}  // namespace bnmoe
