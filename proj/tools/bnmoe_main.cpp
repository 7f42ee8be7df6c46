#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bnmoe/bayesnet.hpp"
#include "bnmoe/config.hpp"
#include "bnmoe/data_pipeline.hpp"
#include "bnmoe/gated_ensemble.hpp"
#include "bnmoe/harness.hpp"
#include "bnmoe/textio.hpp"

namespace {

using namespace bnmoe;

// Flag values shared by the config-driven subcommands; empty/absent means
// "keep the config file's value".
struct Overrides {
    std::string config_path;
    std::string method;
    std::string k;
    std::optional<std::size_t> bins;
    std::optional<double> threshold;
    std::optional<std::size_t> trials;
    std::optional<long long> seed;
    std::string out;
    std::vector<std::string> synthetic;  // k=v pairs; presence enables the generator
    bool synthetic_given = false;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "config file (INI-style sections)");
    cmd->add_option("--method", ov.method, "search method, e.g. hill-bic, tabu-aic, hill-bic-n");
    cmd->add_option("--k", ov.k, "cluster count (integer) or 'dynamic'");
    cmd->add_option("--bins", ov.bins, "discretizer bins per feature");
    cmd->add_option("--threshold", ov.threshold, "gate threshold h");
    cmd->add_option("--trials", ov.trials, "trial count");
    cmd->add_option("--seed", ov.seed, "seed base");
    cmd->add_option("--out", ov.out, "output directory");
    cmd->add_option("--synthetic", ov.synthetic,
                    "use the synthetic generator; optional k=v pairs "
                    "(regimes, n_train, n_test, d, noise, sigma, separation, margin)")
        ->expected(0, -1)
        ->trigger_on_parse();
}

RunConfig effective_config(const Overrides& ov) {
    ConfigFile file;
    if (!ov.config_path.empty()) file = ConfigFile::parse_file(ov.config_path);
    RunConfig rc = run_config_from(file);

    if (!ov.method.empty())
        parse_method(ov.method, rc.experiment.algo, rc.experiment.criterion);
    if (!ov.k.empty()) {
        if (ov.k == "dynamic") {
            rc.experiment.k_selection.mode = KSelection::Mode::dynamic;
        } else {
            rc.experiment.k_selection.mode = KSelection::Mode::fixed;
            rc.experiment.k_selection.k_fixed = static_cast<std::size_t>(std::stoul(ov.k));
        }
    }
    if (ov.bins) rc.experiment.bins = *ov.bins;
    if (ov.threshold) rc.experiment.h = *ov.threshold;
    if (ov.trials) rc.experiment.trials = *ov.trials;
    if (ov.seed) {
        rc.experiment.seed_base = static_cast<std::uint64_t>(*ov.seed);
        rc.synth.seed = rc.experiment.seed_base;
    }
    if (!ov.out.empty()) rc.out_dir = ov.out;

    if (ov.synthetic_given) rc.synthetic = true;
    for (const std::string& kv : ov.synthetic) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw UsageError("--synthetic arguments must look like key=value, got: " + kv);
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "regimes" || key == "K" || key == "k")
            rc.synth.regimes = std::stoul(val);
        else if (key == "n" || key == "n_train")
            rc.synth.n_train = std::stoul(val);
        else if (key == "n_test")
            rc.synth.n_test = std::stoul(val);
        else if (key == "d")
            rc.synth.d = std::stoul(val);
        else if (key == "noise")
            rc.synth.noise = std::stod(val);
        else if (key == "sigma")
            rc.synth.sigma = std::stod(val);
        else if (key == "separation")
            rc.synth.separation = std::stod(val);
        else if (key == "margin")
            rc.synth.margin = std::stod(val);
        else
            throw UsageError("unknown --synthetic key: " + key);
    }
    return rc;
}

void write_effective_config(const RunConfig& rc) {
    std::filesystem::create_directories(rc.out_dir);
    write_text_file((std::filesystem::path(rc.out_dir) / "effective_config.ini").string(),
                    run_config_echo(rc));
}

// Datasets for train/evaluate: generator > pre-ingested CSVs > raw pipeline.
DatasetSplit resolve_datasets(const RunConfig& rc) {
    if (rc.synthetic) {
        SynthData synth = synth_generate(rc.synth);
        return {std::move(synth.train), std::move(synth.test)};
    }
    if (!rc.train_csv.empty() && !rc.test_csv.empty()) {
        DatasetSplit split;
        split.train = load_dataset_csv(rc.train_csv);
        split.test = load_dataset_csv(rc.test_csv);
        return split;
    }
    if (rc.csv_paths.empty())
        throw UsageError("no data source: set [synthetic] enabled, train_csv/test_csv, or csvs");

    std::vector<PricePanel> panels;
    CsvSchema schema;
    schema.date_column = rc.date_column;
    for (const std::string& path : rc.csv_paths) panels.push_back(load_csv(path, schema));
    PricePanel panel = align_and_fill(panels);
    MatD returns = to_returns(panel);

    for (std::size_t j = 0; j < panel.n_instruments(); ++j) {
        DickeyFullerResult df = dickey_fuller(returns.col(j));
        if (!df.reject_unit_root)
            std::fprintf(stderr,
                         "warning: returns of %s look non-stationary (DF statistic %.3f)\n",
                         panel.instruments[j].c_str(), df.statistic);
    }

    std::vector<std::string> label_dates(panel.dates.begin() + 1, panel.dates.end());
    std::string target = rc.target.empty() ? panel.instruments.front() : rc.target;
    return build_dataset(returns, label_dates, panel.instruments, target, rc.split);
}

void write_regimes_csv(const std::string& path, const std::vector<std::string>& dates,
                       const std::vector<std::size_t>& regimes) {
    std::ostringstream os;
    os << "date,regime\n";
    for (std::size_t i = 0; i < regimes.size(); ++i)
        os << dates[i] << ',' << regimes[i] << '\n';
    write_text_file(path, os.str());
}

int cmd_ingest(const Overrides& ov) {
    RunConfig rc = effective_config(ov);
    write_effective_config(rc);
    const std::filesystem::path out(rc.out_dir);

    if (rc.synthetic) {
        SynthData synth = synth_generate(rc.synth);
        export_dataset_csv(synth.train, (out / "train.csv").string());
        export_dataset_csv(synth.test, (out / "test.csv").string());
        write_regimes_csv((out / "train_regimes.csv").string(), synth.train.dates,
                          synth.train_regimes);
        write_regimes_csv((out / "test_regimes.csv").string(), synth.test.dates,
                          synth.test_regimes);
        std::fprintf(stderr, "ingest: wrote synthetic train (%zu rows) and test (%zu rows)\n",
                     synth.train.size(), synth.test.size());
        return 0;
    }

    DatasetSplit split = resolve_datasets(rc);
    export_dataset_csv(split.train, (out / "train.csv").string());
    export_dataset_csv(split.test, (out / "test.csv").string());
    std::fprintf(stderr, "ingest: wrote train (%zu rows) and test (%zu rows)\n",
                 split.train.size(), split.test.size());
    return 0;
}

int cmd_train(const Overrides& ov) {
    RunConfig rc = effective_config(ov);
    write_effective_config(rc);
    const std::filesystem::path out(rc.out_dir);

    DatasetSplit data = resolve_datasets(rc);
    PipelineTimings tm;
    GatedEnsemble ens = train_pipeline(data.train, rc.experiment, rc.experiment.seed_base, &tm);
    save_bundle(ens, (out / "bundle").string());

    std::vector<std::string> names;
    for (std::size_t j = 0; j < ens.bn.feature_count(); ++j)
        names.push_back("X" + std::to_string(j + 1));
    names.push_back("gate");
    write_text_file((out / "bn.dot").string(), export_dot(ens.bn, names));
    std::fprintf(stderr, "train: k=%zu, %zu bn edges, %.2fs total\n", ens.k(),
                 ens.bn.dag.edge_count(), tm.total_seconds);
    return 0;
}

int cmd_evaluate(const Overrides& ov, const std::string& sweep_axis) {
    RunConfig rc = effective_config(ov);
    write_effective_config(rc);
    const std::filesystem::path out(rc.out_dir);

    DatasetSplit data = resolve_datasets(rc);
    std::vector<EvalReport> reports;
    reports.push_back(run_trials(data.train, data.test, rc.experiment));
    reports.push_back(baseline_single(data.train, data.test, rc.experiment));
    reports.push_back(baseline_hard_kmeans(data.train, data.test, rc.experiment));
    reports.push_back(baseline_naive_bayes(data.train, data.test, rc.experiment));
    write_text_file((out / "report.json").string(), report_to_json(reports));
    write_text_file((out / "report.csv").string(), report_to_csv(reports));

    if (!sweep_axis.empty()) {
        const SweepAxis axis = sweep_axis == "k" ? SweepAxis::k : SweepAxis::method;
        if (sweep_axis != "k" && sweep_axis != "method")
            throw UsageError("--sweep takes 'k' or 'method', got: " + sweep_axis);
        std::vector<EvalReport> sw = sweep(data.train, data.test, rc.experiment, axis);
        const std::string tag = "sweep_" + sweep_axis;
        write_text_file((out / (tag + ".json")).string(), report_to_json(sw));
        write_text_file((out / (tag + ".csv")).string(), report_to_csv(sw));
        write_text_file((out / (tag + "_plot.csv")).string(),
                        plot_data_csv(sw, axis == SweepAxis::k));
        const EvalReport& best = sw[best_report(sw)];
        std::fprintf(stderr, "sweep %s: best %s k=%s accuracy %.4f +- %.4f\n",
                     sweep_axis.c_str(), best.method.c_str(), best.k_label.c_str(),
                     best.acc_mean, best.acc_se);
    }

    for (const EvalReport& r : reports)
        std::fprintf(stderr, "evaluate: %-12s k=%-8s acc %.4f +- %.4f  f1 %.4f +- %.4f\n",
                     r.method.c_str(), r.k_label.c_str(), r.acc_mean, r.acc_se, r.f1_mean,
                     r.f1_se);
    return 0;
}

int cmd_predict(const std::string& bundle_dir, const std::string& input_csv,
                const std::string& out_path, bool allow_missing) {
    GatedEnsemble ens = load_bundle(bundle_dir);
    FeatureFrame frame = load_feature_csv(input_csv);
    BatchPrediction bp = predict_batch(ens, frame.X, allow_missing);

    std::ostringstream os;
    os << "date,label";
    for (std::size_t c = 0; c < ens.k(); ++c) os << ",gate_" << c;
    if (allow_missing)
        for (std::size_t j = 0; j < ens.bn.feature_count(); ++j) os << ",imputed_x" << (j + 1);
    os << '\n';
    os.precision(10);
    for (std::size_t r = 0; r < frame.X.rows; ++r) {
        os << frame.dates[r] << ',' << bp.labels[r];
        for (std::size_t c = 0; c < ens.k(); ++c) os << ',' << bp.P(r, c);
        if (allow_missing)
            for (std::size_t j = 0; j < ens.bn.feature_count(); ++j) os << ',' << bp.imputed(r, j);
        os << '\n';
    }
    write_text_file(out_path, os.str());
    std::fprintf(stderr, "predict: %zu rows -> %s\n", frame.X.rows, out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian-network-gated mixture of experts for returns direction"};
    app.require_subcommand(1);

    Overrides ov;
    std::string sweep_axis;
    std::string bundle_dir, input_csv, predict_out = "predictions.csv";
    bool allow_missing = false;

    CLI::App* ingest = app.add_subcommand("ingest", "build train/test dataset CSVs");
    add_common_flags(ingest, ov);

    CLI::App* train = app.add_subcommand("train", "train one ensemble and export it");
    add_common_flags(train, ov);

    CLI::App* evaluate = app.add_subcommand("evaluate", "run trials, baselines, optional sweeps");
    add_common_flags(evaluate, ov);
    evaluate->add_option("--sweep", sweep_axis, "sweep axis: k or method");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "evaluate with a sweep (default axis: k)");
    add_common_flags(sweep_cmd, ov);
    sweep_cmd->add_option("--sweep", sweep_axis, "sweep axis: k or method");

    CLI::App* predict = app.add_subcommand("predict", "predict rows with a saved bundle");
    predict->add_option("bundle", bundle_dir, "ensemble bundle directory")->required();
    predict->add_option("input", input_csv, "feature CSV (date,x1..xd)")->required();
    predict->add_option("--out", predict_out, "output CSV path");
    predict->add_flag("--allow-missing", allow_missing,
                      "marginalize and impute empty cells instead of failing");

    try {
        app.parse(argc, argv);
        ov.synthetic_given = ingest->count("--synthetic") || train->count("--synthetic") ||
                             evaluate->count("--synthetic") || sweep_cmd->count("--synthetic");
        if (ingest->parsed()) return cmd_ingest(ov);
        if (train->parsed()) return cmd_train(ov);
        if (evaluate->parsed()) return cmd_evaluate(ov, sweep_axis);
        if (sweep_cmd->parsed()) return cmd_evaluate(ov, sweep_axis.empty() ? "k" : sweep_axis);
        if (predict->parsed()) return cmd_predict(bundle_dir, input_csv, predict_out, allow_missing);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const bnmoe::MissingCellError& e) {
        std::fprintf(stderr, "error: %s (re-run with --allow-missing to impute)\n", e.what());
        return 3;
    } catch (const bnmoe::FileError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
