#include "bnmoe/gated_ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "bnmoe/textio.hpp"
#include "json.hpp"

namespace bnmoe {

void GatedEnsemble::validate() const {
    if (experts.empty()) throw SchemaError("ensemble: no experts");
    if (static_cast<std::size_t>(bn.gate_states) != experts.size())
        throw SchemaError("ensemble: gate states and expert count disagree");
    if (h < 0.0 || h >= 1.0) throw SchemaError("ensemble: threshold outside [0,1)");
    const std::size_t d = bn.feature_count();
    for (const ExpertNet& e : experts)
        if (e.dims.empty() || e.dims.front() != d || e.dims.back() != 2)
            throw SchemaError("ensemble: expert shape does not match the feature count");
    bn.validate();
}

GateRow gate_probs(const GatedEnsemble& ens, const std::vector<double>& x,
                   const std::vector<bool>& missing) {
    GateRow row;
    row.p = posterior_gate(ens.bn, x, missing);
    row.p_hat = row.p;
    for (double& v : row.p_hat)
        if (v < ens.h) v = 0.0;
    return row;
}

std::vector<double> combine(const std::vector<std::vector<double>>& expert_out,
                            const std::vector<double>& weights) {
    if (expert_out.size() != weights.size())
        throw SizeError("combine: one weight per expert required");
    std::vector<double> out(expert_out.empty() ? 0 : expert_out.front().size(), 0.0);
    for (std::size_t c = 0; c < expert_out.size(); ++c)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += weights[c] * expert_out[c][i];
    return out;
}

namespace {

// Numeric stand-in for a discretizer bin: the midpoint of its edges, or the
// nearest edge for the two unbounded end bins.
double bin_representative(const Discretizer& disc, std::size_t feature, int state) {
    const std::vector<double>& e = disc.edges[feature];
    if (e.empty()) return 0.0;
    const std::size_t s = static_cast<std::size_t>(state);
    if (s == 0) return e.front();
    if (s >= e.size()) return e.back();
    return 0.5 * (e[s - 1] + e[s]);
}

}  // namespace

Prediction predict_one(const GatedEnsemble& ens, const std::vector<double>& x,
                       const std::vector<bool>& missing) {
    GateRow row = gate_probs(ens, x, missing);
    bool all_zero = true;
    for (double v : row.p_hat)
        if (v != 0.0) all_zero = false;
    if (all_zero) {
        std::fprintf(stderr, "warning: every gate entry fell below the threshold %.6g; "
                             "using the unthresholded posterior\n", ens.h);
        row.p_hat = row.p;
    }

    Prediction pred;
    pred.imputed.assign(x.size(), -1);
    std::vector<double> filled = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!missing[j]) continue;
        Imputation imp = impute(ens.bn, x, missing, j);
        pred.imputed[j] = imp.state;
        filled[j] = bin_representative(ens.bn.discretizer, j, imp.state);
    }

    std::vector<std::vector<double>> outs;
    outs.reserve(ens.experts.size());
    for (const ExpertNet& e : ens.experts) outs.push_back(e.predict(filled));

    pred.combined = combine(outs, row.p_hat);
    pred.p_hat = std::move(row.p_hat);
    pred.label = pred.combined[1] > pred.combined[0] ? 1 : 0;
    return pred;
}

BatchPrediction predict_batch(const GatedEnsemble& ens, const MatD& S_test,
                              bool allow_missing) {
    const std::size_t d = ens.bn.feature_count();
    if (S_test.cols != d && S_test.rows > 0)
        throw SizeError("prediction rows must have one column per feature");

    BatchPrediction out;
    out.P = MatD(S_test.rows, ens.k());
    out.P_hat = MatD(S_test.rows, ens.k());
    out.combined = MatD(S_test.rows, 2);
    out.imputed = MatI(S_test.rows, d, -1);
    out.labels.resize(S_test.rows);

    for (std::size_t r = 0; r < S_test.rows; ++r) {
        std::vector<double> x = S_test.row(r);
        std::vector<bool> missing(d, false);
        for (std::size_t j = 0; j < d; ++j) {
            if (std::isnan(x[j])) {
                if (!allow_missing)
                    throw MissingCellError("missing cell at row " + std::to_string(r) +
                                           ", feature " + std::to_string(j));
                missing[j] = true;
            }
        }
        GateRow row = gate_probs(ens, x, missing);
        Prediction pred = predict_one(ens, x, missing);
        for (std::size_t c = 0; c < ens.k(); ++c) {
            out.P(r, c) = row.p[c];
            out.P_hat(r, c) = pred.p_hat[c];
        }
        for (std::size_t j = 0; j < d; ++j) out.imputed(r, j) = pred.imputed[j];
        out.combined(r, 0) = pred.combined[0];
        out.combined(r, 1) = pred.combined[1];
        out.labels[r] = pred.label;
    }
    return out;
}

void save_bundle(const GatedEnsemble& ens, const std::string& dir) {
    ens.validate();
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);

    write_text_file((base / "bn.json").string(), bn_to_json(ens.bn));
    write_text_file((base / "cluster.json").string(), cluster_model_to_json(ens.clusters));
    nlohmann::json manifest;
    manifest["format"] = "bnmoe-bundle-v1";
    manifest["bn"] = "bn.json";
    manifest["cluster"] = "cluster.json";
    manifest["h"] = ens.h;
    manifest["k"] = ens.k();
    std::vector<std::string> files;
    for (std::size_t c = 0; c < ens.k(); ++c) {
        std::string name = "expert_" + std::to_string(c) + ".json";
        write_text_file((base / name).string(), expert_to_json(ens.experts[c]));
        files.push_back(name);
    }
    manifest["experts"] = files;
    write_text_file((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

GatedEnsemble load_bundle(const std::string& dir) {
    const std::filesystem::path base(dir);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file((base / "manifest.json").string()));
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bundle manifest: ") + e.what());
    }
    try {
        if (manifest.at("format").get<std::string>() != "bnmoe-bundle-v1")
            throw SchemaError("bundle manifest: unknown format tag");
        GatedEnsemble ens;
        ens.h = manifest.at("h").get<double>();
        ens.bn = bn_from_json(
            read_text_file((base / manifest.at("bn").get<std::string>()).string()));
        ens.clusters = cluster_model_from_json(
            read_text_file((base / manifest.at("cluster").get<std::string>()).string()));
        for (const auto& name : manifest.at("experts"))
            ens.experts.push_back(
                expert_from_json(read_text_file((base / name.get<std::string>()).string())));
        if (ens.experts.size() != manifest.at("k").get<std::size_t>())
            throw SchemaError("bundle manifest: expert count mismatch");
        ens.validate();
        return ens;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bundle manifest: ") + e.what());
    }
}

}  // namespace bnmoe
