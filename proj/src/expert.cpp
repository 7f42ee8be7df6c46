#include "bnmoe/expert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "json.hpp"

namespace bnmoe {
namespace {

std::vector<double> softmax(std::vector<double> z) {
    double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

// Activations per layer: a[0] is the input, a[l+1] the output of layer l.
// Hidden pre-activations z are kept for the ReLU derivative; masks hold the
// inverted-dropout multipliers actually applied (empty when dropout is off).
struct ForwardState {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> masks;
};

ForwardState forward(const ExpertNet& net, const std::vector<double>& x,
                     const std::vector<double>* dropout_masks_flat) {
    ForwardState st;
    st.a.push_back(x);
    std::size_t mask_off = 0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const MatD& W = net.weights[l];
        std::vector<double> z(W.rows, 0.0);
        for (std::size_t i = 0; i < W.rows; ++i) {
            double s = net.biases[l][i];
            const double* wr = W.row_ptr(i);
            for (std::size_t k = 0; k < W.cols; ++k) s += wr[k] * st.a.back()[k];
            z[i] = s;
        }
        st.z.push_back(z);
        if (l + 1 == net.layer_count()) {
            st.a.push_back(softmax(std::move(z)));
        } else {
            std::vector<double> a(z.size());
            std::vector<double> mask(z.size(), 1.0);
            for (std::size_t i = 0; i < z.size(); ++i) {
                a[i] = z[i] > 0.0 ? z[i] : 0.0;
                if (dropout_masks_flat) {
                    mask[i] = (*dropout_masks_flat)[mask_off + i];
                    a[i] *= mask[i];
                }
            }
            mask_off += z.size();
            st.masks.push_back(std::move(mask));
            st.a.push_back(std::move(a));
        }
    }
    return st;
}

struct Grads {
    std::vector<MatD> w;
    std::vector<std::vector<double>> b;

    explicit Grads(const ExpertNet& net) {
        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            w.emplace_back(net.weights[l].rows, net.weights[l].cols, 0.0);
            b.emplace_back(net.biases[l].size(), 0.0);
        }
    }
};

// Accumulates d(cross-entropy)/d(params) for one sample, scaled by `scale`.
void backward(const ExpertNet& net, const ForwardState& st, int label, double scale,
              Grads& g) {
    const std::size_t L = net.layer_count();
    std::vector<double> delta = st.a.back();  // softmax output
    delta[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = L; l-- > 0;) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
            g.b[l][i] += scale * delta[i];
            double* gw = g.w[l].row_ptr(i);
            const std::vector<double>& ain = st.a[l];
            for (std::size_t k = 0; k < ain.size(); ++k) gw[k] += scale * delta[i] * ain[k];
        }
        if (l == 0) break;
        const MatD& W = net.weights[l];
        std::vector<double> prev(W.cols, 0.0);
        for (std::size_t k = 0; k < W.cols; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < W.rows; ++i) s += W(i, k) * delta[i];
            double dz = st.z[l - 1][k] > 0.0 ? 1.0 : 0.0;
            double m = st.masks.empty() ? 1.0 : st.masks[l - 1][k];
            prev[k] = s * dz * m;
        }
        delta = std::move(prev);
    }
}

std::size_t hidden_unit_count(const ExpertNet& net) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < net.dims.size() - 1; ++l) n += net.dims[l + 1];
    return n;
}

}  // namespace

std::vector<double> ExpertNet::predict(const std::vector<double>& x) const {
    if (x.size() != dims.front()) throw SizeError("expert input length mismatch");
    return forward(*this, x, nullptr).a.back();
}

void TrainSpec::validate() const {
    if (epochs < 1) throw ParamError("training needs at least one epoch");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ParamError("dropout rate must be in [0,1)");
    if (minibatch_fraction <= 0.0 || minibatch_fraction > 1.0)
        throw ParamError("minibatch fraction must be in (0,1]");
    if (learning_rate <= 0.0) throw ParamError("learning rate must be positive");
    if (hidden.empty()) throw ParamError("at least one hidden layer required");
}

ExpertNet init_expert(std::size_t d, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    if (d < 1) throw ParamError("expert needs at least one input");
    ExpertNet net;
    net.dims.push_back(d);
    for (std::size_t h : hidden) net.dims.push_back(h);
    net.dims.push_back(2);

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
        const std::size_t fan_in = net.dims[l];
        const std::size_t fan_out = net.dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-limit, limit);
        MatD W(fan_out, fan_in);
        for (double& w : W.data) w = u(rng);
        net.weights.push_back(std::move(W));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

ExpertNet train_expert(const MatD& S_c, const std::vector<int>& y_c, const TrainSpec& spec) {
    spec.validate();
    const std::size_t n = S_c.rows;
    if (n == 0) throw SizeError("cannot train an expert on an empty cluster");
    if (y_c.size() != n) throw SizeError("label count does not match row count");
    for (int y : y_c)
        if (y != 0 && y != 1) throw DataError("expert labels must be 0 or 1");

    ExpertNet net = init_expert(S_c.cols, spec.hidden, spec.seed);
    std::mt19937_64 rng(mix_seed(spec.seed, 0x7261696eULL));

    std::size_t batch = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * spec.minibatch_fraction));
    if (n < 5) {
        std::fprintf(stderr, "warning: cluster of %zu rows is below the minibatch minimum; "
                             "training full-batch\n", n);
        batch = n;
    }
    if (batch < 1) batch = 1;

    const std::size_t mask_len = hidden_unit_count(net);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double keep = 1.0 - spec.dropout_rate;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            Grads g(net);
            for (std::size_t s = start; s < stop; ++s) {
                std::vector<double> mask(mask_len, 1.0);
                if (spec.dropout_rate > 0.0)
                    for (double& m : mask) m = unit(rng) < keep ? 1.0 / keep : 0.0;
                ForwardState st = forward(net, S_c.row(order[s]), &mask);
                backward(net, st, y_c[order[s]], scale, g);
            }
            for (std::size_t l = 0; l < net.layer_count(); ++l) {
                for (std::size_t i = 0; i < net.weights[l].data.size(); ++i)
                    net.weights[l].data[i] -= spec.learning_rate * g.w[l].data[i];
                for (std::size_t i = 0; i < net.biases[l].size(); ++i)
                    net.biases[l][i] -= spec.learning_rate * g.b[l][i];
            }
        }
    }
    return net;
}

double cross_entropy(const ExpertNet& net, const MatD& X, const std::vector<int>& y) {
    if (X.rows != y.size()) throw SizeError("label count does not match row count");
    if (X.rows == 0) throw SizeError("cross entropy of an empty batch");
    double loss = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        std::vector<double> p = net.predict(X.row(r));
        loss -= std::log(p[static_cast<std::size_t>(y[r])]);
    }
    return loss / static_cast<double>(X.rows);
}

double gradient_check(const ExpertNet& net, const MatD& X, const std::vector<int>& y,
                      double epsilon) {
    if (epsilon < 1e-6 || epsilon > 1e-3)
        throw ParamError("finite-difference epsilon outside [1e-6, 1e-3]");

    const double scale = 1.0 / static_cast<double>(X.rows);
    Grads g(net);
    for (std::size_t r = 0; r < X.rows; ++r) {
        ForwardState st = forward(net, X.row(r), nullptr);
        backward(net, st, y[r], scale, g);
    }

    ExpertNet probe = net;
    double worst = 0.0;
    // ReLU gates open/closed per hidden unit per row. A probe that flips any
    // gate straddles a kink, where central differences are meaningless, so
    // such parameters are excluded from the comparison.
    auto gate_pattern = [&]() {
        std::vector<char> bits;
        for (std::size_t r = 0; r < X.rows; ++r) {
            const ForwardState st = forward(probe, X.row(r), nullptr);
            for (std::size_t l = 0; l + 1 < probe.layer_count(); ++l)
                for (double z : st.z[l]) bits.push_back(z > 0.0 ? 1 : 0);
        }
        return bits;
    };
    auto check_param = [&](double& slot, double analytic) {
        const double saved = slot;
        slot = saved + epsilon;
        const double up = cross_entropy(probe, X, y);
        const std::vector<char> gates_up = gate_pattern();
        slot = saved - epsilon;
        const double dn = cross_entropy(probe, X, y);
        const std::vector<char> gates_dn = gate_pattern();
        slot = saved;
        if (gates_up != gates_dn) return;
        const double numeric = (up - dn) / (2.0 * epsilon);
        const double denom = std::max(std::abs(analytic), std::abs(numeric));
        if (denom < 1e-8) return;
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (std::size_t i = 0; i < probe.weights[l].data.size(); ++i)
            check_param(probe.weights[l].data[i], g.w[l].data[i]);
        for (std::size_t i = 0; i < probe.biases[l].size(); ++i)
            check_param(probe.biases[l][i], g.b[l][i]);
    }
    return worst;
}

std::string expert_to_json(const ExpertNet& net) {
    nlohmann::json j;
    j["dims"] = net.dims;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        nlohmann::json e;
        e["w"] = net.weights[l].data;  // row-major [dims[l+1] x dims[l]]
        e["b"] = net.biases[l];
        layers.push_back(e);
    }
    j["layers"] = layers;
    return j.dump(2) + "\n";
}

ExpertNet expert_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        ExpertNet net;
        net.dims = j.at("dims").get<std::vector<std::size_t>>();
        if (net.dims.size() < 2) throw SchemaError("expert json: need at least two layer dims");
        const auto& layers = j.at("layers");
        if (layers.size() != net.dims.size() - 1)
            throw SchemaError("expert json: layer count mismatch");
        for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
            MatD W(net.dims[l + 1], net.dims[l]);
            auto flat = layers[l].at("w").get<std::vector<double>>();
            if (flat.size() != W.data.size()) throw SchemaError("expert json: weight size mismatch");
            W.data = std::move(flat);
            net.weights.push_back(std::move(W));
            auto b = layers[l].at("b").get<std::vector<double>>();
            if (b.size() != net.dims[l + 1]) throw SchemaError("expert json: bias size mismatch");
            net.biases.push_back(std::move(b));
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("expert json: ") + e.what());
    }
}

}  // namespace bnmoe
