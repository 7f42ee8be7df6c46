#include "bnmoe/config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "bnmoe/textio.hpp"

namespace bnmoe {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

long to_long(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw SchemaError("config [" + section + "] " + key + ": not an integer: " + v);
    }
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw SchemaError("config [" + section + "] " + key + ": not a number: " + v);
    }
}

bool to_bool(const std::string& section, const std::string& key, const std::string& v) {
    std::string s = lower(v);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw SchemaError("config [" + section + "] " + key + ": not a boolean: " + v);
}

}  // namespace

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile cfg;
    std::istringstream is(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw SchemaError("config line " + std::to_string(lineno) + ": unclosed section");
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty())
                throw SchemaError("config line " + std::to_string(lineno) + ": empty section name");
            cfg.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = lower(trim(line.substr(0, eq)));
        if (key.empty())
            throw SchemaError("config line " + std::to_string(lineno) + ": empty key");
        cfg.sections[section][key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    return parse_text(read_text_file(path));
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections.find(lower(section));
    return s != sections.end() && s->second.count(lower(key)) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto s = sections.find(lower(section));
    if (s == sections.end()) return fallback;
    auto k = s->second.find(lower(key));
    return k == s->second.end() ? fallback : k->second;
}

void ConfigFile::set(const std::string& section, const std::string& key,
                     const std::string& value) {
    sections[lower(section)][lower(key)] = value;
}

RunConfig run_config_from(const ConfigFile& f) {
    RunConfig rc;
    rc.csv_paths = split_list(f.get("data", "csvs"));
    rc.date_column = f.get("data", "date_column");
    rc.target = f.get("data", "target");
    rc.split.train_end_date = f.get("data", "train_end");
    rc.split.test_end_date = f.get("data", "test_end");
    rc.train_csv = f.get("data", "train_csv");
    rc.test_csv = f.get("data", "test_csv");
    rc.out_dir = f.get("output", "dir", "out");

    ExperimentConfig& e = rc.experiment;
    parse_method(f.get("experiment", "method", "hill-bic"), e.algo, e.criterion);
    const std::string k = lower(f.get("experiment", "k", "dynamic"));
    if (k == "dynamic") {
        e.k_selection.mode = KSelection::Mode::dynamic;
    } else {
        e.k_selection.mode = KSelection::Mode::fixed;
        e.k_selection.k_fixed = static_cast<std::size_t>(to_long("experiment", "k", k));
    }
    e.k_selection.k_min =
        static_cast<std::size_t>(to_long("experiment", "k_min", f.get("experiment", "k_min", "2")));
    e.k_selection.k_max = static_cast<std::size_t>(
        to_long("experiment", "k_max", f.get("experiment", "k_max", "10")));
    e.bins = static_cast<std::size_t>(to_long("experiment", "bins", f.get("experiment", "bins", "3")));
    e.h = to_double("experiment", "threshold", f.get("experiment", "threshold", "0.001"));
    e.max_parents = static_cast<std::size_t>(
        to_long("experiment", "max_parents", f.get("experiment", "max_parents", "3")));
    e.prior_count =
        to_double("experiment", "prior_count", f.get("experiment", "prior_count", "2"));
    e.tabu_tenure = static_cast<std::size_t>(
        to_long("experiment", "tabu_tenure", f.get("experiment", "tabu_tenure", "10")));
    e.tabu_max_iters = static_cast<std::size_t>(
        to_long("experiment", "tabu_max_iters", f.get("experiment", "tabu_max_iters", "100")));
    e.trials =
        static_cast<std::size_t>(to_long("experiment", "trials", f.get("experiment", "trials", "100")));
    e.seed_base = static_cast<std::uint64_t>(
        to_long("experiment", "seed", f.get("experiment", "seed", "0")));

    e.train.epochs = static_cast<std::size_t>(
        to_long("expert", "epochs", f.get("expert", "epochs", "100")));
    e.train.dropout_rate = to_double("expert", "dropout", f.get("expert", "dropout", "0.2"));
    e.train.minibatch_fraction = to_double("expert", "minibatch_fraction",
                                           f.get("expert", "minibatch_fraction", "0.2"));
    e.train.learning_rate =
        to_double("expert", "learning_rate", f.get("expert", "learning_rate", "0.01"));
    e.train.hidden.clear();
    for (const std::string& dim : split_list(f.get("expert", "hidden", "6, 6")))
        e.train.hidden.push_back(static_cast<std::size_t>(to_long("expert", "hidden", dim)));

    rc.synthetic = f.has("synthetic", "enabled") &&
                   to_bool("synthetic", "enabled", f.get("synthetic", "enabled"));
    SynthSpec& s = rc.synth;
    s.regimes = static_cast<std::size_t>(
        to_long("synthetic", "regimes", f.get("synthetic", "regimes", "6")));
    s.n_train = static_cast<std::size_t>(
        to_long("synthetic", "n_train", f.get("synthetic", "n_train", "4000")));
    s.n_test = static_cast<std::size_t>(
        to_long("synthetic", "n_test", f.get("synthetic", "n_test", "1000")));
    s.d = static_cast<std::size_t>(to_long("synthetic", "d", f.get("synthetic", "d", "6")));
    s.noise = to_double("synthetic", "noise", f.get("synthetic", "noise", "0.15"));
    s.sigma = to_double("synthetic", "sigma", f.get("synthetic", "sigma", "0.5"));
    s.separation =
        to_double("synthetic", "separation", f.get("synthetic", "separation", "8"));
    s.margin = to_double("synthetic", "margin", f.get("synthetic", "margin", "1.5"));
    s.seed = e.seed_base;
    return rc;
}

std::string run_config_echo(const RunConfig& rc) {
    const ExperimentConfig& e = rc.experiment;
    std::ostringstream os;
    os << "[data]\n";
    os << "csvs = " << join_list(rc.csv_paths) << "\n";
    os << "date_column = " << rc.date_column << "\n";
    os << "target = " << rc.target << "\n";
    os << "train_end = " << rc.split.train_end_date << "\n";
    os << "test_end = " << rc.split.test_end_date << "\n";
    os << "train_csv = " << rc.train_csv << "\n";
    os << "test_csv = " << rc.test_csv << "\n";
    os << "\n[experiment]\n";
    os << "method = " << method_name(e.algo, e.criterion) << "\n";
    if (e.k_selection.mode == KSelection::Mode::fixed)
        os << "k = " << e.k_selection.k_fixed << "\n";
    else
        os << "k = dynamic\n";
    os << "k_min = " << e.k_selection.k_min << "\n";
    os << "k_max = " << e.k_selection.k_max << "\n";
    os << "bins = " << e.bins << "\n";
    os << "threshold = " << e.h << "\n";
    os << "max_parents = " << e.max_parents << "\n";
    os << "prior_count = " << e.prior_count << "\n";
    os << "tabu_tenure = " << e.tabu_tenure << "\n";
    os << "tabu_max_iters = " << e.tabu_max_iters << "\n";
    os << "trials = " << e.trials << "\n";
    os << "seed = " << e.seed_base << "\n";
    os << "\n[expert]\n";
    os << "epochs = " << e.train.epochs << "\n";
    os << "dropout = " << e.train.dropout_rate << "\n";
    os << "minibatch_fraction = " << e.train.minibatch_fraction << "\n";
    os << "learning_rate = " << e.train.learning_rate << "\n";
    std::vector<std::string> dims;
    for (std::size_t h : e.train.hidden) dims.push_back(std::to_string(h));
    os << "hidden = " << join_list(dims) << "\n";
    os << "\n[synthetic]\n";
    os << "enabled = " << (rc.synthetic ? "true" : "false") << "\n";
    os << "regimes = " << rc.synth.regimes << "\n";
    os << "n_train = " << rc.synth.n_train << "\n";
    os << "n_test = " << rc.synth.n_test << "\n";
    os << "d = " << rc.synth.d << "\n";
    os << "noise = " << rc.synth.noise << "\n";
    os << "sigma = " << rc.synth.sigma << "\n";
    os << "separation = " << rc.synth.separation << "\n";
    os << "margin = " << rc.synth.margin << "\n";
    os << "\n[output]\n";
    os << "dir = " << rc.out_dir << "\n";
    return os.str();
}

}  // namespace bnmoe
