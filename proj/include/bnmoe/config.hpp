#ifndef BNMOE_CONFIG_HPP
#define BNMOE_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "bnmoe/data_pipeline.hpp"
#include "bnmoe/harness.hpp"

namespace bnmoe {

/// Sectioned key = value text. '#' and ';' start comments; later duplicate
/// keys win; section and key names are case-insensitive (stored lowercase).
struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static ConfigFile parse_text(const std::string& text);
    static ConfigFile parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = "") const;
    void set(const std::string& section, const std::string& key, const std::string& value);
};

/// Everything one run needs; config file values with flag overrides applied.
struct RunConfig {
    std::vector<std::string> csv_paths;   // raw price panels
    std::string date_column;              // empty = first column
    std::string target;                   // instrument whose direction is predicted
    SplitSpec split;
    std::string train_csv;                // pre-ingested datasets, take priority
    std::string test_csv;                 // over csv_paths when both are set
    bool synthetic = false;
    SynthSpec synth;
    ExperimentConfig experiment;
    std::string out_dir = "out";
};

RunConfig run_config_from(const ConfigFile& file);

/// Canonical INI echo of the effective config; parse_text(echo) round-trips.
std::string run_config_echo(const RunConfig& rc);

}  // namespace bnmoe

#endif
