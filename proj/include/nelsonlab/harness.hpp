#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nelsonlab::harness {

using json = nlohmann::ordered_json;

struct Metric {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    std::string comparator;  // "<=", ">=", "=="
    bool pass = false;
    bool timing = false;  // wall-clock metrics; excluded from rerun comparisons
};

struct RunReport {
    std::string experiment;
    json config;
    std::vector<Metric> metrics;
    double duration_seconds = 0.0;
    std::vector<std::string> artifacts;

    bool all_pass() const;
    /// duration excluded on demand so reruns can be compared byte-wise
    json to_json(bool include_duration = true) const;
};

std::vector<std::string> list_experiments();

/// Full default configuration for an experiment; user configs may override
/// any subset of these keys and nothing else.
json default_config(const std::string& experiment);

/// Pure check, no side effects. Empty result means the config is valid.
/// Unknown keys anywhere in the tree are violations.
std::vector<std::string> validate(const json& config);

/// Runs one experiment; writes CSV/JSON/SVG artifacts plus manifest.json
/// and report.json under out_dir. Throws std::invalid_argument on config
/// errors (including underpowered experiment setups).
RunReport run(const json& config, const std::filesystem::path& out_dir);

/// Merge of default and user config (validation must have passed).
json effective_config(const json& config);

}  // namespace nelsonlab::harness
