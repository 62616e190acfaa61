#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace srb {

/// One reproducible experiment: system + kind + numeric settings.
/// `extra` carries kind-specific knobs (cone, eps_grid, target_length, ...).
struct ExperimentConfig {
    std::string kind;
    std::string system;
    nlohmann::json params = nlohmann::json::object();
    int n = 0;          // 0 = kind-specific default
    int ensemble = 0;   // 0 = kind-specific default
    std::vector<int> grid;
    double tol = 0.02;
    bool has_seed = false;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir = ".";
    nlohmann::json extra = nlohmann::json::object();

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// All violations, not fail-fast; empty means the config is runnable.
std::vector<std::string> validate(const ExperimentConfig& config);

/// Execute the experiment and write its artifacts plus manifest.json under
/// config.out_dir. Returns the process exit code: 0 ok, 2 validation error,
/// 3 numerical failure (error name recorded in the manifest).
int run(const ExperimentConfig& config);

const std::vector<std::string>& experiment_kinds();

std::uint64_t fnv1a64(const std::string& bytes);
std::string library_version();

} // namespace srb
