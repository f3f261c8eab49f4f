#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "shortstop/orchestrator.hpp"
#include "shortstop/selection.hpp"

namespace shortstop {

// One JSON file holds the whole experimental setup; command-line flags
// override individual fields and the effective values are echoed into every
// output's JSON summary, so a result is reproducible from its own metadata.
struct RunConfig {
    Backend backend = Backend::sim;
    std::optional<std::string> base_url;
    std::string model_id = "sim-reasoner";
    std::string embedding_model_id = "sim-embedder";
    double temperature = 1.0;
    int n = 5;
    Policy policy = Policy::run_all;
    std::string problem_file;
    std::string trace_path;
    std::optional<SimConfig> sim;
    std::optional<RunnerConfig> runner;
    int bins = 40;
    int chunk_words = 500;
    int concurrency_limit = 4;
    int64_t seed = 0;

    void validate() const; // throws ConfigError

    RunPlan to_plan() const;
    RunnerConfig effective_runner() const; // configured runner, or the default
};

// Strict parse: unknown keys are config errors (they are always typos).
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path); // throws ConfigError / IoError

nlohmann::ordered_json run_config_to_json(const RunConfig& config);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json sim_config_to_json(const SimConfig& config);

RunnerConfig runner_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json runner_config_to_json(const RunnerConfig& config);

} // namespace shortstop
