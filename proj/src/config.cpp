#include "shortstop/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace shortstop {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { raise(Errc::ConfigError, what); }

void require_object(const json& j, const char* what) {
    if (!j.is_object()) bad(std::string(what) + " must be a JSON object");
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            bad("unknown key \"" + it.key() + "\" in " + what);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(std::string("bad value for \"") + key + "\"");
    }
}

std::string get_string(const json& j, const char* key) {
    if (!j.contains(key)) bad(std::string("missing required key \"") + key + "\"");
    if (!j.at(key).is_string()) bad(std::string("\"") + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

} // namespace

SimConfig sim_config_from_json(const json& j) {
    require_object(j, "sim config");
    reject_unknown(j,
                   {"mode_tokens", "conv_sigma", "overthink_prob", "overthink_scale",
                    "p_correct_conv", "p_correct_over", "marker_slope", "marker_plateau",
                    "embed_drift", "seed"},
                   "sim config");
    SimConfig c;
    c.mode_tokens = get_or<int64_t>(j, "mode_tokens", c.mode_tokens);
    c.conv_sigma = get_or<double>(j, "conv_sigma", c.conv_sigma);
    c.overthink_prob = get_or<double>(j, "overthink_prob", c.overthink_prob);
    c.overthink_scale = get_or<double>(j, "overthink_scale", c.overthink_scale);
    c.p_correct_conv = get_or<double>(j, "p_correct_conv", c.p_correct_conv);
    c.p_correct_over = get_or<double>(j, "p_correct_over", c.p_correct_over);
    c.marker_slope = get_or<double>(j, "marker_slope", c.marker_slope);
    c.marker_plateau = get_or<double>(j, "marker_plateau", c.marker_plateau);
    c.embed_drift = get_or<double>(j, "embed_drift", c.embed_drift);
    c.seed = get_or<uint64_t>(j, "seed", c.seed);
    c.validate();
    return c;
}

nlohmann::ordered_json sim_config_to_json(const SimConfig& c) {
    return nlohmann::ordered_json{
        {"mode_tokens", c.mode_tokens},
        {"conv_sigma", c.conv_sigma},
        {"overthink_prob", c.overthink_prob},
        {"overthink_scale", c.overthink_scale},
        {"p_correct_conv", c.p_correct_conv},
        {"p_correct_over", c.p_correct_over},
        {"marker_slope", c.marker_slope},
        {"marker_plateau", c.marker_plateau},
        {"embed_drift", c.embed_drift},
        {"seed", c.seed},
    };
}

RunnerConfig runner_config_from_json(const json& j) {
    require_object(j, "runner config");
    reject_unknown(j, {"command_template", "timeout_seconds"}, "runner config");
    RunnerConfig r;
    r.command_template = get_or<std::string>(j, "command_template", r.command_template);
    r.timeout_seconds = get_or<int>(j, "timeout_seconds", r.timeout_seconds);
    if (r.command_template.empty()) bad("runner command_template is empty");
    if (r.timeout_seconds < 1) bad("runner timeout_seconds must be >= 1");
    return r;
}

nlohmann::ordered_json runner_config_to_json(const RunnerConfig& r) {
    return nlohmann::ordered_json{
        {"command_template", r.command_template},
        {"timeout_seconds", r.timeout_seconds},
    };
}

RunConfig run_config_from_json(const json& j) {
    require_object(j, "run config");
    reject_unknown(j,
                   {"backend", "base_url", "model_id", "embedding_model_id", "temperature",
                    "n", "policy", "problem_file", "trace_path", "sim", "runner", "bins",
                    "chunk_words", "concurrency_limit", "seed"},
                   "run config");
    RunConfig c;
    if (j.contains("backend")) c.backend = backend_from_string(get_string(j, "backend"));
    if (j.contains("base_url")) c.base_url = get_string(j, "base_url");
    c.model_id = get_or<std::string>(j, "model_id", c.model_id);
    c.embedding_model_id = get_or<std::string>(j, "embedding_model_id", c.embedding_model_id);
    c.temperature = get_or<double>(j, "temperature", c.temperature);
    c.n = get_or<int>(j, "n", c.n);
    if (j.contains("policy")) {
        std::string p = get_string(j, "policy");
        // policy_from_string serves trace parsing and raises SchemaMismatch;
        // in a config file a bad policy is a config error
        if (p != "early_stop" && p != "run_all")
            bad("policy must be \"early_stop\" or \"run_all\"");
        c.policy = policy_from_string(p);
    }
    c.problem_file = get_or<std::string>(j, "problem_file", c.problem_file);
    c.trace_path = get_or<std::string>(j, "trace_path", c.trace_path);
    if (j.contains("sim")) c.sim = sim_config_from_json(j.at("sim"));
    if (j.contains("runner")) c.runner = runner_config_from_json(j.at("runner"));
    c.bins = get_or<int>(j, "bins", c.bins);
    c.chunk_words = get_or<int>(j, "chunk_words", c.chunk_words);
    c.concurrency_limit = get_or<int>(j, "concurrency_limit", c.concurrency_limit);
    c.seed = get_or<int64_t>(j, "seed", c.seed);
    c.validate();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::ConfigError, "cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        raise(Errc::ConfigError, "config file " + path + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j{
        {"backend", to_string(c.backend)},
    };
    if (c.base_url) j["base_url"] = *c.base_url;
    j["model_id"] = c.model_id;
    j["embedding_model_id"] = c.embedding_model_id;
    j["temperature"] = c.temperature;
    j["n"] = c.n;
    j["policy"] = to_string(c.policy);
    j["problem_file"] = c.problem_file;
    j["trace_path"] = c.trace_path;
    if (c.sim) j["sim"] = sim_config_to_json(*c.sim);
    if (c.runner) j["runner"] = runner_config_to_json(*c.runner);
    j["bins"] = c.bins;
    j["chunk_words"] = c.chunk_words;
    j["concurrency_limit"] = c.concurrency_limit;
    j["seed"] = c.seed;
    return j;
}

void RunConfig::validate() const {
    if (n < 1) bad("n must be >= 1");
    if (problem_file.empty()) bad("problem_file is empty");
    if (backend == Backend::http && (!base_url || base_url->empty()))
        bad("backend \"http\" requires base_url");
    if (model_id.empty()) bad("model_id is empty");
    if (!(temperature >= 0)) bad("temperature must be >= 0");
    if (bins < 1) bad("bins must be >= 1");
    if (chunk_words < 1) bad("chunk_words must be >= 1");
    if (concurrency_limit < 1) bad("concurrency_limit must be >= 1");
    if (sim) sim->validate();
}

RunPlan RunConfig::to_plan() const {
    RunPlan plan;
    plan.backend = backend;
    plan.base_url = base_url.value_or("");
    plan.model_id = model_id;
    plan.temperature = temperature;
    plan.n = n;
    plan.policy = policy;
    plan.concurrency_limit = concurrency_limit;
    plan.trace_path = trace_path;
    plan.run_seed = seed;
    plan.sim = sim.value_or(SimConfig{});
    return plan;
}

RunnerConfig RunConfig::effective_runner() const {
    return runner.value_or(RunnerConfig{});
}

} // namespace shortstop
