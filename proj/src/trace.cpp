#include "shortstop/trace.hpp"

#include <filesystem>

#include "shortstop/errors.hpp"

namespace shortstop {

nlohmann::ordered_json run_to_json(const ProblemRun& run) {
    nlohmann::ordered_json j;
    j["schema_version"] = kTraceSchemaVersion;
    j["problem_id"] = run.problem_id;
    j["n"] = run.n;
    j["policy"] = to_string(run.policy);
    j["run_seed"] = run.run_seed;
    j["charged_tokens"] = run.charged_tokens;
    auto attempts = nlohmann::ordered_json::array();
    for (const Attempt& a : run.attempts) {
        nlohmann::ordered_json ja;
        ja["attempt_index"] = a.attempt_index;
        ja["cot_text"] = a.cot_text;
        ja["answer_text"] = a.answer_text;
        ja["gen_tokens"] = a.gen_tokens;
        ja["word_count"] = a.word_count;
        ja["finish"] = to_string(a.finish);
        if (a.finish_tick) ja["finish_tick"] = *a.finish_tick;
        ja["model_id"] = a.model_id;
        if (a.seed) ja["seed"] = *a.seed;
        attempts.push_back(std::move(ja));
    }
    j["attempts"] = std::move(attempts);
    return j;
}

ProblemRun run_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kTraceSchemaVersion)
            raise(Errc::SchemaMismatch,
                  "unsupported schema_version " + j["schema_version"].dump());
        ProblemRun run;
        run.problem_id = j.at("problem_id").get<std::string>();
        run.n = j.at("n").get<int>();
        run.policy = policy_from_string(j.at("policy").get<std::string>());
        run.run_seed = j.at("run_seed").get<int64_t>();
        run.charged_tokens = j.at("charged_tokens").get<int64_t>();
        for (const auto& ja : j.at("attempts")) {
            Attempt a;
            a.attempt_index = ja.at("attempt_index").get<int>();
            a.problem_id = run.problem_id;
            a.cot_text = ja.at("cot_text").get<std::string>();
            a.answer_text = ja.at("answer_text").get<std::string>();
            a.gen_tokens = ja.at("gen_tokens").get<int64_t>();
            a.word_count = ja.at("word_count").get<int64_t>();
            a.finish = finish_from_string(ja.at("finish").get<std::string>());
            if (ja.contains("finish_tick")) a.finish_tick = ja["finish_tick"].get<int64_t>();
            a.model_id = ja.at("model_id").get<std::string>();
            if (ja.contains("seed")) a.seed = ja["seed"].get<int64_t>();
            run.attempts.push_back(std::move(a));
        }
        validate_run(run);
        return run;
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::SchemaMismatch, std::string("trace record: ") + e.what());
    }
}

std::string serialize_run_line(const ProblemRun& run) {
    return run_to_json(run).dump() + "\n";
}

ProblemRun parse_run_line(const std::string& line) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) raise(Errc::SchemaMismatch, "trace line is not valid JSON");
    return run_from_json(j);
}

std::vector<ProblemRun> read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoError, "cannot open trace " + path);
    std::vector<ProblemRun> runs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            runs.push_back(parse_run_line(line));
        } catch (const Error& e) {
            raise(e.code(), path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return runs;
}

std::set<std::string> read_trace_ids(const std::string& path) {
    std::set<std::string> ids;
    if (!std::filesystem::exists(path)) return ids;
    for (const ProblemRun& run : read_trace(path)) ids.insert(run.problem_id);
    return ids;
}

TraceWriter::TraceWriter(const std::string& path) : path_(path) {
    auto dir = std::filesystem::path(path).parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
    }
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_) raise(Errc::IoError, "cannot open trace for append: " + path);
}

void TraceWriter::append(const ProblemRun& run) {
    out_ << serialize_run_line(run);
    if (!out_) raise(Errc::IoError, "write failed: " + path_);
}

void TraceWriter::flush() { out_.flush(); }

} // namespace shortstop
