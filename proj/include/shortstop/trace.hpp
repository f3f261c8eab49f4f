#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "shortstop/domain.hpp"

namespace shortstop {

// Trace files are JSONL, one ProblemRun per line:
//   {schema_version:1, problem_id, n, policy, run_seed, charged_tokens,
//    attempts:[{attempt_index, cot_text, answer_text, gen_tokens, word_count,
//               finish, finish_tick, model_id, seed}]}
// Key order is fixed (ordered serialization) and every numeric field is an
// integer, so identical runs serialize to identical bytes. Absent optional
// fields (finish_tick, seed) are omitted. UTF-8, LF line endings.

inline constexpr int kTraceSchemaVersion = 1;

nlohmann::ordered_json run_to_json(const ProblemRun& run);

// Validates structural invariants (validate_run) before returning.
ProblemRun run_from_json(const nlohmann::json& j);

std::string serialize_run_line(const ProblemRun& run); // includes trailing '\n'

ProblemRun parse_run_line(const std::string& line);

// Reads and validates a whole trace. Throws IoError / SchemaMismatch.
std::vector<ProblemRun> read_trace(const std::string& path);

// Problem ids already recorded (for resume). Missing file -> empty set.
std::set<std::string> read_trace_ids(const std::string& path);

// Append-only JSONL writer.
class TraceWriter {
public:
    explicit TraceWriter(const std::string& path);
    void append(const ProblemRun& run);
    void flush();

private:
    std::ofstream out_;
    std::string path_;
};

} // namespace shortstop
