#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "shortstop/selection.hpp"

namespace shortstop {

// Shortest decimal string that round-trips to the same double (so CSV
// re-parses reproduce in-memory values exactly). Integral values render
// without an exponent or trailing ".0".
std::string format_double(double v);

// Fraction as a percentage with fixed decimals: 0.892 -> "89.2".
// NaN renders as "*" (the not-applicable cell).
std::string format_percent(double fraction, int decimals = 1);

// Fixed decimals, plain notation: 12345.678 -> "12345.7".
std::string format_fixed(double v, int decimals);

// RFC-4180 quoting, applied only when the field needs it.
std::string csv_escape(const std::string& field);

// Plain-text accuracy/cost table, one row per strategy; not-applicable
// accuracies render as "*".
std::string render_strategy_table(const std::vector<StrategyReport>& reports);

// header: strategy,accuracy,mean_tokens,problems,applicable
std::string strategy_summary_csv(const std::vector<StrategyReport>& reports);

// header: strategy,problem_id,correct,tokens,note  (correct: 1, 0, or empty)
std::string strategy_per_problem_csv(const std::vector<StrategyReport>& reports);

// Creates parent directories; throws IoError.
void write_text_file(const std::string& path, const std::string& content);

// Indented dump plus trailing newline, written via write_text_file.
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

} // namespace shortstop
