#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shortstop/errors.hpp"

namespace shortstop {

enum class Benchmark { math, code };

const char* to_string(Benchmark b);
Benchmark benchmark_from_string(std::string_view s);

// One benchmark task. Math problems are graded against gold_answer (an
// integer in [0, 999]); code problems against test_spec via an external
// runner command.
struct Problem {
    std::string id;
    Benchmark benchmark = Benchmark::math;
    std::string statement;
    std::string system_prompt;
    std::optional<int> gold_answer;       // math only
    std::optional<std::string> test_spec; // code only
    std::string source_tag;
};

enum class Finish { completed, cancelled, errored };

const char* to_string(Finish f);
Finish finish_from_string(std::string_view s);

// One sampled solution. gen_tokens is the backend-reported generated-token
// count (reasoning plus answer) and is the length measure used everywhere;
// word_count is derived from cot_text and only feeds the per-100-words
// normalization of marker density.
struct Attempt {
    int attempt_index = 0;
    std::string problem_id;
    std::string cot_text;
    std::string answer_text;
    int64_t gen_tokens = 0;
    int64_t word_count = 0;
    Finish finish = Finish::errored;
    std::optional<int64_t> finish_tick;
    std::string model_id;
    std::optional<int64_t> seed;
};

enum class Policy { early_stop, run_all };

const char* to_string(Policy p);
Policy policy_from_string(std::string_view s);

// The n attempts sampled for one problem plus what the race charged for them.
struct ProblemRun {
    std::string problem_id;
    int n = 0;
    Policy policy = Policy::run_all;
    std::vector<Attempt> attempts;
    int64_t charged_tokens = 0;
    int64_t run_seed = 0;
};

enum class Strategy { shortest, longest, self_consistency, individual };

const char* to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

// What one strategy picked for one problem. chosen_attempt is absent for
// self-consistency (answer-level selection); correct is absent only when
// grading was unavailable.
struct SelectionOutcome {
    Strategy strategy = Strategy::shortest;
    std::optional<int> chosen_attempt;
    std::string final_answer;
    std::optional<bool> correct;
    int64_t tokens_charged = 0;
};

// Number of maximal nonempty runs of non-whitespace characters; whitespace is
// the Unicode space set, decoded from UTF-8 (malformed bytes count as
// non-space).
int64_t word_count(std::string_view text);

// Splits into whitespace-delimited words (same rule as word_count).
std::vector<std::string_view> split_words(std::string_view text);

// Throws DuplicateId / MissingGold / MixedSpec naming the offending id.
void validate_problem_set(const std::vector<Problem>& problems);

// Structural invariants every trace record must satisfy.
void validate_run(const ProblemRun& run);

// JSON-lines problem file: one object per line with keys id, benchmark,
// statement, system_prompt, gold_answer, test_spec, source_tag (optional keys
// omitted). Validates the set before returning.
std::vector<Problem> load_problems(const std::string& path);

// Default system prompts for the two benchmarks.
extern const char* const kMathSystemPrompt;
extern const char* const kCodeSystemPrompt;

} // namespace shortstop
