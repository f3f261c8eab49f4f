#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shortstop/domain.hpp"

namespace shortstop {

enum class AnswerKind { numeric, code, none };

struct ExtractedAnswer {
    AnswerKind kind = AnswerKind::none;
    std::optional<int> numeric_value;      // kind == numeric, in [0, 999]
    std::optional<std::string> code_text;  // kind == code, nonempty
};

// Last occurrence of "boxed{...}"; content trimmed of whitespace and leading
// zeros must parse to an integer in [0, 999], else kind == none.
ExtractedAnswer extract_boxed(const std::string& answer_text);

// Body of the last complete fenced code block (```), or the whole text when
// there is no fence.
ExtractedAnswer extract_code(const std::string& answer_text);

// External grading command for code problems. {program_file} and {test_file}
// in the template expand to temp-file paths; exit status 0 means pass. The
// literal template "sim" is the simulator's grader: the extracted program
// passes iff it is the passing sentinel.
struct RunnerConfig {
    std::string command_template = "sim";
    int timeout_seconds = 10;
};

extern const char* const kSimRunnerPassSentinel; // "SIM_PASS"

struct GradeOutcome {
    bool passed = false;
    std::string tag; // "" | "runner_timeout" | "runner_spawn_failed"
};

// Math: extract_boxed equals gold_answer. Code: runner exit status.
// Runner timeouts / spawn failures grade incorrect with a tag.
GradeOutcome grade_detail(const Attempt& attempt, const Problem& problem,
                          const RunnerConfig& runner);
bool grade(const Attempt& attempt, const Problem& problem, const RunnerConfig& runner);

// correct[run_index][attempt_index]; nullopt for attempts that never completed.
using GradeMatrix = std::vector<std::vector<std::optional<bool>>>;

GradeMatrix grade_all(const std::vector<ProblemRun>& runs,
                      const std::vector<Problem>& problems, const RunnerConfig& runner);

// Lookup helper shared by everything that joins runs back to their problems.
std::map<std::string, const Problem*> problem_index(const std::vector<Problem>& problems);

// Completed attempt with minimal / maximal gen_tokens; ties go to the lowest
// attempt_index. Throws NoCompletedAttempt.
SelectionOutcome select_shortest(const ProblemRun& run);
SelectionOutcome select_longest(const ProblemRun& run);

// Modal extracted numeric answer over completed attempts; a tie between modal
// groups goes to the group containing the shortest attempt. Requires run_all,
// a math run, and n >= 3. Throws NotApplicable / TooFewSolutions /
// NoValidAnswers / PolicyMismatch.
SelectionOutcome self_consistency(const ProblemRun& run, Benchmark benchmark);

// Mean correctness over every completed attempt across all runs (micro
// average). Throws EmptyInput.
double individual_accuracy(const std::vector<ProblemRun>& runs,
                           const std::vector<Problem>& problems, const RunnerConfig& runner);

struct PerProblemRow {
    std::string problem_id;
    std::optional<bool> correct;
    int64_t tokens = 0;
    std::string note; // error name when the strategy did not apply
};

struct StrategyReport {
    Strategy strategy = Strategy::shortest;
    double accuracy = 0.0;    // NaN when no problem was applicable
    double mean_tokens = 0.0; // over applicable problems
    int problems = 0;
    int applicable = 0;
    std::vector<PerProblemRow> per_problem;
};

// Applies one strategy across a trace. Token accounting per strategy:
// shortest charges n * min-length (what the early-stopping race pays; on
// early_stop traces this is the recorded charge), longest and
// self_consistency charge the full run (all n lengths), individual charges
// one attempt (mean attempt length). Per-problem strategy errors become
// not-applicable rows instead of aborting.
StrategyReport evaluate_strategy(const std::vector<ProblemRun>& runs,
                                 const std::vector<Problem>& problems, Strategy strategy,
                                 const RunnerConfig& runner);

} // namespace shortstop
