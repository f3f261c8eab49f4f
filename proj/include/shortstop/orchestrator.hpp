#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shortstop/client.hpp"
#include "shortstop/domain.hpp"
#include "shortstop/simbackend.hpp"

namespace shortstop {

enum class Backend { http, sim };

const char* to_string(Backend b);
Backend backend_from_string(std::string_view s);

// Everything one benchmark run needs. Analyses that want all n completions
// per problem (self-consistency, the distribution and divergence plots)
// require policy = run_all; early_stop traces only support shortest-selection
// accounting.
struct RunPlan {
    Backend backend = Backend::sim;
    std::string base_url;  // http only
    std::string model_id = "sim-reasoner";
    double temperature = 1.0;
    int n = 5;
    Policy policy = Policy::run_all;
    int concurrency_limit = 4;
    std::string trace_path;
    int64_t run_seed = 0;
    SimConfig sim; // sim only

    void validate() const; // throws ConfigError
};

// The per-attempt seed: a pure function of run seed, problem, and slot, so
// resumed or reordered work regenerates identical attempts. Masked to stay
// non-negative in the trace.
int64_t attempt_seed(int64_t run_seed, const std::string& problem_id, int attempt_index);

// One n-way race. Simulated races run on the lockstep clock (single thread,
// deterministic); HTTP races run n concurrent streams and, under early_stop,
// cancel the rest as soon as one finishes, charging the tokens every stream
// had produced by then. Errored streams are folded into the record with
// partial text; a race with no completed attempt throws AllAttemptsErrored.
ProblemRun run_race(const Problem& problem, const RunPlan& plan);

struct RunSummary {
    int64_t problems_total = 0;
    int64_t skipped = 0;      // already present in the trace
    int64_t new_records = 0;
    int64_t attempts = 0;     // in new records
    int64_t completed_attempts = 0;
    int64_t errored_problems = 0;
    int64_t charged_tokens = 0;
    int64_t idealized_charged_tokens = 0; // n * winner length per early-stop race
    int64_t wall_ms = 0;
};

// Runs every problem not already present in the trace file, appending one
// JSONL record per problem in problem-set order. Problems are raced
// concurrently (at most plan.concurrency_limit at a time) but written by a
// single ordered writer, so a fresh run with one seed is byte-reproducible.
// A problem whose race fails entirely is recorded as n errored attempts
// rather than aborting the batch.
RunSummary run_benchmark(const std::vector<Problem>& problems, const RunPlan& plan);

} // namespace shortstop
