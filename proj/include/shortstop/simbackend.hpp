#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shortstop/analysis.hpp"
#include "shortstop/client.hpp"
#include "shortstop/domain.hpp"

namespace shortstop {

// Deterministic two-regime synthetic backend.
//
// Lengths are drawn from a log-normal parameterized by its mode: conventional
// attempts use spread conv_sigma; overthinking attempts use spread
// conv_sigma * overthink_scale and are right-shifted by mode_tokens, giving
// the unimodal distribution a long right tail. Correctness is a per-regime
// coin, with conventional attempts strictly more reliable.
//
// The synthetic chain-of-thought is a stream of pronounceable filler words
// with hedging markers interleaved: the per-position marker rate grows
// linearly (marker_slope per token) below mode_tokens and sits at
// marker_plateau above it. With marker_plateau = marker_slope * mode_tokens/2
// the *cumulative* density measured over a whole attempt rises linearly with
// length up to the mode and is exactly flat past it — a built-in trend break.
//
// Wording is shared across a problem's attempts (markers and base fillers are
// keyed by problem and position only); each attempt independently rewords
// filler positions with probability embed_drift * min(position/mode, 1), so
// parallel solutions diverge more per chunk up to the mode and plateau after.
// Marker positions are never reworded, keeping the density plant exact.
struct SimConfig {
    int64_t mode_tokens = 3000;
    double conv_sigma = 0.25;
    double overthink_prob = 0.3;
    double overthink_scale = 2.8;
    double p_correct_conv = 0.9;
    double p_correct_over = 0.5;
    double marker_slope = 4e-5;
    double marker_plateau = 0.06;
    double embed_drift = 0.35;
    uint64_t seed = 1;

    void validate() const; // throws ConfigError
};

// Counts global steps; every live stream emits exactly one token per tick.
struct VirtualClock {
    int64_t tick = 0;
};

// Single-word marker phrases that are not a word of any multi-word phrase, so
// a planted marker always counts as exactly itself under longest-match
// scanning no matter what its neighbors are.
std::vector<std::string> safe_marker_words(const MarkerLexicon& lexicon);

// One attempt's fully determined plan: everything is a pure function of
// (config.seed, problem id, attempt_seed, position), so a stream can be
// replayed, truncated, or finalized without mutable draw state.
class SimStream {
public:
    SimStream(const Problem& problem, int attempt_index, uint64_t attempt_seed,
              std::string model_id, const SimConfig& config);

    int attempt_index() const { return attempt_index_; }
    const std::string& problem_id() const { return problem_.id; }
    int64_t planned_tokens() const { return length_; }
    int64_t cot_tokens() const { return length_ - answer_words_; }
    bool overthinking() const { return overthinking_; }
    bool planned_correct() const { return correct_; }

    // Token t of the stream, t in [0, planned_tokens()): chain-of-thought
    // words first, then the answer words.
    std::string token_at(int64_t t) const;

    // Assemble the Attempt after `emitted` tokens. A stream cut before its
    // planned end keeps the chain-of-thought words it produced and records an
    // empty answer (a partial answer grades as nothing).
    Attempt finalize(int64_t emitted, Finish finish, int64_t finish_tick) const;

private:
    std::string cot_word_at(int64_t p) const;

    Problem problem_;
    int attempt_index_ = 0;
    uint64_t attempt_seed_ = 0;
    std::string model_id_;
    SimConfig config_;
    std::vector<std::string> safe_markers_;
    bool overthinking_ = false;
    bool correct_ = false;
    int64_t length_ = 0;
    int answer_words_ = 0;
    std::vector<std::string> answer_tokens_;
    std::string answer_text_;
};

// The stream as wire-style events: one delta per token (bare token text,
// tokens_so_far set) and a terminal done event. Honors request.max_tokens by
// cutting the stream short. Assembled attempt texts come from
// SimStream::finalize / lockstep_race, which apply the channel split and
// separators; these events exist for count and determinism checks.
std::vector<StreamEvent> sim_stream(const CompletionRequest& request,
                                    const Problem& problem, uint64_t attempt_seed,
                                    const SimConfig& config);

// Synchronous race: every live stream emits one token per tick. Under
// early_stop, the first tick where a stream reaches its planned length ends
// the race — lowest attempt_index wins a tie, everyone else is cancelled at
// that tick, and charged_tokens = n * winning length exactly. Under run_all,
// every stream runs to completion and charged_tokens is the total.
ProblemRun lockstep_race(std::vector<SimStream>& streams, VirtualClock& clock,
                         Policy policy, int64_t run_seed);

} // namespace shortstop
