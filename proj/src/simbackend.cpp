#include "shortstop/simbackend.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "shortstop/rng.hpp"

namespace shortstop {

void SimConfig::validate() const {
    auto bad = [](const std::string& what) { raise(Errc::ConfigError, "sim config: " + what); };
    if (mode_tokens < 1) bad("mode_tokens must be >= 1");
    if (!(conv_sigma > 0)) bad("conv_sigma must be > 0");
    if (!(overthink_prob >= 0 && overthink_prob <= 1)) bad("overthink_prob must be in [0, 1]");
    if (!(overthink_scale > 1)) bad("overthink_scale must be > 1");
    if (!(p_correct_conv >= 0 && p_correct_conv <= 1)) bad("p_correct_conv must be in [0, 1]");
    if (!(p_correct_over >= 0 && p_correct_over <= 1)) bad("p_correct_over must be in [0, 1]");
    if (!(p_correct_conv > p_correct_over)) bad("p_correct_conv must exceed p_correct_over");
    if (!(marker_slope >= 0)) bad("marker_slope must be >= 0");
    if (!(marker_plateau >= 0)) bad("marker_plateau must be >= 0");
    if (!(embed_drift >= 0)) bad("embed_drift must be >= 0");
}

std::vector<std::string> safe_marker_words(const MarkerLexicon& lexicon) {
    lexicon.validate();
    std::set<std::string> multi_word_parts;
    for (const std::string& phrase : lexicon.phrases) {
        if (phrase.find(' ') == std::string::npos) continue;
        std::istringstream in(phrase);
        std::string word;
        while (in >> word) multi_word_parts.insert(word);
    }
    std::vector<std::string> safe;
    for (const std::string& phrase : lexicon.phrases)
        if (phrase.find(' ') == std::string::npos && !multi_word_parts.count(phrase))
            safe.push_back(phrase);
    if (safe.empty()) raise(Errc::ConfigError, "lexicon has no safely plantable single words");
    return safe;
}

namespace {

// 16 consonant-vowel syllables; three of them (one 12-bit draw) make a
// pronounceable six-letter filler word. None of the 4096 products collides
// with a lexicon word, so fillers never register as markers.
constexpr const char* kSyllables[16] = {"ba", "ke", "mi", "ro", "tu", "sa", "ne", "lo",
                                        "vi", "da", "pu", "fe", "go", "ri", "zu", "ma"};

std::string filler_word(uint64_t bits12) {
    std::string w;
    w.reserve(6);
    w += kSyllables[(bits12 >> 8) & 15];
    w += kSyllables[(bits12 >> 4) & 15];
    w += kSyllables[bits12 & 15];
    return w;
}

constexpr int64_t kMaxSimTokens = 10'000'000; // keeps a freak tail draw bounded

int64_t draw_length(const SimConfig& c, bool overthinking, double z, int answer_words) {
    double sigma = overthinking ? c.conv_sigma * c.overthink_scale : c.conv_sigma;
    // log-normal with mode m has mu = ln(m) + sigma^2
    double mu = std::log(static_cast<double>(c.mode_tokens)) + sigma * sigma;
    double raw = std::exp(mu + sigma * z);
    int64_t len = raw >= static_cast<double>(kMaxSimTokens)
                      ? kMaxSimTokens
                      : static_cast<int64_t>(std::llround(raw));
    if (overthinking) len += c.mode_tokens;
    len = std::min(len, kMaxSimTokens);
    return std::max<int64_t>(len, answer_words + 1);
}

} // namespace

SimStream::SimStream(const Problem& problem, int attempt_index, uint64_t attempt_seed,
                     std::string model_id, const SimConfig& config)
    : problem_(problem),
      attempt_index_(attempt_index),
      attempt_seed_(attempt_seed),
      model_id_(std::move(model_id)),
      config_(config),
      safe_markers_(safe_marker_words(MarkerLexicon::default_lexicon())) {
    config_.validate();

    overthinking_ = KeyedRng(make_key(config_.seed, std::string_view("regime"), problem_.id,
                                      attempt_seed_))
                        .bernoulli(config_.overthink_prob);
    double z = KeyedRng(make_key(config_.seed, std::string_view("length"), problem_.id,
                                 attempt_seed_))
                   .normal();
    double p_correct = overthinking_ ? config_.p_correct_over : config_.p_correct_conv;
    correct_ = KeyedRng(make_key(config_.seed, std::string_view("correct"), problem_.id,
                                 attempt_seed_))
                   .bernoulli(p_correct);

    if (problem_.benchmark == Benchmark::math) {
        int gold = problem_.gold_answer.value_or(0);
        int value = correct_ ? gold : (gold + 1) % 1000;
        answer_tokens_ = {"The", "final", "answer", "is",
                          "\\boxed{" + std::to_string(value) + "}."};
        answer_text_ = answer_tokens_[0];
        for (size_t i = 1; i < answer_tokens_.size(); ++i) {
            answer_text_ += ' ';
            answer_text_ += answer_tokens_[i];
        }
    } else {
        answer_tokens_ = {"```python", correct_ ? "SIM_PASS" : "SIM_FAIL", "```"};
        answer_text_ = answer_tokens_[0];
        for (size_t i = 1; i < answer_tokens_.size(); ++i) {
            answer_text_ += '\n';
            answer_text_ += answer_tokens_[i];
        }
    }
    answer_words_ = static_cast<int>(answer_tokens_.size());
    length_ = draw_length(config_, overthinking_, z, answer_words_);
}

std::string SimStream::cot_word_at(int64_t p) const {
    uint64_t pos = static_cast<uint64_t>(p);
    double mode = static_cast<double>(config_.mode_tokens);

    double marker_rate = p < config_.mode_tokens
                             ? config_.marker_slope * static_cast<double>(p)
                             : config_.marker_plateau;
    marker_rate = std::clamp(marker_rate, 0.0, 1.0);
    bool marker = KeyedRng(make_key(config_.seed, std::string_view("marker"), problem_.id, pos))
                      .bernoulli(marker_rate);
    if (marker) {
        KeyedRng pick(make_key(config_.seed, std::string_view("phrase"), problem_.id, pos));
        return safe_markers_[pick.uniform_int(safe_markers_.size())];
    }

    // Shared base wording, reworded per attempt with a position-growing
    // probability so parallel solutions drift apart.
    double drift = config_.embed_drift * std::min(static_cast<double>(p) / mode, 1.0);
    drift = std::clamp(drift, 0.0, 1.0);
    KeyedRng mine(make_key(config_.seed, std::string_view("drift"), problem_.id, attempt_seed_,
                           pos));
    if (mine.bernoulli(drift)) return filler_word(mine.next_u64() & 0xfff);
    KeyedRng shared(make_key(config_.seed, std::string_view("word"), problem_.id, pos));
    return filler_word(shared.next_u64() & 0xfff);
}

std::string SimStream::token_at(int64_t t) const {
    if (t < 0 || t >= length_) raise(Errc::ConfigError, "token index out of range");
    if (t < cot_tokens()) return cot_word_at(t);
    return answer_tokens_[static_cast<size_t>(t - cot_tokens())];
}

Attempt SimStream::finalize(int64_t emitted, Finish finish, int64_t finish_tick) const {
    Attempt a;
    a.attempt_index = attempt_index_;
    a.problem_id = problem_.id;
    int64_t cot_emitted = std::min(emitted, cot_tokens());
    std::string cot;
    for (int64_t p = 0; p < cot_emitted; ++p) {
        if (p > 0) cot += ' ';
        cot += cot_word_at(p);
    }
    a.cot_text = std::move(cot);
    a.answer_text = emitted >= length_ ? answer_text_ : std::string();
    a.gen_tokens = emitted;
    a.word_count = cot_emitted;
    a.finish = finish;
    a.finish_tick = finish_tick;
    a.model_id = model_id_;
    a.seed = static_cast<int64_t>(attempt_seed_);
    return a;
}

std::vector<StreamEvent> sim_stream(const CompletionRequest& request, const Problem& problem,
                                    uint64_t attempt_seed, const SimConfig& config) {
    SimStream stream(problem, 0, attempt_seed, request.model_id, config);
    int64_t len = stream.planned_tokens();
    if (request.max_tokens)
        len = std::min(len, std::max<int64_t>(1, *request.max_tokens));
    std::vector<StreamEvent> events;
    events.reserve(static_cast<size_t>(len) + 1);
    for (int64_t t = 0; t < len; ++t) {
        StreamEvent e;
        e.kind = EventKind::delta;
        e.text_delta = stream.token_at(t);
        e.tokens_so_far = t + 1;
        events.push_back(std::move(e));
    }
    StreamEvent done;
    done.kind = EventKind::done;
    done.tokens_so_far = len;
    done.finish_reason = "stop";
    events.push_back(std::move(done));
    return events;
}

ProblemRun lockstep_race(std::vector<SimStream>& streams, VirtualClock& clock, Policy policy,
                         int64_t run_seed) {
    if (streams.empty()) raise(Errc::ConfigError, "race needs at least one stream");
    const std::string& pid = streams.front().problem_id();
    for (const SimStream& s : streams)
        if (s.problem_id() != pid)
            raise(Errc::ConfigError, "race streams belong to different problems");

    int n = static_cast<int>(streams.size());
    ProblemRun run;
    run.problem_id = pid;
    run.n = n;
    run.policy = policy;
    run.run_seed = run_seed;
    run.attempts.resize(n);

    // Race-local time: the clock may arrive non-zero, so ticks are counted
    // from its starting value.
    const int64_t start = clock.tick;
    if (policy == Policy::early_stop) {
        int winner = -1;
        while (winner < 0) {
            ++clock.tick;
            for (int i = 0; i < n; ++i) {
                if (streams[i].planned_tokens() == clock.tick - start) {
                    winner = i;
                    break; // lowest index wins the tick
                }
            }
        }
        int64_t t = clock.tick - start;
        for (int i = 0; i < n; ++i) {
            run.attempts[i] = i == winner
                                  ? streams[i].finalize(t, Finish::completed, t)
                                  : streams[i].finalize(t, Finish::cancelled, t);
        }
        run.charged_tokens = static_cast<int64_t>(n) * t;
    } else {
        std::vector<bool> done(n, false);
        int finished = 0;
        while (finished < n) {
            ++clock.tick;
            int64_t t = clock.tick - start;
            for (int i = 0; i < n; ++i) {
                if (!done[i] && streams[i].planned_tokens() == t) {
                    done[i] = true;
                    ++finished;
                    run.attempts[i] = streams[i].finalize(t, Finish::completed, t);
                    run.charged_tokens += t;
                }
            }
        }
    }
    return run;
}

} // namespace shortstop
