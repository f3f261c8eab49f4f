#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "shortstop/analysis.hpp"
#include "shortstop/domain.hpp"
#include "shortstop/simbackend.hpp"
#include "support/testutil.hpp"

using namespace shortstop;

namespace {

SimConfig small_config() {
    SimConfig c;
    c.mode_tokens = 120;
    c.conv_sigma = 0.2;
    c.overthink_prob = 0.25;
    c.seed = 7;
    return c;
}

SimStream make_stream(const Problem& p, int index, uint64_t attempt_seed, const SimConfig& c) {
    return SimStream(p, index, attempt_seed, "sim-reasoner", c);
}

std::vector<std::string> all_tokens(const SimStream& s) {
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(s.planned_tokens()));
    for (int64_t t = 0; t < s.planned_tokens(); ++t) out.push_back(s.token_at(t));
    return out;
}

} // namespace

TEST_CASE("SimConfig::validate rejects each bad field") {
    CHECK_NOTHROW(SimConfig{}.validate());
    auto rejects = [](auto&& tweak) {
        SimConfig c;
        tweak(c);
        CHECK_THROWS_AS(c.validate(), Error);
    };
    rejects([](SimConfig& c) { c.mode_tokens = 0; });
    rejects([](SimConfig& c) { c.conv_sigma = 0.0; });
    rejects([](SimConfig& c) { c.conv_sigma = -0.1; });
    rejects([](SimConfig& c) { c.overthink_prob = -0.01; });
    rejects([](SimConfig& c) { c.overthink_prob = 1.01; });
    rejects([](SimConfig& c) { c.overthink_scale = 1.0; });
    rejects([](SimConfig& c) { c.p_correct_conv = 1.2; });
    rejects([](SimConfig& c) { c.p_correct_over = -0.2; });
    rejects([](SimConfig& c) { c.p_correct_conv = c.p_correct_over = 0.5; });
    rejects([](SimConfig& c) { c.marker_slope = -1e-9; });
    rejects([](SimConfig& c) { c.marker_plateau = -0.01; });
    rejects([](SimConfig& c) { c.embed_drift = -0.5; });
}

TEST_CASE("safe_marker_words excludes words of multi-word phrases") {
    auto safe = safe_marker_words(MarkerLexicon::default_lexicon());
    CHECK(safe.size() == 31);
    auto has = [&](const char* w) {
        return std::find(safe.begin(), safe.end(), w) != safe.end();
    };
    CHECK(has("maybe"));
    CHECK(has("but"));
    CHECK(has("wait"));
    CHECK(has("assuming"));
    CHECK(has("hmm"));
    // "if" appears inside "what if", "suppose" inside "i suppose": planting
    // them next to the wrong neighbor would merge into the longer phrase
    CHECK_FALSE(has("if"));
    CHECK_FALSE(has("suppose"));
    CHECK_FALSE(has("let me check")); // multi-word phrases are never planted
    CHECK(safe.front() == "maybe");   // lexicon order is preserved

    MarkerLexicon only_multi{{"what if", "hold on"}};
    CHECK_THROWS_AS(safe_marker_words(only_multi), Error);
}

TEST_CASE("streams are a pure function of their keys") {
    Problem p = testutil::math_problem("det", 7);
    SimConfig c = small_config();
    SimStream a = make_stream(p, 0, 12345, c);
    SimStream b = make_stream(p, 3, 12345, c); // attempt_index is labeling only
    CHECK(a.planned_tokens() == b.planned_tokens());
    CHECK(a.overthinking() == b.overthinking());
    CHECK(a.planned_correct() == b.planned_correct());
    CHECK(all_tokens(a) == all_tokens(b));

    SimStream other = make_stream(p, 0, 54321, c);
    bool differs = other.planned_tokens() != a.planned_tokens() ||
                   all_tokens(other) != all_tokens(a);
    CHECK(differs);

    // a different problem id rewires every draw
    SimStream other_problem = make_stream(testutil::math_problem("det2", 7), 0, 12345, c);
    CHECK(all_tokens(other_problem) != all_tokens(a));
}

TEST_CASE("overthink_prob pins the regime") {
    SimConfig conv = small_config();
    conv.mode_tokens = 1000;
    conv.overthink_prob = 0.0;
    SimConfig over = conv;
    over.overthink_prob = 1.0;

    Problem p = testutil::math_problem("regime", 3);
    std::vector<int64_t> conv_lengths;
    for (uint64_t s = 1; s <= 50; ++s) {
        SimStream cs = make_stream(p, 0, s, conv);
        CHECK_FALSE(cs.overthinking());
        conv_lengths.push_back(cs.planned_tokens());
        SimStream os = make_stream(p, 0, s, over);
        CHECK(os.overthinking());
        // the overthinking length is conventional-style draw plus a whole mode
        CHECK(os.planned_tokens() > over.mode_tokens);
    }
    // median of the conventional lengths sits near mode * exp(sigma^2)
    std::sort(conv_lengths.begin(), conv_lengths.end());
    int64_t median = conv_lengths[conv_lengths.size() / 2];
    CHECK(median > 900);
    CHECK(median < 1250);
}

TEST_CASE("planned length never dips below the answer") {
    SimConfig c = small_config();
    c.mode_tokens = 1; // forces tiny draws
    Problem math = testutil::math_problem("tiny", 1);
    Problem code = testutil::code_problem("tinyc");
    for (uint64_t s = 1; s <= 40; ++s) {
        SimStream ms = make_stream(math, 0, s, c);
        CHECK(ms.planned_tokens() >= 6); // five answer words + one thought
        CHECK(ms.cot_tokens() >= 1);
        SimStream cs = make_stream(code, 0, s, c);
        CHECK(cs.planned_tokens() >= 4); // three answer lines + one thought
    }
}

TEST_CASE("zero marker rates produce marker-free chains of thought") {
    SimConfig c = small_config();
    c.mode_tokens = 300;
    c.marker_slope = 0.0;
    c.marker_plateau = 0.0;
    Problem p = testutil::math_problem("clean", 11);
    for (uint64_t s = 1; s <= 5; ++s) {
        Attempt a = make_stream(p, 0, s, c).finalize(
            make_stream(p, 0, s, c).planned_tokens(), Finish::completed, 100);
        CHECK(count_markers(a.cot_text, MarkerLexicon::default_lexicon()) == 0);
    }
}

TEST_CASE("plateau rate 1 plants a marker at every post-mode position") {
    SimConfig c = small_config();
    c.mode_tokens = 50;
    c.marker_slope = 0.0;
    c.marker_plateau = 1.0;
    c.overthink_prob = 1.0; // guarantees length well past the mode
    Problem p = testutil::math_problem("plant", 5);

    SimStream a = make_stream(p, 0, 101, c);
    SimStream b = make_stream(p, 1, 202, c);
    REQUIRE(a.cot_tokens() > c.mode_tokens);
    REQUIRE(b.cot_tokens() > c.mode_tokens);

    // markers count exactly one each: cumulative count == tokens past the mode
    Attempt fa = a.finalize(a.planned_tokens(), Finish::completed, 1);
    CHECK(count_markers(fa.cot_text, MarkerLexicon::default_lexicon()) ==
          a.cot_tokens() - c.mode_tokens);

    // marker words are shared wording: identical across attempts per position
    int64_t common = std::min(a.cot_tokens(), b.cot_tokens());
    for (int64_t t = c.mode_tokens; t < common; ++t)
        CHECK(a.token_at(t) == b.token_at(t));

    // pre-mode fillers carry per-attempt drift: some positions diverge
    bool any_differ = false;
    for (int64_t t = 0; t < c.mode_tokens; ++t)
        if (a.token_at(t) != b.token_at(t)) any_differ = true;
    CHECK(any_differ);
}

TEST_CASE("embed_drift zero makes attempts word-identical") {
    SimConfig c = small_config();
    c.embed_drift = 0.0;
    Problem p = testutil::math_problem("still", 5);
    SimStream a = make_stream(p, 0, 101, c);
    SimStream b = make_stream(p, 1, 202, c);
    int64_t common = std::min(a.cot_tokens(), b.cot_tokens());
    for (int64_t t = 0; t < common; ++t) CHECK(a.token_at(t) == b.token_at(t));
}

TEST_CASE("answer text by benchmark and correctness") {
    SimConfig always_right = small_config();
    always_right.overthink_prob = 0.0;
    always_right.p_correct_conv = 1.0;
    always_right.p_correct_over = 0.0;
    SimConfig always_wrong = small_config();
    always_wrong.overthink_prob = 1.0;
    always_wrong.p_correct_conv = 1.0;
    always_wrong.p_correct_over = 0.0;

    Problem m = testutil::math_problem("ans", 7);
    SimStream right = make_stream(m, 0, 1, always_right);
    CHECK(right.planned_correct());
    Attempt ra = right.finalize(right.planned_tokens(), Finish::completed, 9);
    CHECK(ra.answer_text == "The final answer is \\boxed{7}.");

    SimStream wrong = make_stream(m, 0, 1, always_wrong);
    CHECK_FALSE(wrong.planned_correct());
    Attempt wa = wrong.finalize(wrong.planned_tokens(), Finish::completed, 9);
    CHECK(wa.answer_text == "The final answer is \\boxed{8}.");

    Problem wrap = testutil::math_problem("wrap", 999); // wrong answer wraps mod 1000
    SimStream w = make_stream(wrap, 0, 1, always_wrong);
    Attempt ww = w.finalize(w.planned_tokens(), Finish::completed, 9);
    CHECK(ww.answer_text == "The final answer is \\boxed{0}.");

    Problem cp = testutil::code_problem("ansc");
    SimStream cr = make_stream(cp, 0, 1, always_right);
    Attempt ca = cr.finalize(cr.planned_tokens(), Finish::completed, 9);
    CHECK(ca.answer_text == "```python\nSIM_PASS\n```");
    SimStream cw = make_stream(cp, 0, 1, always_wrong);
    Attempt cwa = cw.finalize(cw.planned_tokens(), Finish::completed, 9);
    CHECK(cwa.answer_text == "```python\nSIM_FAIL\n```");
}

TEST_CASE("finalize: full, truncated, and empty emissions") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("fin", 42);
    SimStream s = make_stream(p, 2, 777, c);
    int64_t len = s.planned_tokens();

    Attempt full = s.finalize(len, Finish::completed, len);
    CHECK(full.attempt_index == 2);
    CHECK(full.problem_id == "fin");
    CHECK(full.gen_tokens == len);
    CHECK(full.word_count == s.cot_tokens());
    CHECK(full.word_count == word_count(full.cot_text));
    CHECK_FALSE(full.answer_text.empty());
    CHECK(full.finish == Finish::completed);
    CHECK(full.finish_tick == len);
    CHECK(full.model_id == "sim-reasoner");
    CHECK(full.seed == 777);

    // cut one token early: the whole chain of thought is there, no answer
    Attempt cut = s.finalize(len - 1, Finish::cancelled, len - 1);
    CHECK(cut.gen_tokens == len - 1);
    CHECK(cut.word_count == s.cot_tokens());
    CHECK(cut.answer_text.empty());
    CHECK(cut.cot_text == full.cot_text);

    Attempt tiny = s.finalize(3, Finish::cancelled, 3);
    CHECK(tiny.word_count == 3);
    CHECK(word_count(tiny.cot_text) == 3);

    Attempt none = s.finalize(0, Finish::cancelled, 0);
    CHECK(none.cot_text.empty());
    CHECK(none.word_count == 0);
    CHECK(none.answer_text.empty());
}

TEST_CASE("token_at bounds and channel split") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("tok", 6);
    SimStream s = make_stream(p, 0, 5, c);
    CHECK(s.token_at(s.cot_tokens()) == "The"); // first answer word
    CHECK_THROWS_AS(s.token_at(-1), Error);
    CHECK_THROWS_AS(s.token_at(s.planned_tokens()), Error);
}

TEST_CASE("sim_stream events mirror the planned token sequence") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("ev", 8);
    CompletionRequest req;
    req.model_id = "sim-reasoner";
    SimStream s = make_stream(p, 0, 99, c);

    auto events = sim_stream(req, p, 99, c);
    REQUIRE(events.size() == static_cast<size_t>(s.planned_tokens()) + 1);
    for (int64_t t = 0; t < s.planned_tokens(); ++t) {
        const StreamEvent& e = events[static_cast<size_t>(t)];
        CHECK(e.kind == EventKind::delta);
        CHECK(e.text_delta == s.token_at(t));
        CHECK(e.tokens_so_far == t + 1);
    }
    CHECK(events.back().kind == EventKind::done);
    CHECK(events.back().tokens_so_far == s.planned_tokens());
    CHECK(events.back().finish_reason == "stop");

    req.max_tokens = 10;
    auto cut = sim_stream(req, p, 99, c);
    REQUIRE(cut.size() == 11);
    CHECK(cut.back().tokens_so_far == 10);

    req.max_tokens = 0; // clamps to one token
    CHECK(sim_stream(req, p, 99, c).size() == 2);

    req.max_tokens = 1 << 30; // larger than any plan: full stream
    CHECK(sim_stream(req, p, 99, c).size() == events.size());
}

TEST_CASE("lockstep_race run_all: everyone finishes at their own length") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("race", 1);
    std::vector<SimStream> streams;
    for (int i = 0; i < 3; ++i)
        streams.push_back(make_stream(p, i, 1000 + static_cast<uint64_t>(i) * 17, c));
    std::vector<int64_t> lengths;
    for (const auto& s : streams) lengths.push_back(s.planned_tokens());

    VirtualClock clock;
    ProblemRun run = lockstep_race(streams, clock, Policy::run_all, 55);
    CHECK(run.problem_id == "race");
    CHECK(run.n == 3);
    CHECK(run.policy == Policy::run_all);
    CHECK(run.run_seed == 55);
    int64_t total = 0;
    for (int i = 0; i < 3; ++i) {
        CHECK(run.attempts[i].finish == Finish::completed);
        CHECK(run.attempts[i].gen_tokens == lengths[i]);
        CHECK(run.attempts[i].finish_tick == lengths[i]);
        CHECK_FALSE(run.attempts[i].answer_text.empty());
        total += lengths[i];
    }
    CHECK(run.charged_tokens == total);
    CHECK(clock.tick == *std::max_element(lengths.begin(), lengths.end()));
    CHECK_NOTHROW(validate_run(run));
}

TEST_CASE("lockstep_race early_stop: one winner, everyone pays the winning length") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("race2", 1);
    std::vector<SimStream> streams;
    for (int i = 0; i < 4; ++i)
        streams.push_back(make_stream(p, i, 2000 + static_cast<uint64_t>(i) * 29, c));
    int64_t min_len = streams[0].planned_tokens();
    int expect_winner = 0;
    for (int i = 1; i < 4; ++i) {
        if (streams[i].planned_tokens() < min_len) {
            min_len = streams[i].planned_tokens();
            expect_winner = i;
        }
    }

    VirtualClock clock;
    ProblemRun run = lockstep_race(streams, clock, Policy::early_stop, 55);
    int completed = 0;
    for (int i = 0; i < 4; ++i) {
        CHECK(run.attempts[i].gen_tokens == min_len);
        CHECK(run.attempts[i].finish_tick == min_len);
        if (run.attempts[i].finish == Finish::completed) {
            ++completed;
            CHECK(i == expect_winner);
            CHECK_FALSE(run.attempts[i].answer_text.empty());
        } else {
            CHECK(run.attempts[i].finish == Finish::cancelled);
            CHECK(run.attempts[i].answer_text.empty());
        }
    }
    CHECK(completed == 1);
    CHECK(run.charged_tokens == 4 * min_len);
    CHECK(clock.tick == min_len);
    CHECK_NOTHROW(validate_run(run));
}

TEST_CASE("early_stop tie goes to the lowest attempt index") {
    SimConfig c = small_config();
    c.mode_tokens = 30;
    c.conv_sigma = 0.05; // concentrates lengths so equal draws exist
    c.overthink_prob = 0.0;
    Problem p = testutil::math_problem("tie", 1);

    // find two attempt seeds whose planned lengths collide
    std::map<int64_t, uint64_t> first_seed;
    uint64_t seed_a = 0, seed_b = 0;
    for (uint64_t s = 1; s <= 500 && seed_b == 0; ++s) {
        int64_t len = make_stream(p, 0, s, c).planned_tokens();
        auto [it, fresh] = first_seed.emplace(len, s);
        if (!fresh) {
            seed_a = it->second;
            seed_b = s;
        }
    }
    REQUIRE(seed_b != 0);

    std::vector<SimStream> streams;
    streams.push_back(make_stream(p, 0, seed_a, c));
    streams.push_back(make_stream(p, 1, seed_b, c));
    REQUIRE(streams[0].planned_tokens() == streams[1].planned_tokens());

    VirtualClock clock;
    ProblemRun run = lockstep_race(streams, clock, Policy::early_stop, 1);
    CHECK(run.attempts[0].finish == Finish::completed);
    CHECK(run.attempts[1].finish == Finish::cancelled);
}

TEST_CASE("lockstep_race rejects empty and mixed-problem fields") {
    SimConfig c = small_config();
    VirtualClock clock;
    std::vector<SimStream> none;
    CHECK_THROWS_AS(lockstep_race(none, clock, Policy::run_all, 1), Error);

    std::vector<SimStream> mixed;
    mixed.push_back(make_stream(testutil::math_problem("m1", 1), 0, 1, c));
    mixed.push_back(make_stream(testutil::math_problem("m2", 1), 1, 2, c));
    CHECK_THROWS_AS(lockstep_race(mixed, clock, Policy::run_all, 1), Error);
}

TEST_CASE("races use race-local time on a shared clock") {
    SimConfig c = small_config();
    Problem p = testutil::math_problem("shared", 1);
    auto build = [&] {
        std::vector<SimStream> streams;
        for (int i = 0; i < 2; ++i)
            streams.push_back(make_stream(p, i, 300 + static_cast<uint64_t>(i), c));
        return streams;
    };

    VirtualClock fresh;
    auto s1 = build();
    ProblemRun baseline = lockstep_race(s1, fresh, Policy::run_all, 9);

    VirtualClock reused;
    reused.tick = 12345; // left over from a previous race
    auto s2 = build();
    ProblemRun second = lockstep_race(s2, reused, Policy::run_all, 9);

    CHECK(second.charged_tokens == baseline.charged_tokens);
    for (int i = 0; i < 2; ++i) {
        CHECK(second.attempts[i].gen_tokens == baseline.attempts[i].gen_tokens);
        CHECK(second.attempts[i].finish_tick == baseline.attempts[i].finish_tick);
        CHECK(second.attempts[i].cot_text == baseline.attempts[i].cot_text);
    }
}
