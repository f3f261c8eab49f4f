#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <string>
#include <vector>

#include "shortstop/domain.hpp"
#include "shortstop/rng.hpp"
#include "support/testutil.hpp"

using namespace shortstop;
using testutil::TempDir;

TEST_CASE("word_count on plain ASCII") {
    CHECK(word_count("") == 0);
    CHECK(word_count("   ") == 0);
    CHECK(word_count("one") == 1);
    CHECK(word_count("wait wait  wait") == 3);
    CHECK(word_count("Wait, maybe this is wrong, but let me check again.") == 10);
    CHECK(word_count("  leading and trailing  ") == 3);
    CHECK(word_count("tabs\tand\nnewlines\r\nsplit") == 4);
    CHECK(word_count("a\vb\fc") == 3); // vertical tab and form feed separate
}

TEST_CASE("word_count treats Unicode spaces as separators") {
    CHECK(word_count("a\xc2\xa0m") == 2);          // U+00A0 no-break space
    CHECK(word_count("a\xe2\x80\x83m") == 2);      // U+2003 em space
    CHECK(word_count("a\xe2\x80\x8am") == 2);      // U+200A hair space
    CHECK(word_count("a\xe3\x80\x80m") == 2);      // U+3000 ideographic space
    CHECK(word_count("a\xe2\x80\xa8m") == 2);      // U+2028 line separator
    CHECK(word_count("a\xc2\x85m") == 2);          // U+0085 next line
    CHECK(word_count("a\xe2\x80\x8bm") == 1);      // U+200B zero-width space is NOT a separator
}

TEST_CASE("word_count: malformed UTF-8 bytes are never spaces") {
    std::string s = "a";
    s += static_cast<char>(0xff);
    s += "b";
    CHECK(word_count(s) == 1);
    std::string lone_cont = "x";
    lone_cont += static_cast<char>(0x80); // continuation byte with no lead
    lone_cont += "y";
    CHECK(word_count(lone_cont) == 1);
    // truncated two-byte sequence at the end of the string
    std::string truncated = "ab ";
    truncated += static_cast<char>(0xc2);
    CHECK(word_count(truncated) == 2);
}

TEST_CASE("word_count is invariant to the size of whitespace runs") {
    KeyedRng rng(2024);
    const std::vector<std::string> separators = {" ",  "  ", "\t", "\n", " \t ",
                                                 "\xc2\xa0", "\xe3\x80\x80 "};
    for (int iter = 0; iter < 50; ++iter) {
        int words = 1 + static_cast<int>(rng.uniform_int(12));
        std::string single, messy;
        for (int w = 0; w < words; ++w) {
            if (w) {
                single += ' ';
                messy += separators[rng.uniform_int(separators.size())];
                if (rng.bernoulli(0.3)) messy += separators[rng.uniform_int(separators.size())];
            }
            std::string word = "w" + std::to_string(w);
            single += word;
            messy += word;
        }
        CHECK(word_count(single) == words);
        CHECK(word_count(messy) == words);
    }
}

TEST_CASE("split_words agrees with word_count and drops all separators") {
    std::string text = " alpha\tbeta\xc2\xa0gamma  delta ";
    auto words = split_words(text);
    REQUIRE(static_cast<int64_t>(words.size()) == word_count(text));
    REQUIRE(words.size() == 4);
    CHECK(words[0] == "alpha");
    CHECK(words[1] == "beta");
    CHECK(words[2] == "gamma");
    CHECK(words[3] == "delta");
    CHECK(split_words("").empty());
}

TEST_CASE("enum round trips") {
    CHECK(benchmark_from_string(to_string(Benchmark::math)) == Benchmark::math);
    CHECK(benchmark_from_string(to_string(Benchmark::code)) == Benchmark::code);
    CHECK_THROWS_AS(benchmark_from_string("quiz"), Error);

    for (Finish f : {Finish::completed, Finish::cancelled, Finish::errored})
        CHECK(finish_from_string(to_string(f)) == f);
    CHECK_THROWS_AS(finish_from_string("finished"), Error);

    for (Policy p : {Policy::early_stop, Policy::run_all})
        CHECK(policy_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(policy_from_string("sometimes"), Error);

    for (Strategy s : {Strategy::shortest, Strategy::longest, Strategy::self_consistency,
                       Strategy::individual})
        CHECK(strategy_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(strategy_from_string("best"), Error);
}

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::ConfigError;
}

} // namespace

TEST_CASE("validate_problem_set rejects structural problems") {
    auto math = testutil::math_problem("m1", 5);
    auto code = testutil::code_problem("c1");

    CHECK_NOTHROW(validate_problem_set({math, code}));

    CHECK(code_of([&] { validate_problem_set({math, math}); }) == Errc::DuplicateId);

    auto no_gold = math;
    no_gold.gold_answer.reset();
    CHECK(code_of([&] { validate_problem_set({no_gold}); }) == Errc::MissingGold);

    auto mixed = math;
    mixed.test_spec = "assert 1";
    CHECK(code_of([&] { validate_problem_set({mixed}); }) == Errc::MixedSpec);

    auto code_no_spec = code;
    code_no_spec.test_spec.reset();
    CHECK(code_of([&] { validate_problem_set({code_no_spec}); }) == Errc::MissingGold);

    auto code_with_gold = code;
    code_with_gold.gold_answer = 3;
    CHECK(code_of([&] { validate_problem_set({code_with_gold}); }) == Errc::MixedSpec);

    auto out_of_range = math;
    out_of_range.gold_answer = 1000;
    CHECK(code_of([&] { validate_problem_set({out_of_range}); }) == Errc::MissingGold);

    auto empty_id = math;
    empty_id.id = "";
    CHECK_THROWS_AS(validate_problem_set({empty_id}), Error);
}

TEST_CASE("validate_run enforces record invariants") {
    using testutil::attempt;
    auto good = testutil::run_of("p", {attempt(0, "p", 10), attempt(1, "p", 20)});
    CHECK_NOTHROW(validate_run(good));

    auto n_mismatch = good;
    n_mismatch.n = 3;
    CHECK(code_of([&] { validate_run(n_mismatch); }) == Errc::SchemaMismatch);

    auto zero_len = good;
    zero_len.attempts[0].gen_tokens = 0;
    CHECK(code_of([&] { validate_run(zero_len); }) == Errc::SchemaMismatch);

    auto wrong_wc = good;
    wrong_wc.attempts[0].word_count += 1;
    CHECK(code_of([&] { validate_run(wrong_wc); }) == Errc::SchemaMismatch);

    auto undercharged = good;
    undercharged.charged_tokens = 19; // longest completed attempt is 20
    CHECK(code_of([&] { validate_run(undercharged); }) == Errc::SchemaMismatch);

    auto alien = good;
    alien.attempts[1].problem_id = "other";
    CHECK(code_of([&] { validate_run(alien); }) == Errc::SchemaMismatch);

    auto negative = good;
    negative.attempts[0].gen_tokens = -1;
    negative.attempts[0].finish = Finish::errored;
    CHECK(code_of([&] { validate_run(negative); }) == Errc::SchemaMismatch);

    auto empty_id = good;
    empty_id.problem_id = "";
    CHECK(code_of([&] { validate_run(empty_id); }) == Errc::SchemaMismatch);

    // an errored attempt may carry zero tokens
    auto errored = good;
    errored.attempts[1] = attempt(1, "p", 0, Finish::errored, "", "");
    CHECK_NOTHROW(validate_run(errored));
}

TEST_CASE("load_problems parses JSONL and applies default prompts") {
    TempDir dir;
    std::string path = dir.file("problems.jsonl");
    testutil::write_file(
        path,
        R"({"id":"m1","benchmark":"math","statement":"count to 3","gold_answer":3})"
        "\n"
        "\n" // blank lines are skipped
        R"x({"id":"c1","benchmark":"code","statement":"write it","test_spec":"assert f()","system_prompt":"custom","source_tag":"unit"})x"
        "\n");
    auto problems = load_problems(path);
    REQUIRE(problems.size() == 2);
    CHECK(problems[0].id == "m1");
    CHECK(problems[0].benchmark == Benchmark::math);
    CHECK(problems[0].gold_answer == 3);
    CHECK(problems[0].system_prompt == kMathSystemPrompt);
    CHECK(problems[0].source_tag.empty());
    CHECK(problems[1].system_prompt == "custom");
    CHECK(problems[1].test_spec == "assert f()");
    CHECK(problems[1].source_tag == "unit");
}

TEST_CASE("load_problems failure modes") {
    TempDir dir;
    CHECK(code_of([&] { load_problems(dir.file("missing.jsonl")); }) == Errc::IoError);

    std::string bad_json = dir.file("bad.jsonl");
    testutil::write_file(bad_json, "{not json\n");
    CHECK(code_of([&] { load_problems(bad_json); }) == Errc::IoError);

    std::string missing_key = dir.file("nokey.jsonl");
    testutil::write_file(missing_key, R"({"id":"x","benchmark":"math"})" "\n");
    CHECK(code_of([&] { load_problems(missing_key); }) == Errc::IoError);

    std::string dup = dir.file("dup.jsonl");
    testutil::write_file(dup,
                         R"({"id":"a","benchmark":"math","statement":"s","gold_answer":1})"
                         "\n"
                         R"({"id":"a","benchmark":"math","statement":"s","gold_answer":2})"
                         "\n");
    CHECK(code_of([&] { load_problems(dup); }) == Errc::DuplicateId);
}
