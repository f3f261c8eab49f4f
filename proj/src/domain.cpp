#include "shortstop/domain.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

namespace shortstop {

const char* const kMathSystemPrompt =
    "Give a numerical answer from 0-999 in this format, \\boxed{answer}, so if the "
    "answer is 123, you should return \\boxed{123}.";

const char* const kCodeSystemPrompt =
    "You are an expert Python programmer. You will be given a question and will "
    "generate a correct Python program that matches the specification and passes "
    "all tests.";

const char* to_string(Benchmark b) {
    return b == Benchmark::math ? "math" : "code";
}

Benchmark benchmark_from_string(std::string_view s) {
    if (s == "math") return Benchmark::math;
    if (s == "code") return Benchmark::code;
    raise(Errc::ConfigError, "unknown benchmark '" + std::string(s) + "'");
}

const char* to_string(Finish f) {
    switch (f) {
        case Finish::completed: return "completed";
        case Finish::cancelled: return "cancelled";
        case Finish::errored: return "errored";
    }
    return "errored";
}

Finish finish_from_string(std::string_view s) {
    if (s == "completed") return Finish::completed;
    if (s == "cancelled") return Finish::cancelled;
    if (s == "errored") return Finish::errored;
    raise(Errc::SchemaMismatch, "unknown finish state '" + std::string(s) + "'");
}

const char* to_string(Policy p) {
    return p == Policy::early_stop ? "early_stop" : "run_all";
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::shortest: return "shortest";
        case Strategy::longest: return "longest";
        case Strategy::self_consistency: return "self_consistency";
        case Strategy::individual: return "individual";
    }
    return "shortest";
}

Strategy strategy_from_string(std::string_view s) {
    if (s == "shortest") return Strategy::shortest;
    if (s == "longest") return Strategy::longest;
    if (s == "self_consistency") return Strategy::self_consistency;
    if (s == "individual") return Strategy::individual;
    raise(Errc::ConfigError, "unknown strategy '" + std::string(s) + "'");
}

Policy policy_from_string(std::string_view s) {
    if (s == "early_stop") return Policy::early_stop;
    if (s == "run_all") return Policy::run_all;
    raise(Errc::SchemaMismatch, "unknown policy '" + std::string(s) + "'");
}

namespace {

bool is_space_cp(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0a: case 0x0b: case 0x0c: case 0x0d: case 0x20:
        case 0x85: case 0xa0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202f: case 0x205f: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

// Decodes the codepoint at `i`, advancing it. Malformed sequences yield the
// raw byte value (never a space) and advance one byte.
uint32_t next_codepoint(std::string_view s, size_t& i) {
    unsigned char b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = (b0 >= 0xf0) ? 4 : (b0 >= 0xe0) ? 3 : (b0 >= 0xc0) ? 2 : 0;
    if (len == 0 || i + len > s.size()) {
        ++i;
        return b0;
    }
    uint32_t cp = b0 & (0x7f >> len);
    for (int k = 1; k < len; ++k) {
        unsigned char bk = static_cast<unsigned char>(s[i + k]);
        if ((bk & 0xc0) != 0x80) {
            ++i;
            return b0;
        }
        cp = (cp << 6) | (bk & 0x3f);
    }
    i += len;
    return cp;
}

} // namespace

int64_t word_count(std::string_view text) {
    int64_t count = 0;
    bool in_word = false;
    size_t i = 0;
    while (i < text.size()) {
        bool space = is_space_cp(next_codepoint(text, i));
        if (space) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string_view> split_words(std::string_view text) {
    std::vector<std::string_view> words;
    size_t i = 0;
    size_t word_start = 0;
    bool in_word = false;
    while (i < text.size()) {
        size_t here = i;
        bool space = is_space_cp(next_codepoint(text, i));
        if (space) {
            if (in_word) {
                words.push_back(text.substr(word_start, here - word_start));
                in_word = false;
            }
        } else if (!in_word) {
            in_word = true;
            word_start = here;
        }
    }
    if (in_word) words.push_back(text.substr(word_start));
    return words;
}

void validate_problem_set(const std::vector<Problem>& problems) {
    std::unordered_set<std::string> seen;
    for (const Problem& p : problems) {
        if (p.id.empty()) raise(Errc::MissingGold, "problem with empty id");
        if (!seen.insert(p.id).second) raise(Errc::DuplicateId, p.id);
        if (p.benchmark == Benchmark::math) {
            if (!p.gold_answer) raise(Errc::MissingGold, p.id);
            if (p.test_spec) raise(Errc::MixedSpec, p.id);
            if (*p.gold_answer < 0 || *p.gold_answer > 999)
                raise(Errc::MissingGold, p.id + ": gold_answer outside 0-999");
        } else {
            if (!p.test_spec) raise(Errc::MissingGold, p.id);
            if (p.gold_answer) raise(Errc::MixedSpec, p.id);
        }
    }
}

void validate_run(const ProblemRun& run) {
    if (run.problem_id.empty())
        raise(Errc::SchemaMismatch, "run with empty problem_id");
    if (run.n < 1)
        raise(Errc::SchemaMismatch, run.problem_id + ": n < 1");
    if (static_cast<int>(run.attempts.size()) != run.n)
        raise(Errc::SchemaMismatch,
              run.problem_id + ": attempts.size() != n");
    int64_t max_completed = 0;
    for (const Attempt& a : run.attempts) {
        if (a.problem_id != run.problem_id)
            raise(Errc::SchemaMismatch, run.problem_id + ": attempt problem_id mismatch");
        if (a.gen_tokens < 0 || a.word_count < 0)
            raise(Errc::SchemaMismatch, run.problem_id + ": negative token or word count");
        if (a.finish == Finish::completed) {
            if (a.gen_tokens <= 0)
                raise(Errc::SchemaMismatch,
                      run.problem_id + ": completed attempt with gen_tokens <= 0");
            max_completed = std::max(max_completed, a.gen_tokens);
        }
        if (a.word_count != word_count(a.cot_text))
            raise(Errc::SchemaMismatch,
                  run.problem_id + ": word_count does not match cot_text");
    }
    if (run.charged_tokens < max_completed)
        raise(Errc::SchemaMismatch,
              run.problem_id + ": charged_tokens below longest completed attempt");
}

std::vector<Problem> load_problems(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoError, "cannot open problem file " + path);
    std::vector<Problem> problems;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::IoError,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        try {
            Problem p;
            p.id = j.at("id").get<std::string>();
            p.benchmark = benchmark_from_string(j.at("benchmark").get<std::string>());
            p.statement = j.at("statement").get<std::string>();
            if (j.contains("system_prompt")) {
                p.system_prompt = j["system_prompt"].get<std::string>();
            } else {
                p.system_prompt = p.benchmark == Benchmark::math ? kMathSystemPrompt
                                                                 : kCodeSystemPrompt;
            }
            if (j.contains("gold_answer")) p.gold_answer = j["gold_answer"].get<int>();
            if (j.contains("test_spec")) p.test_spec = j["test_spec"].get<std::string>();
            if (j.contains("source_tag")) p.source_tag = j["source_tag"].get<std::string>();
            problems.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::IoError,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate_problem_set(problems);
    return problems;
}

} // namespace shortstop
