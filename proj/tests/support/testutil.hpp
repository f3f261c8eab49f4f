#pragma once

// Shared helpers for the test binaries: temp directories, small file I/O, and
// builders for hand-assembled domain objects.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "shortstop/domain.hpp"

namespace testutil {

// Self-deleting temporary directory.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "shortstop-test-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (std::filesystem::path(path_) / name).string();
    }

private:
    std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write_file failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file failed: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline bool files_equal(const std::string& a, const std::string& b) {
    std::ifstream fa(a, std::ios::binary);
    std::ifstream fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::vector<char> ba(1 << 20), bb(1 << 20);
    while (true) {
        fa.read(ba.data(), static_cast<std::streamsize>(ba.size()));
        fb.read(bb.data(), static_cast<std::streamsize>(bb.size()));
        if (fa.gcount() != fb.gcount()) return false;
        if (!std::equal(ba.data(), ba.data() + fa.gcount(), bb.data())) return false;
        if (fa.eof() && fb.eof()) return true;
        if (fa.eof() != fb.eof()) return false;
    }
}

inline shortstop::Problem math_problem(const std::string& id, int gold) {
    shortstop::Problem p;
    p.id = id;
    p.benchmark = shortstop::Benchmark::math;
    p.statement = "What number does the counting machine " + id + " print?";
    p.system_prompt = shortstop::kMathSystemPrompt;
    p.gold_answer = gold;
    return p;
}

inline shortstop::Problem code_problem(const std::string& id,
                                       const std::string& test_spec = "assert solve()") {
    shortstop::Problem p;
    p.id = id;
    p.benchmark = shortstop::Benchmark::code;
    p.statement = "Write a function solve() for task " + id + ".";
    p.system_prompt = shortstop::kCodeSystemPrompt;
    p.test_spec = test_spec;
    return p;
}

// Completed attempt with a consistent word_count; answer defaults to a boxed 7.
inline shortstop::Attempt attempt(int index, const std::string& problem_id,
                                  int64_t gen_tokens,
                                  shortstop::Finish finish = shortstop::Finish::completed,
                                  std::string answer_text = "\\boxed{7}",
                                  std::string cot_text = "thinking words here") {
    shortstop::Attempt a;
    a.attempt_index = index;
    a.problem_id = problem_id;
    a.cot_text = std::move(cot_text);
    a.answer_text = finish == shortstop::Finish::completed ? std::move(answer_text) : "";
    a.gen_tokens = gen_tokens;
    a.word_count = shortstop::word_count(a.cot_text);
    a.finish = finish;
    if (finish != shortstop::Finish::errored) a.finish_tick = gen_tokens;
    a.model_id = "test-model";
    a.seed = 1000 + index;
    return a;
}

// Run over the given attempts; charged_tokens defaults to the sum of all
// nonnegative attempt lengths (a run_all charge).
inline shortstop::ProblemRun run_of(const std::string& problem_id,
                                    std::vector<shortstop::Attempt> attempts,
                                    shortstop::Policy policy = shortstop::Policy::run_all,
                                    int64_t charged = -1) {
    shortstop::ProblemRun run;
    run.problem_id = problem_id;
    run.n = static_cast<int>(attempts.size());
    run.policy = policy;
    run.attempts = std::move(attempts);
    if (charged < 0) {
        charged = 0;
        for (const auto& a : run.attempts) charged += std::max<int64_t>(a.gen_tokens, 0);
    }
    run.charged_tokens = charged;
    run.run_seed = 0;
    return run;
}

// Spaced filler text of `words` words that contains no hedging markers.
inline std::string plain_words(int64_t words, const std::string& stem = "zuzu") {
    std::string out;
    for (int64_t i = 0; i < words; ++i) {
        if (i) out += ' ';
        out += stem;
    }
    return out;
}

} // namespace testutil
