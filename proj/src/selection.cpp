#include "shortstop/selection.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

namespace shortstop {

const char* const kSimRunnerPassSentinel = "SIM_PASS";

namespace {

std::string trim_copy(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace

ExtractedAnswer extract_boxed(const std::string& answer_text) {
    ExtractedAnswer out;
    size_t pos = answer_text.rfind("boxed{");
    if (pos == std::string::npos) return out;
    size_t open = pos + 6;
    size_t close = answer_text.find('}', open);
    if (close == std::string::npos) return out;
    std::string content = trim_copy(std::string_view(answer_text).substr(open, close - open));
    size_t nz = content.find_first_not_of('0');
    if (nz == std::string::npos && !content.empty()) {
        content = "0";
    } else if (nz != std::string::npos && nz > 0) {
        content = content.substr(nz);
    }
    if (content.empty() || content.size() > 3) return out;
    for (char c : content)
        if (!std::isdigit(static_cast<unsigned char>(c))) return out;
    int value = std::stoi(content);
    if (value < 0 || value > 999) return out;
    out.kind = AnswerKind::numeric;
    out.numeric_value = value;
    return out;
}

ExtractedAnswer extract_code(const std::string& answer_text) {
    ExtractedAnswer out;
    // Pair up ``` fences in order of appearance; use the last complete block.
    std::vector<size_t> fences;
    for (size_t pos = answer_text.find("```"); pos != std::string::npos;
         pos = answer_text.find("```", pos + 3)) {
        fences.push_back(pos);
    }
    std::string body;
    if (fences.size() >= 2) {
        size_t open = fences[fences.size() - (fences.size() % 2 ? 3 : 2)];
        size_t close = fences[fences.size() - (fences.size() % 2 ? 2 : 1)];
        size_t body_start = open + 3;
        // Skip the info string ("```python") through its newline, if any.
        size_t nl = answer_text.find('\n', body_start);
        if (nl != std::string::npos && nl < close) body_start = nl + 1;
        body = answer_text.substr(body_start, close - body_start);
        if (!body.empty() && body.back() == '\n') body.pop_back();
    }
    if (body.empty()) body = answer_text; // no usable fence: whole text is the program
    if (body.empty()) return out;
    out.kind = AnswerKind::code;
    out.code_text = std::move(body);
    return out;
}

namespace {

std::string replace_all(std::string s, std::string_view what, std::string_view with) {
    size_t pos = 0;
    while ((pos = s.find(what, pos)) != std::string::npos) {
        s.replace(pos, what.size(), with);
        pos += with.size();
    }
    return s;
}

// Temp file that removes itself; contents written eagerly.
class TempFile {
public:
    explicit TempFile(const std::string& contents) {
        char tmpl[] = "/tmp/shortstop-XXXXXX";
        fd_ = mkstemp(tmpl);
        if (fd_ < 0) return;
        path_ = tmpl;
        size_t off = 0;
        while (off < contents.size()) {
            ssize_t n = write(fd_, contents.data() + off, contents.size() - off);
            if (n <= 0) {
                close(fd_);
                fd_ = -1;
                return;
            }
            off += static_cast<size_t>(n);
        }
    }
    ~TempFile() {
        if (fd_ >= 0) close(fd_);
        if (!path_.empty()) unlink(path_.c_str());
    }
    bool ok() const { return fd_ >= 0; }
    const std::string& path() const { return path_; }

private:
    int fd_ = -1;
    std::string path_;
};

// Runs `command` under /bin/sh with a kill timeout. Returns the exit status,
// or sets timed_out/spawn_failed.
int run_command(const std::string& command, int timeout_seconds, bool& timed_out,
                bool& spawn_failed) {
    timed_out = false;
    spawn_failed = false;
    pid_t pid = fork();
    if (pid < 0) {
        spawn_failed = true;
        return -1;
    }
    if (pid == 0) {
        setpgid(0, 0); // own process group so the timeout can kill the whole tree
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    auto deadline =
        std::chrono::steady_clock::now() + std::chrono::seconds(timeout_seconds);
    int status = 0;
    while (true) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) {
            spawn_failed = true;
            return -1;
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            timed_out = true;
            return -1;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFEXITED(status)) {
        int code = WEXITSTATUS(status);
        if (code == 127) spawn_failed = true; // shell could not exec the command
        return code;
    }
    return -1;
}

} // namespace

GradeOutcome grade_detail(const Attempt& attempt, const Problem& problem,
                          const RunnerConfig& runner) {
    GradeOutcome out;
    if (problem.benchmark == Benchmark::math) {
        ExtractedAnswer ans = extract_boxed(attempt.answer_text);
        out.passed = ans.kind == AnswerKind::numeric && problem.gold_answer &&
                     *ans.numeric_value == *problem.gold_answer;
        return out;
    }
    ExtractedAnswer ans = extract_code(attempt.answer_text);
    if (ans.kind != AnswerKind::code) return out;
    if (runner.command_template == "sim") {
        out.passed = trim_copy(*ans.code_text) == kSimRunnerPassSentinel;
        return out;
    }
    TempFile program(*ans.code_text);
    TempFile tests(problem.test_spec.value_or(""));
    if (!program.ok() || !tests.ok()) {
        out.tag = "runner_spawn_failed";
        return out;
    }
    std::string command = replace_all(runner.command_template, "{program_file}", program.path());
    command = replace_all(command, "{test_file}", tests.path());
    bool timed_out = false;
    bool spawn_failed = false;
    int code = run_command(command, runner.timeout_seconds, timed_out, spawn_failed);
    if (timed_out) {
        out.tag = "runner_timeout";
    } else if (spawn_failed) {
        out.tag = "runner_spawn_failed";
    } else {
        out.passed = code == 0;
    }
    return out;
}

bool grade(const Attempt& attempt, const Problem& problem, const RunnerConfig& runner) {
    return grade_detail(attempt, problem, runner).passed;
}

std::map<std::string, const Problem*> problem_index(const std::vector<Problem>& problems) {
    std::map<std::string, const Problem*> idx;
    for (const Problem& p : problems) idx[p.id] = &p;
    return idx;
}

namespace {

const Problem& find_problem(const std::map<std::string, const Problem*>& idx,
                            const std::string& id) {
    auto it = idx.find(id);
    if (it == idx.end())
        raise(Errc::SchemaMismatch, "trace problem '" + id + "' not in problem set");
    return *it->second;
}

} // namespace

GradeMatrix grade_all(const std::vector<ProblemRun>& runs,
                      const std::vector<Problem>& problems, const RunnerConfig& runner) {
    auto idx = problem_index(problems);
    GradeMatrix matrix(runs.size());
    for (size_t i = 0; i < runs.size(); ++i) {
        const Problem& problem = find_problem(idx, runs[i].problem_id);
        matrix[i].resize(runs[i].attempts.size());
        for (size_t a = 0; a < runs[i].attempts.size(); ++a) {
            const Attempt& attempt = runs[i].attempts[a];
            if (attempt.finish == Finish::completed)
                matrix[i][a] = grade(attempt, problem, runner);
        }
    }
    return matrix;
}

namespace {

SelectionOutcome select_extreme(const ProblemRun& run, bool shortest) {
    int best = -1;
    for (size_t i = 0; i < run.attempts.size(); ++i) {
        const Attempt& a = run.attempts[i];
        if (a.finish != Finish::completed) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        int64_t cur = run.attempts[best].gen_tokens;
        if (shortest ? a.gen_tokens < cur : a.gen_tokens > cur) best = static_cast<int>(i);
    }
    if (best < 0) raise(Errc::NoCompletedAttempt, run.problem_id);
    SelectionOutcome out;
    out.strategy = shortest ? Strategy::shortest : Strategy::longest;
    out.chosen_attempt = best;
    out.final_answer = run.attempts[best].answer_text;
    out.tokens_charged = run.charged_tokens;
    return out;
}

} // namespace

SelectionOutcome select_shortest(const ProblemRun& run) { return select_extreme(run, true); }

SelectionOutcome select_longest(const ProblemRun& run) { return select_extreme(run, false); }

SelectionOutcome self_consistency(const ProblemRun& run, Benchmark benchmark) {
    if (benchmark != Benchmark::math)
        raise(Errc::NotApplicable, run.problem_id + ": answers are not comparable");
    if (run.policy != Policy::run_all)
        raise(Errc::PolicyMismatch, run.problem_id + ": self_consistency needs run_all");
    if (run.n < 3)
        raise(Errc::TooFewSolutions, run.problem_id + ": n < 3");

    std::map<int, int> votes;
    for (const Attempt& a : run.attempts) {
        if (a.finish != Finish::completed) continue;
        ExtractedAnswer ans = extract_boxed(a.answer_text);
        if (ans.kind == AnswerKind::numeric) ++votes[*ans.numeric_value];
    }
    if (votes.empty()) raise(Errc::NoValidAnswers, run.problem_id);
    int top = 0;
    for (const auto& [value, count] : votes) top = std::max(top, count);

    // Tie between modal groups: the group containing the shortest attempt
    // wins. Scan attempts by (gen_tokens, index) and take the first whose
    // answer is modal.
    std::vector<int> order;
    for (size_t i = 0; i < run.attempts.size(); ++i)
        if (run.attempts[i].finish == Finish::completed) order.push_back(static_cast<int>(i));
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& aa = run.attempts[a];
        const auto& bb = run.attempts[b];
        return aa.gen_tokens != bb.gen_tokens ? aa.gen_tokens < bb.gen_tokens : a < b;
    });
    int winner = -1;
    for (int i : order) {
        ExtractedAnswer ans = extract_boxed(run.attempts[i].answer_text);
        if (ans.kind == AnswerKind::numeric && votes[*ans.numeric_value] == top) {
            winner = *ans.numeric_value;
            break;
        }
    }

    SelectionOutcome out;
    out.strategy = Strategy::self_consistency;
    out.final_answer = std::to_string(winner);
    out.tokens_charged = run.charged_tokens;
    return out;
}

double individual_accuracy(const std::vector<ProblemRun>& runs,
                           const std::vector<Problem>& problems, const RunnerConfig& runner) {
    GradeMatrix matrix = grade_all(runs, problems, runner);
    int64_t total = 0;
    int64_t correct = 0;
    for (const auto& row : matrix) {
        for (const auto& g : row) {
            if (!g) continue;
            ++total;
            if (*g) ++correct;
        }
    }
    if (total == 0) raise(Errc::EmptyInput, "no completed attempts to grade");
    return static_cast<double>(correct) / static_cast<double>(total);
}

StrategyReport evaluate_strategy(const std::vector<ProblemRun>& runs,
                                 const std::vector<Problem>& problems, Strategy strategy,
                                 const RunnerConfig& runner) {
    if (runs.empty()) raise(Errc::EmptyInput, "empty trace");
    auto idx = problem_index(problems);

    StrategyReport report;
    report.strategy = strategy;
    report.problems = static_cast<int>(runs.size());

    if (strategy == Strategy::individual) {
        int64_t attempts = 0;
        int64_t correct = 0;
        int64_t tokens = 0;
        for (const ProblemRun& run : runs) {
            const Problem& problem = find_problem(idx, run.problem_id);
            PerProblemRow row;
            row.problem_id = run.problem_id;
            int64_t p_attempts = 0;
            int64_t p_tokens = 0;
            for (const Attempt& a : run.attempts) {
                if (a.finish != Finish::completed) continue;
                ++p_attempts;
                p_tokens += a.gen_tokens;
                ++attempts;
                tokens += a.gen_tokens;
                if (grade(a, problem, runner)) ++correct;
            }
            if (p_attempts == 0) {
                row.note = errc_name(Errc::NoCompletedAttempt);
            } else {
                row.tokens = p_tokens / p_attempts;
                ++report.applicable;
            }
            report.per_problem.push_back(std::move(row));
        }
        if (attempts == 0) raise(Errc::EmptyInput, "no completed attempts to grade");
        report.accuracy = static_cast<double>(correct) / static_cast<double>(attempts);
        report.mean_tokens = static_cast<double>(tokens) / static_cast<double>(attempts);
        return report;
    }

    int64_t correct_problems = 0;
    double token_sum = 0;
    for (const ProblemRun& run : runs) {
        const Problem& problem = find_problem(idx, run.problem_id);
        PerProblemRow row;
        row.problem_id = run.problem_id;
        try {
            if (strategy == Strategy::shortest) {
                SelectionOutcome sel = select_shortest(run);
                const Attempt& chosen = run.attempts[*sel.chosen_attempt];
                // What the early-stopping race pays: on run_all traces the
                // idealized synchronous charge, on early_stop the recorded one.
                row.tokens = run.policy == Policy::run_all
                                 ? static_cast<int64_t>(run.n) * chosen.gen_tokens
                                 : run.charged_tokens;
                row.correct = grade(chosen, problem, runner);
            } else if (strategy == Strategy::longest) {
                if (run.policy != Policy::run_all)
                    raise(Errc::PolicyMismatch,
                          run.problem_id + ": longest needs a run_all trace");
                SelectionOutcome sel = select_longest(run);
                row.tokens = run.charged_tokens;
                row.correct = grade(run.attempts[*sel.chosen_attempt], problem, runner);
            } else { // self_consistency
                SelectionOutcome sel = self_consistency(run, problem.benchmark);
                row.tokens = run.charged_tokens;
                row.correct = problem.gold_answer &&
                              sel.final_answer == std::to_string(*problem.gold_answer);
            }
            ++report.applicable;
            token_sum += static_cast<double>(row.tokens);
            if (row.correct.value_or(false)) ++correct_problems;
        } catch (const Error& e) {
            row.note = errc_name(e.code());
        }
        report.per_problem.push_back(std::move(row));
    }
    if (report.applicable > 0) {
        report.accuracy =
            static_cast<double>(correct_problems) / static_cast<double>(report.applicable);
        report.mean_tokens = token_sum / static_cast<double>(report.applicable);
    } else {
        report.accuracy = std::nan("");
        report.mean_tokens = std::nan("");
    }
    return report;
}

} // namespace shortstop
