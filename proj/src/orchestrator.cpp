#include "shortstop/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>
#include <thread>

#include "shortstop/rng.hpp"
#include "shortstop/trace.hpp"

namespace shortstop {

const char* to_string(Backend b) {
    return b == Backend::http ? "http" : "sim";
}

Backend backend_from_string(std::string_view s) {
    if (s == "http") return Backend::http;
    if (s == "sim") return Backend::sim;
    raise(Errc::ConfigError, "unknown backend: " + std::string(s));
}

void RunPlan::validate() const {
    if (n < 1) raise(Errc::ConfigError, "n must be >= 1");
    if (concurrency_limit < 1) raise(Errc::ConfigError, "concurrency_limit must be >= 1");
    if (trace_path.empty()) raise(Errc::ConfigError, "trace_path is empty");
    if (model_id.empty()) raise(Errc::ConfigError, "model_id is empty");
    if (backend == Backend::http && base_url.empty())
        raise(Errc::ConfigError, "http backend needs base_url");
    if (backend == Backend::sim) sim.validate();
}

int64_t attempt_seed(int64_t run_seed, const std::string& problem_id, int attempt_index) {
    uint64_t key = make_key(static_cast<uint64_t>(run_seed), problem_id,
                            static_cast<uint64_t>(attempt_index));
    return static_cast<int64_t>(key & 0x7fffffffffffffffULL);
}

namespace {

std::string user_prompt_for(const Problem& problem) { return problem.statement; }

ProblemRun run_sim_race(const Problem& problem, const RunPlan& plan) {
    std::vector<SimStream> streams;
    streams.reserve(plan.n);
    for (int i = 0; i < plan.n; ++i) {
        uint64_t seed = static_cast<uint64_t>(attempt_seed(plan.run_seed, problem.id, i));
        streams.emplace_back(problem, i, seed, plan.model_id, plan.sim);
    }
    VirtualClock clock;
    return lockstep_race(streams, clock, plan.policy, plan.run_seed);
}

ProblemRun run_http_race(const Problem& problem, const RunPlan& plan) {
    ChatClient client(plan.base_url);
    std::vector<StreamResult> results(plan.n);
    std::vector<CancelToken> tokens(plan.n);
    std::mutex mu;
    int winner = -1;

    auto worker = [&](int i) {
        CompletionRequest request;
        request.model_id = plan.model_id;
        request.system_prompt = problem.system_prompt;
        request.user_prompt = user_prompt_for(problem);
        request.temperature = plan.temperature;
        request.seed = attempt_seed(plan.run_seed, problem.id, i);
        StreamResult r = client.stream_completion(request, [](const StreamEvent&) {}, tokens[i]);
        std::lock_guard<std::mutex> lock(mu);
        results[i] = std::move(r);
        if (plan.policy == Policy::early_stop && results[i].finish == Finish::completed &&
            winner < 0) {
            winner = i;
            for (int k = 0; k < plan.n; ++k)
                if (k != i) tokens[k].request_cancel();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(plan.n);
    for (int i = 0; i < plan.n; ++i) threads.emplace_back(worker, i);
    for (std::thread& t : threads) t.join();

    ProblemRun run;
    run.problem_id = problem.id;
    run.n = plan.n;
    run.policy = plan.policy;
    run.run_seed = plan.run_seed;
    int completed = 0;
    for (int i = 0; i < plan.n; ++i) {
        StreamResult& r = results[i];
        Attempt a;
        a.attempt_index = i;
        a.problem_id = problem.id;
        a.cot_text = std::move(r.cot_text);
        a.answer_text = std::move(r.answer_text);
        a.gen_tokens = r.gen_tokens;
        a.word_count = word_count(a.cot_text);
        a.finish = r.finish;
        // a stream that claims completion without any reported tokens has no
        // usable length signal; record it as errored instead
        if (a.finish == Finish::completed && a.gen_tokens <= 0) a.finish = Finish::errored;
        if (a.finish != Finish::errored) a.finish_tick = r.finish_tick;
        a.model_id = plan.model_id;
        a.seed = attempt_seed(plan.run_seed, problem.id, i);
        if (a.finish == Finish::completed) ++completed;
        run.charged_tokens += std::max<int64_t>(a.gen_tokens, 0);
        run.attempts.push_back(std::move(a));
    }
    if (completed == 0)
        raise(Errc::AllAttemptsErrored, "no attempt completed for problem " + problem.id);
    return run;
}

ProblemRun errored_run(const Problem& problem, const RunPlan& plan) {
    ProblemRun run;
    run.problem_id = problem.id;
    run.n = plan.n;
    run.policy = plan.policy;
    run.run_seed = plan.run_seed;
    for (int i = 0; i < plan.n; ++i) {
        Attempt a;
        a.attempt_index = i;
        a.problem_id = problem.id;
        a.finish = Finish::errored;
        a.model_id = plan.model_id;
        a.seed = attempt_seed(plan.run_seed, problem.id, i);
        run.attempts.push_back(std::move(a));
    }
    return run;
}

} // namespace

ProblemRun run_race(const Problem& problem, const RunPlan& plan) {
    plan.validate();
    return plan.backend == Backend::sim ? run_sim_race(problem, plan)
                                        : run_http_race(problem, plan);
}

RunSummary run_benchmark(const std::vector<Problem>& problems, const RunPlan& plan) {
    plan.validate();
    validate_problem_set(problems);
    auto t0 = std::chrono::steady_clock::now();

    if (plan.backend == Backend::http && !ChatClient(plan.base_url).reachable())
        raise(Errc::BackendUnavailable, "no HTTP response from " + plan.base_url);

    std::set<std::string> have = read_trace_ids(plan.trace_path);
    std::vector<const Problem*> todo;
    for (const Problem& p : problems)
        if (!have.count(p.id)) todo.push_back(&p);

    RunSummary summary;
    summary.problems_total = static_cast<int64_t>(problems.size());
    summary.skipped = summary.problems_total - static_cast<int64_t>(todo.size());

    TraceWriter writer(plan.trace_path);
    std::mutex mu;
    size_t next_claim = 0;  // next todo index a worker takes
    size_t next_write = 0;  // next todo index the file needs
    std::map<size_t, std::pair<ProblemRun, bool>> ready; // index -> (run, errored?)

    auto worker = [&] {
        while (true) {
            size_t mine;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next_claim >= todo.size()) return;
                mine = next_claim++;
            }
            ProblemRun run;
            bool errored = false;
            try {
                run = run_race(*todo[mine], plan);
            } catch (const Error&) {
                run = errored_run(*todo[mine], plan);
                errored = true;
            }
            std::unique_lock<std::mutex> lock(mu);
            ready.emplace(mine, std::make_pair(std::move(run), errored));
            while (!ready.empty() && ready.begin()->first == next_write) {
                auto node = ready.extract(ready.begin());
                const ProblemRun& r = node.mapped().first;
                writer.append(r);
                ++next_write;
                ++summary.new_records;
                summary.attempts += static_cast<int64_t>(r.attempts.size());
                for (const Attempt& a : r.attempts)
                    if (a.finish == Finish::completed) ++summary.completed_attempts;
                if (node.mapped().second) ++summary.errored_problems;
                summary.charged_tokens += r.charged_tokens;
                int64_t shortest = 0;
                for (const Attempt& a : r.attempts)
                    if (a.finish == Finish::completed &&
                        (shortest == 0 || a.gen_tokens < shortest))
                        shortest = a.gen_tokens;
                summary.idealized_charged_tokens += shortest * r.n;
            }
        }
    };

    int workers = std::max(1, std::min<int>(plan.concurrency_limit,
                                            static_cast<int>(todo.size())));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    auto t1 = std::chrono::steady_clock::now();
    summary.wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    return summary;
}

} // namespace shortstop
