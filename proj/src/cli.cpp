#include "shortstop/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shortstop/analysis.hpp"
#include "shortstop/config.hpp"
#include "shortstop/report.hpp"
#include "shortstop/trace.hpp"

namespace shortstop {

namespace {

std::vector<ProblemRun> load_trace_for(const RunConfig& config) {
    if (config.trace_path.empty()) raise(Errc::ConfigError, "no trace path configured");
    std::vector<ProblemRun> runs = read_trace(config.trace_path);
    if (runs.empty()) raise(Errc::EmptyInput, "trace is empty: " + config.trace_path);
    return runs;
}

void require_problems_cover(const std::vector<ProblemRun>& runs,
                            const std::vector<Problem>& problems) {
    std::set<std::string> ids;
    for (const Problem& p : problems) ids.insert(p.id);
    for (const ProblemRun& run : runs)
        if (!ids.count(run.problem_id))
            raise(Errc::SchemaMismatch,
                  "trace references a problem not in the problem file: " + run.problem_id);
}

std::string out_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

int cmd_run(const RunConfig& config, std::ostream& out) {
    std::vector<Problem> problems = load_problems(config.problem_file);
    RunSummary s = run_benchmark(problems, config.to_plan());
    out << "problems: " << s.problems_total << " (skipped " << s.skipped << ", new "
        << s.new_records << ")\n"
        << "attempts: " << s.attempts << " (completed " << s.completed_attempts << ")\n"
        << "errored problems: " << s.errored_problems << "\n"
        << "charged tokens: " << s.charged_tokens;
    if (config.policy == Policy::early_stop)
        out << " (idealized n*min: " << s.idealized_charged_tokens << ")";
    out << "\nwall ms: " << s.wall_ms << "\ntrace: " << config.trace_path << "\n";
    return 0;
}

int cmd_select(const RunConfig& config, const std::string& out_dir,
               const std::string& only_strategy, std::ostream& out) {
    std::vector<Problem> problems = load_problems(config.problem_file);
    std::vector<ProblemRun> runs = load_trace_for(config);
    require_problems_cover(runs, problems);
    RunnerConfig runner = config.effective_runner();

    std::vector<Strategy> strategies = {Strategy::individual, Strategy::shortest,
                                        Strategy::self_consistency, Strategy::longest};
    if (!only_strategy.empty()) strategies = {strategy_from_string(only_strategy)};

    std::vector<StrategyReport> reports;
    reports.reserve(strategies.size());
    for (Strategy s : strategies)
        reports.push_back(evaluate_strategy(runs, problems, s, runner));

    out << render_strategy_table(reports);

    if (!out_dir.empty()) {
        write_text_file(out_path(out_dir, "select_summary.csv"),
                        strategy_summary_csv(reports));
        write_text_file(out_path(out_dir, "select_per_problem.csv"),
                        strategy_per_problem_csv(reports));
        nlohmann::ordered_json j;
        j["command"] = "select";
        j["config"] = run_config_to_json(config);
        j["strategies"] = nlohmann::ordered_json::array();
        for (const StrategyReport& r : reports) {
            nlohmann::ordered_json row;
            row["strategy"] = to_string(r.strategy);
            if (std::isnan(r.accuracy)) row["accuracy"] = nullptr;
            else row["accuracy"] = r.accuracy;
            row["mean_tokens"] = r.mean_tokens;
            row["problems"] = r.problems;
            row["applicable"] = r.applicable;
            j["strategies"].push_back(std::move(row));
        }
        write_json_file(out_path(out_dir, "select_summary.json"), j);
        out << "wrote " << out_path(out_dir, "select_summary.csv") << ", "
            << out_path(out_dir, "select_per_problem.csv") << ", "
            << out_path(out_dir, "select_summary.json") << "\n";
    }
    return 0;
}

nlohmann::ordered_json fit_to_json(const TrendBreakFit& fit) {
    nlohmann::ordered_json j;
    j["split_tokens"] = fit.split_tokens;
    auto put = [&j](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
        else j[key] = nullptr;
    };
    put("slope_before", fit.slope_before);
    put("intercept_before", fit.intercept_before);
    put("r_before", fit.r_before);
    put("slope_after", fit.slope_after);
    put("intercept_after", fit.intercept_after);
    put("r_after", fit.r_after);
    j["n_before"] = fit.n_before;
    j["n_after"] = fit.n_after;
    j["degenerate_before"] = fit.degenerate_before;
    j["degenerate_after"] = fit.degenerate_after;
    return j;
}

int cmd_analyze(const RunConfig& config, const std::string& which,
                const std::string& out_dir, std::vector<int> n_values, std::ostream& out) {
    std::vector<Problem> problems = load_problems(config.problem_file);
    std::vector<ProblemRun> runs = load_trace_for(config);
    require_problems_cover(runs, problems);
    RunnerConfig runner = config.effective_runner();
    const MarkerLexicon& lexicon = MarkerLexicon::default_lexicon();

    nlohmann::ordered_json summary;
    summary["command"] = "analyze";
    summary["analysis"] = which;
    summary["config"] = run_config_to_json(config);
    std::string csv;

    if (which == "uncertainty") {
        PairedUncertainty paired = paired_longer_more_uncertain(runs, problems, runner, lexicon);
        std::vector<TokenDensityPoint> points = density_points(runs, lexicon);
        int64_t split = critical_point(selected_lengths(runs, LengthSelection::all), config.bins);
        TrendBreakFit fit = trend_break(points, split);
        csv = "tokens,density\n";
        for (const TokenDensityPoint& p : points)
            csv += std::to_string(p.tokens) + "," + format_double(p.density) + "\n";
        summary["paired_fraction"] = paired.fraction;
        summary["pairs"] = paired.pairs;
        summary["trend_break"] = fit_to_json(fit);
        out << "longer-correct-more-uncertain fraction: " << format_fixed(paired.fraction, 3)
            << " over " << paired.pairs << " pairs\n";
        out << "density slope before/after " << split << " tokens: "
            << (fit.slope_before ? format_double(*fit.slope_before * 1000) : "*") << " / "
            << (fit.slope_after ? format_double(*fit.slope_after * 1000) : "*")
            << " (per 1k tokens)\n";
    } else if (which == "critical") {
        std::vector<int64_t> lengths = selected_lengths(runs, LengthSelection::all);
        int64_t cp = critical_point(lengths, config.bins);
        Histogram h = token_distribution(runs, LengthSelection::all, config.bins);
        csv = "bin,midpoint,count\n";
        for (int b = 0; b < h.bins; ++b)
            csv += std::to_string(b) + "," + std::to_string(h.midpoint(b)) + "," +
                   std::to_string(h.counts[b]) + "\n";
        summary["critical_point"] = cp;
        summary["bins"] = h.bins;
        summary["lo"] = h.lo;
        summary["hi"] = h.hi;
        summary["lengths"] = static_cast<int64_t>(lengths.size());
        out << "critical point: " << cp << " tokens (mode bin of " << h.bins
            << " over [" << h.lo << ", " << h.hi << "])\n";
    } else if (which == "tokendist") {
        csv = "selection,bin,midpoint,count\n";
        summary["selections"] = nlohmann::ordered_json::array();
        for (LengthSelection sel : {LengthSelection::all, LengthSelection::shortest_per_problem,
                                    LengthSelection::longest_per_problem}) {
            Histogram h = token_distribution(runs, sel, config.bins);
            for (int b = 0; b < h.bins; ++b)
                csv += std::string(to_string(sel)) + "," + std::to_string(b) + "," +
                       std::to_string(h.midpoint(b)) + "," + std::to_string(h.counts[b]) + "\n";
            double skew = sample_skewness(selected_lengths(runs, sel));
            nlohmann::ordered_json row;
            row["selection"] = to_string(sel);
            row["mode_bin"] = h.mode_bin();
            row["mode_midpoint"] = h.midpoint(h.mode_bin());
            row["skewness"] = skew;
            summary["selections"].push_back(std::move(row));
            out << to_string(sel) << ": mode " << h.midpoint(h.mode_bin()) << " tokens, skew "
                << format_fixed(skew, 3) << "\n";
        }
    } else if (which == "divergence") {
        std::unique_ptr<Embedder> embedder;
        if (config.backend == Backend::sim) {
            embedder = std::make_unique<FakeEmbedder>();
        } else {
            embedder = std::make_unique<HttpEmbedder>(config.base_url.value_or(""),
                                                      config.embedding_model_id);
        }
        DivergenceCurve curve = chunk_divergence(runs, *embedder, config.chunk_words);
        csv = "chunk,mean_cosine_distance,pairs\n";
        for (size_t k = 0; k < curve.points.size(); ++k)
            csv += std::to_string(k) + "," + format_double(curve.points[k].mean_cosine_distance) +
                   "," + std::to_string(curve.points[k].pair_count) + "\n";
        summary["chunk_words"] = config.chunk_words;
        summary["problems_skipped"] = curve.problems_skipped;
        summary["points"] = nlohmann::ordered_json::array();
        for (const DivergencePoint& p : curve.points)
            summary["points"].push_back({{"mean_cosine_distance", p.mean_cosine_distance},
                                         {"pairs", p.pair_count}});
        out << "divergence: " << curve.points.size() << " chunk positions";
        if (!curve.points.empty())
            out << ", first " << format_fixed(curve.points.front().mean_cosine_distance, 4)
                << ", last " << format_fixed(curve.points.back().mean_cosine_distance, 4);
        out << " (skipped " << curve.problems_skipped << " problems)\n";
    } else if (which == "pareto") {
        if (n_values.empty())
            for (int n = 1; n <= config.n; ++n) n_values.push_back(n);
        std::vector<ParetoPoint> points = pareto_curve(
            runs, problems, runner, n_values, {Strategy::shortest, Strategy::self_consistency});
        csv = "strategy,n,accuracy,mean_tokens\n";
        for (const ParetoPoint& p : points)
            csv += std::string(to_string(p.strategy)) + "," + std::to_string(p.n) + "," +
                   format_double(p.accuracy) + "," + format_double(p.mean_tokens_per_problem) +
                   "\n";
        summary["points"] = nlohmann::ordered_json::array();
        for (const ParetoPoint& p : points)
            summary["points"].push_back({{"strategy", to_string(p.strategy)},
                                         {"n", p.n},
                                         {"accuracy", p.accuracy},
                                         {"mean_tokens", p.mean_tokens_per_problem}});
        out << "pareto: " << points.size() << " points over n in {";
        for (size_t i = 0; i < n_values.size(); ++i)
            out << (i ? "," : "") << n_values[i];
        out << "}\n";
    } else {
        raise(Errc::ConfigError, "unknown analysis: " + which);
    }

    write_text_file(out_path(out_dir, which + ".csv"), csv);
    write_json_file(out_path(out_dir, which + ".json"), summary);
    out << "wrote " << out_path(out_dir, which + ".csv") << " and "
        << out_path(out_dir, which + ".json") << "\n";
    return 0;
}

int cmd_validate(const RunConfig& config, bool trace_flag_given, std::ostream& out) {
    std::vector<Problem> problems = load_problems(config.problem_file);
    out << "config ok\n" << "problems ok: " << problems.size() << " ("
        << config.problem_file << ")\n";
    bool check_trace =
        trace_flag_given ||
        (!config.trace_path.empty() && std::filesystem::exists(config.trace_path));
    if (check_trace) {
        std::vector<ProblemRun> runs = read_trace(config.trace_path);
        require_problems_cover(runs, problems);
        out << "trace ok: " << runs.size() << " records (" << config.trace_path << ")\n";
    } else {
        out << "trace: not present, skipped\n";
    }
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"parallel best-of-n sampling: run races, select answers, analyze traces"};
    app.require_subcommand(1);

    std::string config_path;
    std::string trace_override;
    std::string out_dir;
    int64_t seed_override = 0;
    auto* config_opt = app.add_option("--config", config_path, "run config JSON file");
    auto* trace_opt = app.add_option("--trace", trace_override, "trace JSONL path override");
    auto* seed_opt = app.add_option("--seed", seed_override, "run seed override");
    app.add_option("--out", out_dir, "output directory for CSV/JSON reports");

    CLI::App* c_run = app.add_subcommand("run", "race every problem and append the trace");
    CLI::App* c_select =
        app.add_subcommand("select", "apply selection strategies to a trace");
    std::string only_strategy;
    c_select->add_option("--strategy", only_strategy,
                         "restrict to one strategy (default: all four)");
    CLI::App* c_analyze = app.add_subcommand("analyze", "compute one analysis over a trace");
    std::string which;
    c_analyze
        ->add_option("which", which,
                     "one of: uncertainty, critical, tokendist, divergence, pareto")
        ->required();
    std::vector<int> n_values;
    c_analyze->add_option("--n", n_values, "pareto: comma-separated subset sizes")
        ->delimiter(',');
    CLI::App* c_validate =
        app.add_subcommand("validate", "check config, problems, and trace integrity");
    for (CLI::App* sub : {c_run, c_select, c_analyze, c_validate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!*config_opt) raise(Errc::ConfigError, "--config is required");
        RunConfig config = load_run_config(config_path);
        if (*trace_opt) config.trace_path = trace_override;
        if (*seed_opt) config.seed = seed_override;
        config.validate();

        if (app.got_subcommand(c_run)) return cmd_run(config, out);
        if (app.got_subcommand(c_select)) return cmd_select(config, out_dir, only_strategy, out);
        if (app.got_subcommand(c_analyze))
            return cmd_analyze(config, which, out_dir.empty() ? "out" : out_dir, n_values, out);
        return cmd_validate(config, static_cast<bool>(*trace_opt), out);
    } catch (const Error& e) {
        err << e.what() << "\n"; // already prefixed with the error name
        return errc_exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    }
}

} // namespace shortstop
