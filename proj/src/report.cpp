#include "shortstop/report.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <iomanip>

namespace shortstop {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

std::string format_percent(double fraction, int decimals) {
    if (std::isnan(fraction)) return "*";
    return format_fixed(fraction * 100.0, decimals);
}

std::string format_fixed(double v, int decimals) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(decimals) << v;
    return out.str();
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string render_strategy_table(const std::vector<StrategyReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(18) << "strategy" << std::right << std::setw(10)
        << "accuracy" << std::setw(14) << "mean_tokens" << std::setw(12) << "problems"
        << '\n';
    for (const StrategyReport& r : reports) {
        std::string acc = format_percent(r.accuracy);
        std::string tokens = r.applicable > 0 ? format_fixed(r.mean_tokens, 1) : "*";
        std::string problems =
            std::to_string(r.applicable) + "/" + std::to_string(r.problems);
        out << std::left << std::setw(18) << to_string(r.strategy) << std::right
            << std::setw(10) << acc << std::setw(14) << tokens << std::setw(12) << problems
            << '\n';
    }
    return out.str();
}

std::string strategy_summary_csv(const std::vector<StrategyReport>& reports) {
    std::string out = "strategy,accuracy,mean_tokens,problems,applicable\n";
    for (const StrategyReport& r : reports) {
        out += to_string(r.strategy);
        out += ',';
        out += std::isnan(r.accuracy) ? "" : format_double(r.accuracy);
        out += ',';
        out += r.applicable > 0 ? format_double(r.mean_tokens) : "";
        out += ',';
        out += std::to_string(r.problems);
        out += ',';
        out += std::to_string(r.applicable);
        out += '\n';
    }
    return out;
}

std::string strategy_per_problem_csv(const std::vector<StrategyReport>& reports) {
    std::string out = "strategy,problem_id,correct,tokens,note\n";
    for (const StrategyReport& r : reports) {
        for (const PerProblemRow& row : r.per_problem) {
            out += to_string(r.strategy);
            out += ',';
            out += csv_escape(row.problem_id);
            out += ',';
            if (row.correct) out += *row.correct ? "1" : "0";
            out += ',';
            out += std::to_string(row.tokens);
            out += ',';
            out += csv_escape(row.note);
            out += '\n';
        }
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoError, "cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) raise(Errc::IoError, "short write: " + path);
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace shortstop
