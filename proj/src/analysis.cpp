#include "shortstop/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace shortstop {

void MarkerLexicon::validate() const {
    if (phrases.empty()) raise(Errc::ConfigError, "marker lexicon is empty");
    std::unordered_set<std::string> seen;
    for (const std::string& p : phrases) {
        if (p.empty()) raise(Errc::ConfigError, "marker lexicon has an empty phrase");
        for (char c : p)
            if (std::isupper(static_cast<unsigned char>(c)))
                raise(Errc::ConfigError, "marker phrase not lowercase: " + p);
        if (!seen.insert(p).second)
            raise(Errc::ConfigError, "duplicate marker phrase: " + p);
    }
}

const MarkerLexicon& MarkerLexicon::default_lexicon() {
    static const MarkerLexicon lexicon{{
        "maybe", "alternatively", "but", "wait", "perhaps",
        "possibly", "probably", "likely", "might", "may", "could", "would",
        "seems", "appears", "looks like", "suggests", "indicates",
        "i think", "i believe", "i guess", "i suppose", "i assume",
        "not sure", "unclear", "confusing", "complicated", "difficult",
        "however", "although", "though", "unless", "except",
        "on the other hand", "actually", "in fact", "rather", "hmm",
        "hold on", "let me check", "let me reconsider",
        "that's not right", "i made an error", "correction", "mistake", "check again",
        "if", "assuming", "suppose", "what if", "in case", "provided that",
    }};
    return lexicon;
}

namespace {

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '\'';
}

// Lowercased word tokens; a token is a maximal run of [a-z0-9'] with outer
// apostrophes stripped (so quoted 'words' match but "that's" keeps its own).
std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        size_t b = 0;
        size_t e = current.size();
        while (b < e && current[b] == '\'') ++b;
        while (e > b && current[e - 1] == '\'') --e;
        if (e > b) tokens.push_back(current.substr(b, e - b));
        current.clear();
    };
    for (char c : text) {
        if (is_word_char(c)) {
            current.push_back(
                static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

// Phrases grouped by first word, longest (in words) first.
struct CompiledLexicon {
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> by_first;
};

CompiledLexicon compile(const MarkerLexicon& lexicon) {
    lexicon.validate();
    CompiledLexicon out;
    for (const std::string& phrase : lexicon.phrases) {
        std::vector<std::string> words = tokenize_words(phrase);
        if (words.empty()) raise(Errc::ConfigError, "marker phrase has no words: " + phrase);
        out.by_first[words.front()].push_back(std::move(words));
    }
    for (auto& [first, phrases] : out.by_first) {
        std::sort(phrases.begin(), phrases.end(),
                  [](const auto& a, const auto& b) { return a.size() > b.size(); });
    }
    return out;
}

} // namespace

int64_t count_markers(std::string_view text, const MarkerLexicon& lexicon) {
    CompiledLexicon compiled = compile(lexicon);
    std::vector<std::string> tokens = tokenize_words(text);
    int64_t count = 0;
    size_t i = 0;
    while (i < tokens.size()) {
        auto it = compiled.by_first.find(tokens[i]);
        size_t advance = 1;
        if (it != compiled.by_first.end()) {
            for (const auto& phrase : it->second) {
                if (i + phrase.size() > tokens.size()) continue;
                bool match = true;
                for (size_t k = 1; k < phrase.size(); ++k) {
                    if (tokens[i + k] != phrase[k]) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    ++count;
                    advance = phrase.size();
                    break; // longest first
                }
            }
        }
        i += advance;
    }
    return count;
}

double uncertainty_density(std::string_view text, const MarkerLexicon& lexicon) {
    int64_t words = word_count(text);
    int64_t markers = count_markers(text, lexicon);
    return 100.0 * static_cast<double>(markers) /
           static_cast<double>(std::max<int64_t>(words, 1));
}

PairedUncertainty paired_longer_more_uncertain(const std::vector<ProblemRun>& runs,
                                               const std::vector<Problem>& problems,
                                               const RunnerConfig& runner,
                                               const MarkerLexicon& lexicon) {
    GradeMatrix grades = grade_all(runs, problems, runner);
    PairedUncertainty out;
    int64_t hits = 0;
    for (size_t r = 0; r < runs.size(); ++r) {
        const ProblemRun& run = runs[r];
        std::vector<size_t> correct_idx;
        for (size_t a = 0; a < run.attempts.size(); ++a)
            if (grades[r][a].value_or(false)) correct_idx.push_back(a);
        if (correct_idx.size() < 2) continue;
        std::vector<double> density(run.attempts.size(), 0.0);
        for (size_t a : correct_idx)
            density[a] = uncertainty_density(run.attempts[a].cot_text, lexicon);
        for (size_t x = 0; x < correct_idx.size(); ++x) {
            for (size_t y = x + 1; y < correct_idx.size(); ++y) {
                const Attempt& ax = run.attempts[correct_idx[x]];
                const Attempt& ay = run.attempts[correct_idx[y]];
                if (ax.gen_tokens == ay.gen_tokens) continue;
                const bool x_longer = ax.gen_tokens > ay.gen_tokens;
                double longer_d = x_longer ? density[correct_idx[x]] : density[correct_idx[y]];
                double shorter_d = x_longer ? density[correct_idx[y]] : density[correct_idx[x]];
                ++out.pairs;
                if (longer_d > shorter_d) ++hits;
            }
        }
    }
    if (out.pairs == 0) raise(Errc::NoEligiblePairs, "no problem has two correct attempts of distinct length");
    out.fraction = static_cast<double>(hits) / static_cast<double>(out.pairs);
    return out;
}

int Histogram::bin_of(int64_t x) const {
    if (hi == lo) return 0;
    auto idx = ((x - lo) * bins) / (hi - lo);
    if (idx >= bins) idx = bins - 1;
    if (idx < 0) idx = 0;
    return static_cast<int>(idx);
}

int Histogram::mode_bin() const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(counts.size()); ++i)
        if (counts[i] > counts[best]) best = i;
    return best;
}

int64_t Histogram::midpoint(int bin) const {
    // floor of lo + (bin + 0.5) * (hi - lo) / bins, in exact integer arithmetic
    return (2 * lo * bins + (2 * static_cast<int64_t>(bin) + 1) * (hi - lo)) / (2 * bins);
}

double Histogram::bin_width() const {
    return static_cast<double>(hi - lo) / static_cast<double>(bins);
}

Histogram build_histogram(const std::vector<int64_t>& values, int bins, int64_t lo,
                          int64_t hi) {
    if (values.empty()) raise(Errc::EmptyInput, "histogram over no values");
    if (bins < 1) raise(Errc::ConfigError, "bins must be >= 1");
    if (hi < lo) raise(Errc::ConfigError, "histogram range is inverted");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bins = bins;
    h.counts.assign(bins, 0);
    for (int64_t v : values) ++h.counts[h.bin_of(v)];
    return h;
}

int64_t critical_point(const std::vector<int64_t>& lengths, int bins) {
    if (lengths.empty()) raise(Errc::EmptyInput, "critical_point over no lengths");
    auto [lo_it, hi_it] = std::minmax_element(lengths.begin(), lengths.end());
    if (*lo_it == *hi_it) return *lo_it;
    Histogram h = build_histogram(lengths, bins, *lo_it, *hi_it);
    return h.midpoint(h.mode_bin());
}

std::vector<TokenDensityPoint> density_points(const std::vector<ProblemRun>& runs,
                                              const MarkerLexicon& lexicon) {
    std::vector<TokenDensityPoint> points;
    for (const ProblemRun& run : runs)
        for (const Attempt& a : run.attempts)
            if (a.finish == Finish::completed)
                points.push_back({a.gen_tokens, uncertainty_density(a.cot_text, lexicon)});
    return points;
}

namespace {

struct SideFit {
    int64_t n = 0;
    std::optional<double> slope, intercept, r;
    bool degenerate = false;
};

SideFit ols(const std::vector<const TokenDensityPoint*>& pts) {
    SideFit fit;
    fit.n = static_cast<int64_t>(pts.size());
    std::unordered_set<int64_t> distinct;
    for (auto* p : pts) distinct.insert(p->tokens);
    if (distinct.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    double n = static_cast<double>(pts.size());
    double mean_x = 0;
    double mean_y = 0;
    for (auto* p : pts) {
        mean_x += static_cast<double>(p->tokens);
        mean_y += p->density;
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0;
    double sxy = 0;
    double syy = 0;
    for (auto* p : pts) {
        double dx = static_cast<double>(p->tokens) - mean_x;
        double dy = p->density - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - *fit.slope * mean_x;
    // horizontal data has no defined correlation; report 0 rather than 0/0
    fit.r = syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    return fit;
}

} // namespace

TrendBreakFit trend_break(const std::vector<TokenDensityPoint>& points, int64_t split) {
    std::vector<const TokenDensityPoint*> before;
    std::vector<const TokenDensityPoint*> after;
    for (const auto& p : points)
        (p.tokens <= split ? before : after).push_back(&p);

    TrendBreakFit fit;
    fit.split_tokens = split;
    SideFit b = ols(before);
    fit.n_before = b.n;
    fit.slope_before = b.slope;
    fit.intercept_before = b.intercept;
    fit.r_before = b.r;
    fit.degenerate_before = b.degenerate;
    SideFit a = ols(after);
    fit.n_after = a.n;
    fit.slope_after = a.slope;
    fit.intercept_after = a.intercept;
    fit.r_after = a.r;
    fit.degenerate_after = a.degenerate;
    return fit;
}

const char* to_string(LengthSelection s) {
    switch (s) {
        case LengthSelection::all: return "all";
        case LengthSelection::shortest_per_problem: return "shortest_per_problem";
        case LengthSelection::longest_per_problem: return "longest_per_problem";
    }
    return "all";
}

std::vector<int64_t> selected_lengths(const std::vector<ProblemRun>& runs,
                                      LengthSelection which) {
    std::vector<int64_t> out;
    for (const ProblemRun& run : runs) {
        std::optional<int64_t> lo, hi;
        for (const Attempt& a : run.attempts) {
            if (a.finish != Finish::completed) continue;
            if (which == LengthSelection::all) {
                out.push_back(a.gen_tokens);
                continue;
            }
            if (!lo || a.gen_tokens < *lo) lo = a.gen_tokens;
            if (!hi || a.gen_tokens > *hi) hi = a.gen_tokens;
        }
        if (which == LengthSelection::shortest_per_problem && lo) out.push_back(*lo);
        if (which == LengthSelection::longest_per_problem && hi) out.push_back(*hi);
    }
    if (out.empty()) raise(Errc::EmptyInput, "no completed attempts");
    return out;
}

Histogram token_distribution(const std::vector<ProblemRun>& runs, LengthSelection which,
                             int bins) {
    std::vector<int64_t> all = selected_lengths(runs, LengthSelection::all);
    auto [lo_it, hi_it] = std::minmax_element(all.begin(), all.end());
    std::vector<int64_t> values =
        which == LengthSelection::all ? std::move(all) : selected_lengths(runs, which);
    return build_histogram(values, bins, *lo_it, *hi_it);
}

double sample_skewness(const std::vector<int64_t>& values) {
    if (values.empty()) raise(Errc::EmptyInput, "skewness over no values");
    double n = static_cast<double>(values.size());
    double mean = 0;
    for (int64_t v : values) mean += static_cast<double>(v);
    mean /= n;
    double m2 = 0;
    double m3 = 0;
    for (int64_t v : values) {
        double d = static_cast<double>(v) - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.d() != v.d())
        raise(Errc::DimensionMismatch,
              std::to_string(u.d()) + " vs " + std::to_string(v.d()));
    double uu = 0;
    double vv = 0;
    double dot = 0;
    for (int i = 0; i < u.d(); ++i) {
        uu += u.values[i] * u.values[i];
        vv += v.values[i] * v.values[i];
        dot += u.values[i] * v.values[i];
    }
    if (uu == 0 || vv == 0) raise(Errc::ZeroVector, "cosine distance of a zero vector");
    // Cauchy-Schwarz equality means the vectors are proportional; decide the
    // degenerate case exactly instead of through sqrt rounding, so identical
    // chunks measure exactly 0.
    if (dot * dot >= uu * vv) return dot > 0 ? 0.0 : 2.0;
    double d = 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(d, 0.0, 2.0);
}

DivergenceCurve chunk_divergence(const std::vector<ProblemRun>& runs, Embedder& embedder,
                                 int chunk_words) {
    if (chunk_words < 1) raise(Errc::ConfigError, "chunk_words must be >= 1");
    DivergenceCurve curve;
    std::vector<double> sums;
    std::vector<int64_t> counts;

    for (const ProblemRun& run : runs) {
        // Full chunks per completed attempt, in attempt order.
        std::vector<std::vector<std::string>> chunk_texts;
        for (const Attempt& a : run.attempts) {
            if (a.finish != Finish::completed) continue;
            std::vector<std::string_view> words = split_words(a.cot_text);
            size_t full = words.size() / static_cast<size_t>(chunk_words);
            std::vector<std::string> chunks;
            chunks.reserve(full);
            for (size_t k = 0; k < full; ++k) {
                std::string text;
                for (size_t w = k * chunk_words; w < (k + 1) * chunk_words; ++w) {
                    if (!text.empty()) text.push_back(' ');
                    text.append(words[w]);
                }
                chunks.push_back(std::move(text));
            }
            chunk_texts.push_back(std::move(chunks));
        }
        if (chunk_texts.size() < 2) continue;

        // One embedding call per problem.
        std::vector<std::string> flat;
        for (const auto& chunks : chunk_texts)
            for (const auto& c : chunks) flat.push_back(c);
        if (flat.empty()) continue;
        std::vector<EmbeddingVector> embedded;
        try {
            embedded = embedder.embed_batch(flat);
        } catch (const Error&) {
            ++curve.problems_skipped;
            continue;
        }
        std::vector<std::vector<const EmbeddingVector*>> vecs;
        size_t cursor = 0;
        for (const auto& chunks : chunk_texts) {
            std::vector<const EmbeddingVector*> v;
            for (size_t k = 0; k < chunks.size(); ++k) v.push_back(&embedded[cursor++]);
            vecs.push_back(std::move(v));
        }

        for (size_t i = 0; i < vecs.size(); ++i) {
            for (size_t j = i + 1; j < vecs.size(); ++j) {
                size_t common = std::min(vecs[i].size(), vecs[j].size());
                if (common > sums.size()) {
                    sums.resize(common, 0.0);
                    counts.resize(common, 0);
                }
                for (size_t k = 0; k < common; ++k) {
                    sums[k] += cosine_distance(*vecs[i][k], *vecs[j][k]);
                    ++counts[k];
                }
            }
        }
    }

    for (size_t k = 0; k < sums.size(); ++k) {
        if (counts[k] == 0) break; // prefix property: later indices are empty too
        curve.points.push_back({sums[k] / static_cast<double>(counts[k]), counts[k]});
    }
    return curve;
}

SubsetMinSum subset_min_sum(const std::vector<int64_t>& lengths, int n) {
    SubsetMinSum out;
    int m = static_cast<int>(lengths.size());
    if (n < 1 || n > m) return out;
    // Sort ascending; the k-th smallest value is the minimum of exactly
    // C(m - 1 - k, n - 1) subsets (those drawing the rest from larger values).
    std::vector<int64_t> sorted = lengths;
    std::sort(sorted.begin(), sorted.end());
    auto choose = [](int a, int b) -> int64_t {
        if (b < 0 || b > a) return 0;
        int64_t r = 1;
        for (int i = 1; i <= b; ++i) r = r * (a - b + i) / i;
        return r;
    };
    for (int k = 0; k + n <= m; ++k)
        out.sum_min += sorted[k] * choose(m - 1 - k, n - 1);
    out.subsets = choose(m, n);
    return out;
}

namespace {

// All size-n index subsets of [0, m).
void for_each_subset(int m, int n, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int i = n - 1;
        while (i >= 0 && idx[i] == m - n + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int k = i + 1; k < n; ++k) idx[k] = idx[k - 1] + 1;
    }
}

} // namespace

std::vector<ParetoPoint> pareto_curve(const std::vector<ProblemRun>& runs,
                                      const std::vector<Problem>& problems,
                                      const RunnerConfig& runner,
                                      const std::vector<int>& n_values,
                                      const std::vector<Strategy>& strategies) {
    if (runs.empty()) raise(Errc::EmptyInput, "empty trace");
    for (const ProblemRun& run : runs)
        if (run.policy != Policy::run_all)
            raise(Errc::PolicyMismatch, "pareto enumeration needs run_all traces");
    GradeMatrix grades = grade_all(runs, problems, runner);
    auto idx = problem_index(problems);

    std::vector<ParetoPoint> out;
    for (Strategy strategy : strategies) {
        if (strategy == Strategy::individual) continue; // equals shortest at n = 1
        for (int n : n_values) {
            if (strategy == Strategy::self_consistency && n < 3) continue;
            double acc_sum = 0;
            double tok_sum = 0;
            int64_t applicable = 0;

            for (size_t r = 0; r < runs.size(); ++r) {
                const ProblemRun& run = runs[r];
                const Problem& problem = *idx.at(run.problem_id);
                if (strategy == Strategy::self_consistency &&
                    problem.benchmark != Benchmark::math)
                    continue;
                std::vector<int> completed;
                for (size_t a = 0; a < run.attempts.size(); ++a)
                    if (run.attempts[a].finish == Finish::completed)
                        completed.push_back(static_cast<int>(a));
                int m = static_cast<int>(completed.size());
                if (n > m) continue;

                int64_t correct_subsets = 0;
                int64_t token_total = 0;
                int64_t subsets = 0;
                for_each_subset(m, n, [&](const std::vector<int>& sel) {
                    ++subsets;
                    // Attempt indices of this subset, in index order.
                    if (strategy == Strategy::shortest || strategy == Strategy::longest) {
                        int best = completed[sel[0]];
                        for (int s : sel) {
                            const Attempt& cand = run.attempts[completed[s]];
                            const Attempt& cur = run.attempts[best];
                            bool better = strategy == Strategy::shortest
                                              ? cand.gen_tokens < cur.gen_tokens
                                              : cand.gen_tokens > cur.gen_tokens;
                            if (better) best = completed[s];
                        }
                        if (grades[r][best].value_or(false)) ++correct_subsets;
                        if (strategy == Strategy::shortest) {
                            token_total += static_cast<int64_t>(n) *
                                           run.attempts[best].gen_tokens;
                        } else {
                            for (int s : sel)
                                token_total += run.attempts[completed[s]].gen_tokens;
                        }
                    } else { // self_consistency over the subset
                        std::map<int, int> votes;
                        for (int s : sel) {
                            ExtractedAnswer ans =
                                extract_boxed(run.attempts[completed[s]].answer_text);
                            if (ans.kind == AnswerKind::numeric) ++votes[*ans.numeric_value];
                        }
                        if (!votes.empty()) {
                            int top = 0;
                            for (const auto& [value, count] : votes)
                                top = std::max(top, count);
                            // tie: the group containing the subset's shortest attempt
                            int winner = -1;
                            int64_t best_len = 0;
                            int best_idx = 0;
                            for (int s : sel) {
                                const Attempt& a = run.attempts[completed[s]];
                                ExtractedAnswer ans = extract_boxed(a.answer_text);
                                if (ans.kind != AnswerKind::numeric ||
                                    votes[*ans.numeric_value] != top)
                                    continue;
                                if (winner < 0 || a.gen_tokens < best_len ||
                                    (a.gen_tokens == best_len && completed[s] < best_idx)) {
                                    winner = *ans.numeric_value;
                                    best_len = a.gen_tokens;
                                    best_idx = completed[s];
                                }
                            }
                            if (problem.gold_answer && winner == *problem.gold_answer)
                                ++correct_subsets;
                        }
                        for (int s : sel)
                            token_total += run.attempts[completed[s]].gen_tokens;
                    }
                });
                if (subsets > 0) {
                    ++applicable;
                    acc_sum += static_cast<double>(correct_subsets) /
                               static_cast<double>(subsets);
                    tok_sum += static_cast<double>(token_total) /
                               static_cast<double>(subsets);
                }
            }
            if (applicable == 0) continue;
            ParetoPoint p;
            p.strategy = strategy;
            p.n = n;
            p.accuracy = acc_sum / static_cast<double>(applicable);
            p.mean_tokens_per_problem = tok_sum / static_cast<double>(applicable);
            out.push_back(p);
        }
    }
    return out;
}

} // namespace shortstop
