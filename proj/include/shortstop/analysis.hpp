#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shortstop/client.hpp"
#include "shortstop/domain.hpp"
#include "shortstop/selection.hpp"

namespace shortstop {

// Hedging / self-correction phrases, lowercase, multi-word entries included.
struct MarkerLexicon {
    std::vector<std::string> phrases;
    void validate() const; // nonempty, lowercase, no duplicates
    static const MarkerLexicon& default_lexicon();
};

// Case-insensitive scan; phrases match whole words only, and at each position
// the longest matching phrase wins and the scan resumes after it
// (non-overlapping). "butter" never matches "but".
int64_t count_markers(std::string_view text, const MarkerLexicon& lexicon);

// Markers per 100 words: 100 * count_markers / max(word_count, 1).
double uncertainty_density(std::string_view text, const MarkerLexicon& lexicon);

struct PairedUncertainty {
    double fraction = 0.0;
    int64_t pairs = 0;
};

// Over every problem and every unordered pair of correct attempts with
// distinct gen_tokens: how often does the longer attempt have strictly higher
// uncertainty density? Pairs with equal density count only in the
// denominator. Throws NoEligiblePairs.
PairedUncertainty paired_longer_more_uncertain(const std::vector<ProblemRun>& runs,
                                               const std::vector<Problem>& problems,
                                               const RunnerConfig& runner,
                                               const MarkerLexicon& lexicon);

// Equal-width histogram with exact integer bin edges and midpoints, so mode
// recovery cannot drift from a brute-force oracle through float rounding.
struct Histogram {
    int64_t lo = 0;
    int64_t hi = 0;
    int bins = 1;
    std::vector<int64_t> counts;

    int bin_of(int64_t x) const;      // clamped to the last bin at x == hi
    int mode_bin() const;             // lowest index on ties
    int64_t midpoint(int bin) const;  // floor of the bin's real midpoint
    double bin_width() const;
};

Histogram build_histogram(const std::vector<int64_t>& values, int bins, int64_t lo, int64_t hi);

// Mode of the token-usage distribution: midpoint (rounded down) of the
// maximal-count bin of an equal-width histogram over [min, max]; degenerate
// min == max returns that value. Throws EmptyInput.
int64_t critical_point(const std::vector<int64_t>& lengths, int bins = 40);

struct TokenDensityPoint {
    int64_t tokens = 0;
    double density = 0.0;
};

// One (gen_tokens, uncertainty_density) point per completed attempt.
std::vector<TokenDensityPoint> density_points(const std::vector<ProblemRun>& runs,
                                              const MarkerLexicon& lexicon);

struct TrendBreakFit {
    int64_t split_tokens = 0;
    std::optional<double> slope_before, intercept_before, r_before;
    std::optional<double> slope_after, intercept_after, r_after;
    int64_t n_before = 0;
    int64_t n_after = 0;
    bool degenerate_before = false; // side had < 2 distinct x values
    bool degenerate_after = false;
};

// Separate ordinary-least-squares fits for points with tokens <= split and
// tokens > split. A side without 2 distinct x values is reported degenerate
// rather than fitted.
TrendBreakFit trend_break(const std::vector<TokenDensityPoint>& points, int64_t split);

enum class LengthSelection { all, shortest_per_problem, longest_per_problem };

const char* to_string(LengthSelection s);

// Completed-attempt lengths under the selection; shortest/longest take the
// per-problem extreme. Throws EmptyInput.
std::vector<int64_t> selected_lengths(const std::vector<ProblemRun>& runs,
                                      LengthSelection which);

// Histogram of the selected per-problem length statistic. All selections bin
// over the run set's overall completed-attempt range, so the three histograms
// share an axis and their modes are comparable bin-for-bin (they are overlays
// of one distribution's selections, not unrelated data sets).
Histogram token_distribution(const std::vector<ProblemRun>& runs, LengthSelection which,
                             int bins);

// Adjusted-free sample skewness m3 / m2^(3/2); 0 when all values are equal.
double sample_skewness(const std::vector<int64_t>& values);

// 1 - <u,v>/(|u||v|), in [0, 2]. Exactly 0 for identical vectors (the
// proportional case is decided by Cauchy-Schwarz equality, not rounding).
// Throws DimensionMismatch / ZeroVector.
double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v);

struct DivergencePoint {
    double mean_cosine_distance = 0.0;
    int64_t pair_count = 0;
};

struct DivergenceCurve {
    std::vector<DivergencePoint> points; // index = chunk position, contiguous from 0
    int64_t problems_skipped = 0;        // embedding failures
};

// For every problem and unordered pair of completed attempts: both CoTs are
// split into consecutive full chunks of chunk_words words (trailing partial
// chunks dropped); chunks at the same index are compared by cosine distance
// of their embeddings and aggregated per index.
DivergenceCurve chunk_divergence(const std::vector<ProblemRun>& runs, Embedder& embedder,
                                 int chunk_words = 500);

struct ParetoPoint {
    Strategy strategy = Strategy::shortest;
    int n = 0;
    double accuracy = 0.0;
    double mean_tokens_per_problem = 0.0;
};

// Accuracy-versus-cost points from exact enumeration over all C(m, n)
// subsets of each problem's completed attempts. shortest charges the
// idealized early-stop cost n * (subset min length); self_consistency (math,
// n >= 3) and longest charge the subset's total length. Problems with fewer
// than n completed attempts are skipped for that n.
std::vector<ParetoPoint> pareto_curve(const std::vector<ProblemRun>& runs,
                                      const std::vector<Problem>& problems,
                                      const RunnerConfig& runner,
                                      const std::vector<int>& n_values,
                                      const std::vector<Strategy>& strategies);

// Exact enumeration: sum over all C(lengths.size(), n) subsets of the subset
// minimum, plus the subset count. Integer arithmetic throughout so
// monotonicity checks can compare exactly.
struct SubsetMinSum {
    int64_t sum_min = 0;
    int64_t subsets = 0;
};

SubsetMinSum subset_min_sum(const std::vector<int64_t>& lengths, int n);

} // namespace shortstop
