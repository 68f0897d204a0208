#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mammo {

enum class Alternative { TwoSided, Greater, Less };
enum class WilcoxonMethod { Exact, NormalApprox };

const char* toString(Alternative alt);
const char* toString(WilcoxonMethod m);
/// Accepts "two-sided", "greater", "less".
Alternative parseAlternative(const std::string& text);

struct PairedSample {
    std::vector<double> a;
    std::vector<double> b;
};

struct WilcoxonResult {
    double wStatistic = 0.0;  ///< sum of ranks of positive differences a - b
    double pValue = 1.0;
    std::size_t nEffective = 0;  ///< pairs with a nonzero difference
    WilcoxonMethod method = WilcoxonMethod::Exact;
    Alternative alternative = Alternative::TwoSided;
};

/// Largest nEffective handled by the exact null distribution.
inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// Mid-ranks (1-based) of `values`; ties share the average rank.
std::vector<double> midRanks(std::span<const double> values);

/// Wilcoxon signed-rank test on d = a - b. Zero differences are dropped, |d|
/// is mid-ranked, W is the positive rank sum. For nEffective <= 20 the p-value
/// is exact: the null distribution of W over all 2^n sign assignments (with
/// the observed ranks, ties included). Larger samples use the normal
/// approximation with tie-corrected variance and continuity correction.
/// "greater" tests a > b. Two-sided p = min(1, 2 min(p_greater, p_less)).
WilcoxonResult wilcoxonSignedRank(const PairedSample& sample, Alternative alternative = Alternative::TwoSided);

}  // namespace mammo
