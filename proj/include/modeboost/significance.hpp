#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace modeboost {

enum class TestMethod { PairedT, Wilcoxon };

std::string_view to_string(TestMethod m);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
    TestMethod method = TestMethod::PairedT;
};

/// P(T <= t) for Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// Two-sided paired t-test on d = a - b with n - 1 degrees of freedom. All-zero
/// differences give t = 0, p = 1; constant nonzero differences give |t| = inf,
/// p = 0. Throws LengthMismatch, TooFewSamples (n < 2).
TestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Average ranks of |d| for the nonzero differences (ties share ranks).
std::vector<double> signed_rank_magnitudes(std::span<const double> nonzero_diffs);

/// Exact two-sided p-value of W = min(W+, W-) under the sign-flip null, for
/// ranks that may contain halves from ties.
double wilcoxon_exact_p(std::span<const double> ranks, double w_plus);

/// Normal approximation with tie-corrected variance and continuity correction.
double wilcoxon_normal_p(std::span<const double> ranks, double w_plus);

/// Wilcoxon signed-rank test after dropping zero differences; exact p for
/// n <= exact_limit, normal approximation above. Throws AllZeroDifferences.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, std::size_t exact_limit = 25);

}  // namespace modeboost
