#include "modeboost/significance.hpp"

#include "modeboost/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace modeboost {

std::string_view to_string(TestMethod m) { return m == TestMethod::PairedT ? "paired_t" : "wilcoxon"; }

double student_t_cdf(double t, double df) {
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw Error(ErrorCode::TooFewSamples, "paired t-test needs at least 2 pairs");
    TestResult res{0.0, 1.0, n, TestMethod::PairedT};

    long double mean = 0.0L;
    for (std::size_t i = 0; i < n; ++i) mean += static_cast<long double>(a[i]) - b[i];
    mean /= n;
    long double ss = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        const long double d = static_cast<long double>(a[i]) - b[i] - mean;
        ss += d * d;
    }
    const long double sd = std::sqrt(ss / (n - 1));
    if (sd == 0.0L) {
        if (mean == 0.0L) return res;
        res.statistic = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        return res;
    }
    res.statistic = static_cast<double>(mean / (sd / std::sqrt(static_cast<long double>(n))));
    const boost::math::students_t_distribution<double> dist(static_cast<double>(n - 1));
    res.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(res.statistic))));
    return res;
}

std::vector<double> signed_rank_magnitudes(std::span<const double> d) {
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double wilcoxon_exact_p(std::span<const double> ranks, double w_plus) {
    // Doubled ranks are integers even with tied halves.
    std::vector<std::size_t> doubled;
    std::size_t total = 0;
    for (double r : ranks) {
        doubled.push_back(static_cast<std::size_t>(std::llround(2.0 * r)));
        total += doubled.back();
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    std::size_t reach = 0;
    for (std::size_t r : doubled) {
        reach += r;
        for (std::size_t s = reach; s >= r; --s) {
            ways[s] += ways[s - r];
            if (s == r) break;
        }
    }
    const double w = std::min(w_plus, static_cast<double>(total) / 2.0 - w_plus);
    const auto limit = static_cast<std::size_t>(std::llround(2.0 * w));
    double tail = 0.0;
    for (std::size_t s = 0; s <= limit && s <= total; ++s) tail += ways[s];
    return std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(ranks.size())));
}

double wilcoxon_normal_p(std::span<const double> ranks, double w_plus) {
    const double n = static_cast<double>(ranks.size());
    std::vector<double> sorted(ranks.begin(), ranks.end());
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double mean = n * (n + 1.0) / 4.0;
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    const double total = n * (n + 1.0) / 2.0;
    const double w = std::min(w_plus, total - w_plus);
    const double z = std::min(0.0, w - mean + 0.5) / std::sqrt(var);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::normal_distribution<double>(), z));
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b, std::size_t exact_limit) {
    if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) d.push_back(diff);
    }
    if (d.empty()) throw Error(ErrorCode::AllZeroDifferences, "all paired differences are zero");
    const auto ranks = signed_rank_magnitudes(d);
    double w_plus = 0.0, total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        total += ranks[i];
        if (d[i] > 0) w_plus += ranks[i];
    }
    TestResult res;
    res.method = TestMethod::Wilcoxon;
    res.n = d.size();
    res.statistic = std::min(w_plus, total - w_plus);
    res.p_value = d.size() <= exact_limit ? wilcoxon_exact_p(ranks, w_plus) : wilcoxon_normal_p(ranks, w_plus);
    return res;
}

}  // namespace modeboost
