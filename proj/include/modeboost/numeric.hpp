#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace modeboost {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of a sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Cut points splitting a sample into `levels` equally populated intervals.
inline std::vector<double> equal_frequency_cuts(std::span<const double> sample, int levels) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (int i = 1; i < levels; ++i) cuts.push_back(quantile_sorted(sorted, static_cast<double>(i) / levels));
    return cuts;
}

/// Index of the interval containing `value`: the number of cuts <= value.
inline int level_of(std::span<const double> cuts, double value) {
    return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

}  // namespace modeboost
