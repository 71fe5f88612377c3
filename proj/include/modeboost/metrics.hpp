#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace modeboost {

/// Both throw LengthMismatch for differing lengths and EmptyInput for none.
double rmse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);

/// counts[truth][pred]. Throws LabelOutOfRange.
std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> labels, std::span<const int> preds,
                                                       int num_classes);

double accuracy(std::span<const int> labels, std::span<const int> preds);

enum class F1Average { Macro, Weighted };

/// Per-class F1 is 0 when precision + recall has a zero denominator. Weighted
/// averaging uses true-class support.
double f1_score(std::span<const int> labels, std::span<const int> preds, int num_classes = 3,
                F1Average average = F1Average::Macro);

inline double macro_f1(std::span<const int> labels, std::span<const int> preds, int num_classes = 3) {
    return f1_score(labels, preds, num_classes, F1Average::Macro);
}

F1Average parse_f1_average(std::string_view s);

}  // namespace modeboost
