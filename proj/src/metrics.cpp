#include "modeboost/metrics.hpp"

#include "modeboost/error.hpp"

#include <cmath>
#include <string>

namespace modeboost {

namespace {

template <typename T, typename U>
void check_lengths(std::span<const T> a, std::span<const U> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    "lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    if (a.empty()) throw Error(ErrorCode::EmptyInput, "metric over zero samples");
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const long double e = static_cast<long double>(y[i]) - yhat[i];
        sum += e * e;
    }
    return static_cast<double>(std::sqrt(sum / y.size()));
}

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) sum += std::fabs(static_cast<long double>(y[i]) - yhat[i]);
    return static_cast<double>(sum / y.size());
}

std::vector<std::vector<std::size_t>> confusion_matrix(std::span<const int> labels, std::span<const int> preds,
                                                       int num_classes) {
    check_lengths(labels, preds);
    std::vector<std::vector<std::size_t>> cm(num_classes, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes || preds[i] < 0 || preds[i] >= num_classes) {
            throw Error(ErrorCode::LabelOutOfRange, "label outside 0.." + std::to_string(num_classes - 1));
        }
        ++cm[labels[i]][preds[i]];
    }
    return cm;
}

double accuracy(std::span<const int> labels, std::span<const int> preds) {
    check_lengths(labels, preds);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += labels[i] == preds[i];
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double f1_score(std::span<const int> labels, std::span<const int> preds, int num_classes, F1Average average) {
    const auto cm = confusion_matrix(labels, preds, num_classes);
    double total = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        std::size_t tp = cm[k][k], fp = 0, fn = 0;
        for (int j = 0; j < num_classes; ++j) {
            if (j == k) continue;
            fp += cm[j][k];
            fn += cm[k][j];
        }
        const double denom = 2.0 * tp + fp + fn;
        const double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
        if (average == F1Average::Macro) {
            total += f1 / num_classes;
        } else {
            total += f1 * static_cast<double>(tp + fn) / static_cast<double>(labels.size());
        }
    }
    return total;
}

F1Average parse_f1_average(std::string_view s) {
    if (s == "macro") return F1Average::Macro;
    if (s == "weighted") return F1Average::Weighted;
    throw Error(ErrorCode::InvalidConfig, "unknown F1 averaging '" + std::string(s) + "'");
}

}  // namespace modeboost
