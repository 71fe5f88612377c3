#pragma once

#include "modeboost/binary_io.hpp"
#include "modeboost/features.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost {

using features::FeatureMatrix;

enum class ScaleMode : std::uint8_t { MinMax = 0, ZScore = 1 };

std::string_view to_string(ScaleMode m);
ScaleMode parse_scale_mode(std::string_view s);

/// Per-feature affine map (x - offset) / spread pooled over every entity's
/// training rows. Categorical columns pass through; constant columns map to 0.
class Scaler {
public:
    struct Column {
        bool categorical = false;
        double offset = 0.0;
        double spread = 0.0;
    };

    Scaler() = default;
    Scaler(ScaleMode mode, std::vector<std::string> names, std::vector<Column> columns);

    ScaleMode mode() const { return mode_; }
    const std::vector<std::string>& feature_names() const { return names_; }
    const std::vector<Column>& columns() const { return columns_; }
    bool empty() const { return names_.empty(); }

    double transform_value(std::size_t feature, double x) const;
    double inverse_value(std::size_t feature, double y) const;

    /// In place over one row laid out in feature_names() order.
    void transform_row(std::span<double> row) const;

    /// Throws FeatureMismatch on differing names, AlreadyTransformed when the
    /// matrix is flagged as scaled.
    FeatureMatrix transform(const FeatureMatrix& m) const;
    FeatureMatrix inverse_transform(const FeatureMatrix& m) const;

    void write(binary::Writer& w) const;
    static Scaler read(binary::Reader& r);
    std::string bytes() const;

private:
    void check_names(const FeatureMatrix& m) const;

    ScaleMode mode_ = ScaleMode::MinMax;
    std::vector<std::string> names_;
    std::vector<Column> columns_;
};

/// Statistics over rows with step < train_end. Throws EmptyTraining.
Scaler fit_scaler(const FeatureMatrix& m, const SplitIndices& split, ScaleMode mode = ScaleMode::MinMax);

/// Dense codes by sorted name. Throws DuplicateName.
std::map<std::string, std::uint32_t> encode_entities(std::span<const std::string> names);

}  // namespace modeboost
