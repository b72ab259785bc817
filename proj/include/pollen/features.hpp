#pragma once

#include "pollen/data_core.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pollen {

inline constexpr std::size_t kFeatureCount = 30;
inline constexpr std::size_t kWindowLength = 14;
inline constexpr double kEwmaAlpha = 0.3;

/// Identifies the ordered statistic catalog below. Bump whenever the order
/// or a definition changes; serialized models record it.
inline constexpr std::string_view kCatalogVersion = "window-stats-v1";

/// Names of the 30 window statistics, in output order.
const std::array<std::string_view, kFeatureCount>& feature_names();

/// Per-series reference levels for the "count above reference" statistic.
using ReferenceThresholds = std::array<double, kSeriesCount>;

/// delta_c for pollen, the mean of each covariate over the given years.
ReferenceThresholds reference_thresholds(const Dataset& data, double delta_c, std::span<const int> years);

/// Computes the catalog statistics of one 14-sample window.
std::array<double, kFeatureCount> window_features(std::span<const double> window, double reference);

/// Tensor of trailing-window statistics: row r aggregates records
/// [r, r + 13] and is dated at record r + 13.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<Date> day_index, std::vector<double> values);

    std::size_t rows() const { return day_index_.size(); }
    const std::vector<Date>& day_index() const { return day_index_; }

    /// Indexed as (day, feature, series).
    double at(std::size_t row, std::size_t feature, std::size_t series) const {
        return values_[(row * kSeriesCount + series) * kFeatureCount + feature];
    }

    /// Row index for a calendar date, if that date has a full window.
    std::optional<std::size_t> row_of(Date date) const;

    /// Series-major slice for one day: series 0 features 0..29, series 1 ...
    std::span<const double> row_block(std::size_t row) const {
        return {values_.data() + row * kSeriesCount * kFeatureCount, kSeriesCount * kFeatureCount};
    }

private:
    std::vector<Date> day_index_;
    std::vector<double> values_;
};

FeatureMatrix build_feature_matrix(const Dataset& data, const ReferenceThresholds& references,
                                   std::size_t window_len = kWindowLength);

inline constexpr std::size_t kFlatWidth = kSeriesCount * kFeatureCount;

/// 360 statistics, plus the day of year as entry 361 when include_doy.
std::vector<double> flatten_row(const FeatureMatrix& m, std::size_t row, bool include_doy = true);

/// Column headers matching flatten_row: `<series>__<feature>` (+ `day_of_year`).
std::vector<std::string> flat_feature_names(bool include_doy = true);

void export_feature_csv(const FeatureMatrix& m, std::ostream& out, bool include_doy = true);

} // namespace pollen
