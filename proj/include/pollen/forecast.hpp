#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

namespace pollen {

enum class Boundary { Start, End };

std::string_view to_string(Boundary b);
Boundary parse_boundary(std::string_view text);

/// One Stage-1/Stage-2 prediction made on day-of-year `z`: the predicted
/// countdown to the boundary and its predicted standard deviation.
struct PredictionPoint {
    int z = 0;
    double y_hat = 0.0;
    double u_hat = 0.0;

    friend bool operator==(const PredictionPoint&, const PredictionPoint&) = default;
};

/// Predictions at consecutive days of one year.
struct ForecastSeries {
    int year = 0;
    Boundary boundary = Boundary::Start;
    std::vector<PredictionPoint> points;

    friend bool operator==(const ForecastSeries&, const ForecastSeries&) = default;
};

/// Throws unless z increases by exactly one day from point to point.
void validate_series(const ForecastSeries& series);

/// CSV with header `z,y_hat,u_hat`.
void export_series_csv(const ForecastSeries& series, std::ostream& out);

} // namespace pollen
