#pragma once

#include "pollen/data_core.hpp"
#include "pollen/forecast.hpp"
#include "pollen/gbm.hpp"
#include "pollen/pipeline.hpp"
#include "pollen/wls.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pollen {

struct Fold {
    std::vector<int> train_years;
    int test_year = 0;
};

/// Expanding-window folds: each of the last `n_test` years is tested on a
/// model trained on every year before it.
std::vector<Fold> expanding_folds(std::span<const int> years, int n_test);

/// Which days of the test year feed Stage 3.
struct ZRangePolicy {
    enum class Kind {
        /// [truth - horizon, truth - lead_days], mirroring the training rows.
        Anchored,
        /// Fixed calendar days [first_day, last_day].
        Calendar,
    };
    Kind kind = Kind::Anchored;
    int lead_days = 0;
    int first_day = 0;
    int last_day = 0;
};

struct BacktestConfig {
    std::vector<Fold> folds;
    Boundary boundary = Boundary::Start;
    int horizon = kDefaultHorizon;
    ZRangePolicy z_range;
    SeasonDefinition def;
    GBMConfig stage1;
    GBMConfig stage2;
    Stage2Protocol protocol = Stage2Protocol::LeaveOneYearOut;
    double u_floor = kDefaultUFloor;
    bool include_doy = true;
    /// Longest prefix scanned when looking for the minimum day count.
    int min_days_scan = 366;

    void validate() const;
};

/// Stage-3 result using the first k points of the forecast series.
struct TracePoint {
    int k = 0;
    int z = 0;  // last prediction day included
    std::optional<double> y_star;
    std::optional<double> sigma_y_star;
    /// k >= N_n, where the variance ratio drops below one.
    bool reduces_uncertainty = false;
};

struct FoldResult {
    int test_year = 0;
    int truth = 0;
    double y_star = 0.0;
    double sigma_y_star = 0.0;
    double abs_error = 0.0;
    /// z_last + y_hat(z_last): the boundary implied by the final Stage-1 prediction alone.
    double stage1_last = 0.0;
    double stage1_abs_error = 0.0;
    FinalForecast final_fit;
    std::optional<int> min_days;
    ForecastSeries series;
    std::vector<TracePoint> trace;
};

struct BacktestReport {
    std::vector<FoldResult> folds;
    double mae = 0.0;
    double stage1_last_mae = 0.0;
};

double mae(std::span<const double> predictions, std::span<const double> truths);

/// Stage-3 fits at every prefix length k = 1..N (k = 1 carries no fit).
/// Prefixes whose slope is degenerate are reported without a forecast.
std::vector<TracePoint> convergence_trace(const ForecastSeries& series, std::optional<int> min_days);

BacktestReport rolling_backtest(const Dataset& data, const BacktestConfig& cfg);

std::string report_to_json(const BacktestReport& report);

/// Writes report.json, folds.csv and convergence_<year>.csv per fold.
std::vector<std::filesystem::path> emit_report(const BacktestReport& report, const std::filesystem::path& dir);

} // namespace pollen
