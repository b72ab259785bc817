#include "pollen/backtest.hpp"

#include "pollen/error.hpp"
#include "pollen/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pollen {

using nlohmann::json;

std::vector<Fold> expanding_folds(std::span<const int> years, int n_test) {
    std::vector<int> sorted(years.begin(), years.end());
    std::sort(sorted.begin(), sorted.end());
    if (n_test < 1 || static_cast<std::size_t>(n_test) + 2 > sorted.size())
        fail(ErrorKind::FoldConfigInvalid, "need at least two training years before the first test year");
    std::vector<Fold> folds;
    for (std::size_t t = sorted.size() - static_cast<std::size_t>(n_test); t < sorted.size(); ++t)
        folds.push_back({std::vector<int>(sorted.begin(), sorted.begin() + static_cast<long>(t)), sorted[t]});
    return folds;
}

void BacktestConfig::validate() const {
    if (folds.empty()) fail(ErrorKind::FoldConfigInvalid, "no folds configured");
    for (const auto& f : folds) {
        if (std::find(f.train_years.begin(), f.train_years.end(), f.test_year) != f.train_years.end())
            fail(ErrorKind::FoldConfigInvalid, "test year " + std::to_string(f.test_year) + " is also a training year");
        if (f.train_years.size() < 2)
            fail(ErrorKind::FoldConfigInvalid, "fold for " + std::to_string(f.test_year) + " has fewer than two training years");
    }
    if (z_range.kind == ZRangePolicy::Kind::Anchored && (z_range.lead_days < 0 || z_range.lead_days >= horizon))
        fail(ErrorKind::FoldConfigInvalid, "lead_days must lie in [0, horizon)");
    if (z_range.kind == ZRangePolicy::Kind::Calendar && (z_range.first_day < 1 || z_range.last_day <= z_range.first_day))
        fail(ErrorKind::FoldConfigInvalid, "calendar range must satisfy 1 <= first_day < last_day");
    if (min_days_scan < 2) fail(ErrorKind::FoldConfigInvalid, "min_days_scan must be >= 2");
}

double mae(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) fail(ErrorKind::LengthMismatch, "predictions and truths differ in length");
    if (predictions.empty()) fail(ErrorKind::Empty, "MAE of an empty set");
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) total += std::abs(predictions[i] - truths[i]);
    return total / static_cast<double>(predictions.size());
}

std::vector<TracePoint> convergence_trace(const ForecastSeries& series, std::optional<int> min_days) {
    std::vector<TracePoint> trace;
    const auto& pts = series.points;
    for (std::size_t k = 1; k <= pts.size(); ++k) {
        TracePoint tp;
        tp.k = static_cast<int>(k);
        tp.z = pts[k - 1].z;
        tp.reduces_uncertainty = min_days && tp.k >= *min_days;
        if (k >= 2) {
            const auto fit = fit_wls(std::span(pts.data(), k));
            if (std::abs(fit.beta1) > kSlopeFloor) {
                const auto f = final_forecast(fit);
                tp.y_star = f.y_star;
                tp.sigma_y_star = f.sigma_y_star;
            }
        }
        trace.push_back(tp);
    }
    return trace;
}

namespace {

FoldResult run_fold(const Dataset& data, const BacktestConfig& cfg, const Fold& fold) {
    TrainConfig tc;
    tc.def = cfg.def;
    tc.boundary = cfg.boundary;
    tc.horizon = cfg.horizon;
    tc.years = fold.train_years;
    tc.stage1 = cfg.stage1;
    tc.stage2 = cfg.stage2;
    tc.protocol = cfg.protocol;
    tc.u_floor = cfg.u_floor;
    tc.include_doy = cfg.include_doy;
    const auto model = train_forecaster(data, tc);

    FoldResult r;
    r.test_year = fold.test_year;
    r.truth = boundary_day(label_season(data, cfg.def, fold.test_year), cfg.boundary);

    int z_first, z_last;
    if (cfg.z_range.kind == ZRangePolicy::Kind::Anchored) {
        z_first = r.truth - cfg.horizon;
        z_last = r.truth - cfg.z_range.lead_days;
    } else {
        z_first = cfg.z_range.first_day;
        z_last = cfg.z_range.last_day;
    }
    const FeatureContext ctx(data, model.references, cfg.include_doy);
    r.series = predict_series(model.stage1, model.stage2, ctx, fold.test_year, z_first, z_last, cfg.boundary);

    const auto fit = fit_wls(r.series.points);
    r.final_fit = final_forecast(fit);
    r.y_star = r.final_fit.y_star;
    r.sigma_y_star = r.final_fit.sigma_y_star;
    r.abs_error = std::abs(r.y_star - r.truth);

    const auto& last = r.series.points.back();
    r.stage1_last = last.z + last.y_hat;
    r.stage1_abs_error = std::abs(r.stage1_last - r.truth);

    r.min_days = min_days(fit.beta0, fit.beta1, z_first, cfg.min_days_scan).min_days;
    r.trace = convergence_trace(r.series, r.min_days);
    return r;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

} // namespace

BacktestReport rolling_backtest(const Dataset& data, const BacktestConfig& cfg) {
    cfg.validate();
    for (const auto& fold : cfg.folds) {
        boundary_day(label_season(data, cfg.def, fold.test_year), cfg.boundary);
        for (int y : fold.train_years) boundary_day(label_season(data, cfg.def, y), cfg.boundary);
    }
    BacktestReport report;
    std::vector<double> stars, stage1, truths;
    for (const auto& fold : cfg.folds) {
        report.folds.push_back(run_fold(data, cfg, fold));
        stars.push_back(report.folds.back().y_star);
        stage1.push_back(report.folds.back().stage1_last);
        truths.push_back(report.folds.back().truth);
    }
    report.mae = mae(stars, truths);
    report.stage1_last_mae = mae(stage1, truths);
    return report;
}

std::string report_to_json(const BacktestReport& report) {
    json folds = json::array();
    for (const auto& f : report.folds) {
        json trace = json::array();
        for (const auto& t : f.trace)
            trace.push_back({{"k", t.k},
                             {"z", t.z},
                             {"y_star", optional_json(t.y_star)},
                             {"sigma_y_star", optional_json(t.sigma_y_star)},
                             {"reduces_uncertainty", t.reduces_uncertainty}});
        json series = json::array();
        for (const auto& p : f.series.points) series.push_back({{"z", p.z}, {"y_hat", p.y_hat}, {"u_hat", p.u_hat}});
        folds.push_back({{"test_year", f.test_year},
                         {"truth", f.truth},
                         {"y_star", f.y_star},
                         {"sigma_y_star", f.sigma_y_star},
                         {"abs_error", f.abs_error},
                         {"beta0", f.final_fit.beta0},
                         {"beta1", f.final_fit.beta1},
                         {"n_points", f.final_fit.n_points},
                         {"stage1_last", f.stage1_last},
                         {"stage1_abs_error", f.stage1_abs_error},
                         {"min_days", f.min_days ? json(*f.min_days) : json(nullptr)},
                         {"series", std::move(series)},
                         {"trace", std::move(trace)}});
    }
    json doc{{"mae", report.mae},
             {"stage1_last_mae", report.stage1_last_mae},
             {"folds", std::move(folds)},
             {"note", "sigma_y_star propagates coefficient variances without the beta0/beta1 covariance term"}};
    return doc.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_report(const BacktestReport& report, const std::filesystem::path& dir) {
    if (report.folds.empty()) fail(ErrorKind::Empty, "backtest report has no folds");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    write_file(dir / "report.json", report_to_json(report));
    written.push_back(dir / "report.json");

    std::ostringstream folds;
    folds << "test_year,truth,y_star,sigma_y_star,abs_error,stage1_last,stage1_abs_error,min_days\n";
    for (const auto& f : report.folds)
        folds << f.test_year << ',' << f.truth << ',' << format_number(f.y_star) << ','
              << format_number(f.sigma_y_star) << ',' << format_number(f.abs_error) << ','
              << format_number(f.stage1_last) << ',' << format_number(f.stage1_abs_error) << ','
              << (f.min_days ? std::to_string(*f.min_days) : std::string{}) << '\n';
    write_file(dir / "folds.csv", folds.str());
    written.push_back(dir / "folds.csv");

    for (const auto& f : report.folds) {
        std::ostringstream trace;
        trace << "k,y_star,sigma_y_star,reduces_uncertainty\n";
        for (const auto& t : f.trace)
            trace << t.k << ',' << csv_optional(t.y_star) << ',' << csv_optional(t.sigma_y_star) << ','
                  << (t.reduces_uncertainty ? 1 : 0) << '\n';
        const auto path = dir / ("convergence_" + std::to_string(f.test_year) + ".csv");
        write_file(path, trace.str());
        written.push_back(path);
    }
    return written;
}

} // namespace pollen
