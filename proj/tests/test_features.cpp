#include "helpers.hpp"

#include "pollen/features.hpp"
#include "pollen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace pollen;

namespace {

std::size_t index_of(std::string_view name) {
    const auto& names = feature_names();
    const auto it = std::find(names.begin(), names.end(), name);
    REQUIRE(it != names.end());
    return static_cast<std::size_t>(it - names.begin());
}

double stat(const std::array<double, kFeatureCount>& f, std::string_view name) { return f[index_of(name)]; }

Dataset constant_dataset(std::size_t days, double value) {
    std::vector<double> p(days, value);
    return testing::pollen_only(2010, p);
}

} // namespace

TEST_CASE("catalog has 30 distinct names") {
    auto names = std::vector<std::string_view>(feature_names().begin(), feature_names().end());
    CHECK(names.size() == 30);
    std::sort(names.begin(), names.end());
    CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("constant window") {
    std::array<double, 14> w;
    w.fill(5.0);
    const auto f = window_features(w, 1.0);
    CHECK(stat(f, "mean") == 5.0);
    CHECK(stat(f, "std") == 0.0);
    CHECK(stat(f, "slope") == 0.0);
    CHECK(stat(f, "autocorr_lag1") == 0.0);
    CHECK(stat(f, "skewness") == 0.0);
    CHECK(stat(f, "excess_kurtosis") == 0.0);
    CHECK(stat(f, "range") == 0.0);
    CHECK(stat(f, "count_above_ref") == 14.0);
    CHECK(stat(f, "diff_sign_changes") == 0.0);
}

TEST_CASE("ramp window") {
    std::array<double, 14> w;
    std::iota(w.begin(), w.end(), 0.0);
    const auto f = window_features(w, 100.0);
    CHECK(stat(f, "slope") == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(stat(f, "intercept") == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(stat(f, "mean") == 6.5);
    CHECK(stat(f, "last_minus_first") == 13.0);
    CHECK(stat(f, "median") == 6.5);
    CHECK(stat(f, "q25") == 3.25);
    CHECK(stat(f, "q75") == 9.75);
    CHECK(stat(f, "argmax") == 13.0);
    CHECK(stat(f, "argmin") == 0.0);
    CHECK(stat(f, "mean_last3") == 12.0);
    CHECK(stat(f, "mean_first3") == 1.0);
    CHECK(stat(f, "count_above_ref") == 0.0);
    CHECK(stat(f, "max_diff") == 1.0);
    CHECK(stat(f, "std_diff") == 0.0);
}

TEST_CASE("random windows against direct formulas") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(10.0, 3.0);
    for (int t = 0; t < 200; ++t) {
        std::array<double, 14> w;
        for (auto& x : w) x = noise(rng);
        const auto f = window_features(w, 10.0);
        for (double v : f) REQUIRE(std::isfinite(v));

        double mean = 0.0;
        for (double x : w) mean += x / 14.0;
        double var = 0.0, lag = 0.0;
        for (std::size_t i = 0; i < 14; ++i) var += (w[i] - mean) * (w[i] - mean) / 14.0;
        for (std::size_t i = 0; i < 13; ++i) lag += (w[i] - mean) * (w[i + 1] - mean);
        CHECK(stat(f, "mean") == doctest::Approx(mean).epsilon(1e-12));
        CHECK(stat(f, "std") == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
        CHECK(stat(f, "autocorr_lag1") == doctest::Approx(lag / (14.0 * var)).epsilon(1e-10));

        // Slope by the textbook two-sum formula.
        double sx = 0, sy = 0, sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < 14; ++i) {
            const double x = static_cast<double>(i);
            sx += x;
            sy += w[i];
            sxy += x * w[i];
            sxx += x * x;
        }
        const double slope = (14 * sxy - sx * sy) / (14 * sxx - sx * sx);
        CHECK(stat(f, "slope") == doctest::Approx(slope).epsilon(1e-10));
        CHECK(stat(f, "intercept") == doctest::Approx((sy - slope * sx) / 14).epsilon(1e-10));

        auto sorted = w;
        std::sort(sorted.begin(), sorted.end());
        CHECK(stat(f, "median") == doctest::Approx((sorted[6] + sorted[7]) / 2));
        CHECK(stat(f, "min") == sorted.front());
        CHECK(stat(f, "max") == sorted.back());
        double ewma = w[0];
        for (std::size_t i = 1; i < 14; ++i) ewma = 0.3 * w[i] + 0.7 * ewma;
        CHECK(stat(f, "ewma") == doctest::Approx(ewma).epsilon(1e-12));
    }
}

TEST_CASE("scaling behaviour of statistics") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    std::array<double, 14> w, scaled;
    for (auto& x : w) x = u(rng);
    for (std::size_t i = 0; i < 14; ++i) scaled[i] = 3.0 * w[i];
    const auto a = window_features(w, 25.0);
    const auto b = window_features(scaled, 75.0);
    for (auto name : {"mean", "std", "range", "iqr", "sum", "slope", "rms"})
        CHECK(stat(b, name) == doctest::Approx(3.0 * stat(a, name)).epsilon(1e-12));
    for (auto name : {"argmax", "argmin", "count_above_mean", "count_above_ref", "diff_sign_changes"})
        CHECK(stat(b, name) == stat(a, name));
    CHECK(stat(b, "skewness") == doctest::Approx(stat(a, "skewness")).epsilon(1e-10));
}

TEST_CASE("window length is enforced") {
    std::vector<double> short_window(13, 1.0);
    CHECK_KIND(window_features(short_window, 0.0), ErrorKind::WrongWindowLength);
}

TEST_CASE("feature matrix shape") {
    const ReferenceThresholds refs{};
    CHECK(build_feature_matrix(constant_dataset(14, 3.0), refs).rows() == 1);
    const auto m = build_feature_matrix(constant_dataset(20, 3.0), refs);
    CHECK(m.rows() == 7);
    CHECK(m.day_index().front() == date_from_doy(2010, 14));
    CHECK_KIND(build_feature_matrix(constant_dataset(13, 3.0), refs), ErrorKind::DatasetTooShort);
}

TEST_CASE("constant dataset rows equal constant-window statistics") {
    const auto data = constant_dataset(30, 3.0);
    const ReferenceThresholds refs{};
    const auto m = build_feature_matrix(data, refs);
    for (std::size_t s = 0; s < kSeriesCount; ++s) {
        std::array<double, 14> w;
        w.fill(data[0].values[s]);
        const auto expected = window_features(w, 0.0);
        for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(m.at(5, f, s) == expected[f]);
    }
    const auto a = flatten_row(m, 2);
    const auto b = flatten_row(m, 9);
    CHECK(std::equal(a.begin(), a.end() - 1, b.begin()));
    CHECK(a.back() + 7 == b.back());
}

TEST_CASE("flatten widths and names") {
    const auto m = build_feature_matrix(constant_dataset(20, 1.0), ReferenceThresholds{});
    CHECK(flatten_row(m, 0, false).size() == 360);
    const auto with_doy = flatten_row(m, 0, true);
    CHECK(with_doy.size() == 361);
    CHECK(with_doy.back() == 14.0);
    CHECK(flat_feature_names(true).size() == 361);
    CHECK(flat_feature_names(false).front() == "pollen__mean");
    CHECK(flat_feature_names(true).back() == "day_of_year");
}

TEST_CASE("causality and shift equivariance") {
    const auto data = generate_synthetic(9, 1);
    const auto refs = reference_thresholds(data, 120.0, data.full_years());
    const auto full = build_feature_matrix(data, refs);

    const Date cut = date_from_doy(data.full_years().front(), 200);
    const auto early = build_feature_matrix(data.truncated(cut), refs);
    const auto row = *full.row_of(cut);
    CHECK(flatten_row(early, *early.row_of(cut)) == flatten_row(full, row));

    std::vector<DailyRecord> later(data.records().begin() + 5, data.records().end());
    const auto shifted = build_feature_matrix(Dataset(later), refs);
    CHECK(shifted.rows() + 5 == full.rows());
    for (std::size_t r = 0; r < shifted.rows(); r += 37)
        CHECK(std::equal(shifted.row_block(r).begin(), shifted.row_block(r).end(), full.row_block(r + 5).begin()));
}

TEST_CASE("reference thresholds") {
    const auto data = generate_synthetic(9, 2);
    const auto years = data.full_years();
    const auto refs = reference_thresholds(data, 77.0, std::span(years.data(), 1));
    CHECK(refs[0] == 77.0);
    const auto tmax = data.year_series(Series::Tmax, years.front());
    CHECK(refs[1] == doctest::Approx(std::accumulate(tmax.begin(), tmax.end(), 0.0) / static_cast<double>(tmax.size())));
}
