#include "pollen/features.hpp"

#include "pollen/error.hpp"
#include "pollen/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace pollen {

const std::array<std::string_view, kFeatureCount>& feature_names() {
    static constexpr std::array<std::string_view, kFeatureCount> names = {
        "mean",          "std",           "min",          "max",           "median",
        "q25",           "q75",           "iqr",          "range",         "sum",
        "first",         "last",          "last_minus_first", "slope",     "intercept",
        "mean_abs_diff", "max_diff",      "std_diff",     "autocorr_lag1", "skewness",
        "excess_kurtosis", "rms",         "count_above_mean", "argmax",    "argmin",
        "ewma",          "mean_last3",    "mean_first3",  "count_above_ref", "diff_sign_changes",
    };
    return names;
}

ReferenceThresholds reference_thresholds(const Dataset& data, double delta_c, std::span<const int> years) {
    ReferenceThresholds refs{};
    std::array<double, kSeriesCount> sums{};
    std::size_t count = 0;
    for (const auto& r : data.records()) {
        if (!years.empty() && std::find(years.begin(), years.end(), year_of(r.date)) == years.end()) continue;
        for (std::size_t s = 0; s < kSeriesCount; ++s) sums[s] += r.values[s];
        ++count;
    }
    if (count == 0) fail(ErrorKind::InsufficientData, "no records in the reference period");
    for (std::size_t s = 0; s < kSeriesCount; ++s) refs[s] = sums[s] / static_cast<double>(count);
    refs[static_cast<std::size_t>(Series::Pollen)] = delta_c;
    return refs;
}

namespace {

// Linear-interpolated quantile of sorted data (the "type 7" rule).
double quantile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double population_sd(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

} // namespace

std::array<double, kFeatureCount> window_features(std::span<const double> w, double reference) {
    if (w.size() != kWindowLength)
        fail(ErrorKind::WrongWindowLength, "window must hold exactly 14 values, got " + std::to_string(w.size()));
    for (double x : w)
        if (!std::isfinite(x)) fail(ErrorKind::NonFinite, "window contains a non-finite value");

    const double n = static_cast<double>(w.size());
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    const double mean = sum / n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, sumsq = 0.0, scale = 0.0;
    for (double x : w) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        sumsq += x * x;
        scale = std::max(scale, std::abs(x));
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    // Shape statistics treat a numerically flat window as zero variance.
    const bool flat = m2 <= 1e-24 * (scale * scale) || m2 == 0.0;

    std::array<double, kWindowLength> sorted{};
    std::copy(w.begin(), w.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    const double q25 = quantile(sorted, 0.25);
    const double q75 = quantile(sorted, 0.75);

    const double index_mean = (n - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double di = static_cast<double>(i) - index_mean;
        sxy += di * (w[i] - mean);
        sxx += di * di;
    }
    const double slope = sxy / sxx;
    const double intercept = mean - slope * index_mean;

    std::array<double, kWindowLength - 1> diffs{};
    for (std::size_t i = 0; i + 1 < w.size(); ++i) diffs[i] = w[i + 1] - w[i];
    double abs_diff_sum = 0.0;
    for (double d : diffs) abs_diff_sum += std::abs(d);
    const double diff_mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    int sign_changes = 0;
    for (std::size_t i = 0; i + 1 < diffs.size(); ++i)
        if (diffs[i] * diffs[i + 1] < 0.0) ++sign_changes;

    double autocorr = 0.0;
    if (!flat) {
        double lag = 0.0;
        for (std::size_t i = 0; i + 1 < w.size(); ++i) lag += (w[i] - mean) * (w[i + 1] - mean);
        autocorr = lag / (m2 * n);
    }

    int above_mean = 0, above_ref = 0;
    for (double x : w) {
        if (x > mean) ++above_mean;
        if (x > reference) ++above_ref;
    }

    double ewma = w[0];
    for (std::size_t i = 1; i < w.size(); ++i) ewma = kEwmaAlpha * w[i] + (1.0 - kEwmaAlpha) * ewma;

    const auto argmax = std::distance(w.begin(), std::max_element(w.begin(), w.end()));
    const auto argmin = std::distance(w.begin(), std::min_element(w.begin(), w.end()));
    const std::size_t last = w.size() - 1;

    return {
        mean,
        flat ? 0.0 : std::sqrt(m2),
        sorted.front(),
        sorted.back(),
        quantile(sorted, 0.5),
        q25,
        q75,
        q75 - q25,
        sorted.back() - sorted.front(),
        sum,
        w[0],
        w[last],
        w[last] - w[0],
        slope,
        intercept,
        abs_diff_sum / static_cast<double>(diffs.size()),
        *std::max_element(diffs.begin(), diffs.end()),
        population_sd(diffs, diff_mean),
        autocorr,
        flat ? 0.0 : m3 / std::pow(m2, 1.5),
        flat ? 0.0 : m4 / (m2 * m2) - 3.0,
        std::sqrt(sumsq / n),
        static_cast<double>(above_mean),
        static_cast<double>(argmax),
        static_cast<double>(argmin),
        ewma,
        (w[last - 2] + w[last - 1] + w[last]) / 3.0,
        (w[0] + w[1] + w[2]) / 3.0,
        static_cast<double>(above_ref),
        static_cast<double>(sign_changes),
    };
}

FeatureMatrix::FeatureMatrix(std::vector<Date> day_index, std::vector<double> values)
    : day_index_(std::move(day_index)), values_(std::move(values)) {
    if (values_.size() != day_index_.size() * kSeriesCount * kFeatureCount)
        fail(ErrorKind::LengthMismatch, "feature tensor size does not match its day index");
    for (double v : values_)
        if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "feature tensor contains a non-finite value");
}

std::optional<std::size_t> FeatureMatrix::row_of(Date date) const {
    if (day_index_.empty()) return std::nullopt;
    const auto offset = (date - day_index_.front()).count();
    if (offset < 0 || offset >= static_cast<long>(day_index_.size())) return std::nullopt;
    return static_cast<std::size_t>(offset);
}

FeatureMatrix build_feature_matrix(const Dataset& data, const ReferenceThresholds& references,
                                   std::size_t window_len) {
    if (window_len != kWindowLength)
        fail(ErrorKind::WrongWindowLength, "the statistic catalog is defined for 14-day windows");
    if (data.size() < window_len)
        fail(ErrorKind::DatasetTooShort, "dataset has " + std::to_string(data.size()) + " days, need " +
                                             std::to_string(window_len));
    const std::size_t rows = data.size() - window_len + 1;
    std::vector<Date> days(rows);
    std::vector<double> values(rows * kSeriesCount * kFeatureCount);
    std::array<double, kWindowLength> window{};
    for (std::size_t s = 0; s < kSeriesCount; ++s) {
        const auto series = data.series(static_cast<Series>(s));
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(series.begin() + static_cast<long>(r), window_len, window.begin());
            const auto stats = window_features(window, references[s]);
            std::copy(stats.begin(), stats.end(), values.begin() + static_cast<long>((r * kSeriesCount + s) * kFeatureCount));
        }
    }
    for (std::size_t r = 0; r < rows; ++r) days[r] = data[r + window_len - 1].date;
    return FeatureMatrix(std::move(days), std::move(values));
}

std::vector<double> flatten_row(const FeatureMatrix& m, std::size_t row, bool include_doy) {
    if (row >= m.rows())
        fail(ErrorKind::IndexOutOfRange, "row " + std::to_string(row) + " outside feature matrix of " +
                                             std::to_string(m.rows()) + " rows");
    const auto block = m.row_block(row);
    std::vector<double> out(block.begin(), block.end());
    if (include_doy) out.push_back(static_cast<double>(day_of_year(m.day_index()[row])));
    return out;
}

std::vector<std::string> flat_feature_names(bool include_doy) {
    std::vector<std::string> names;
    for (auto s : series_names())
        for (auto f : feature_names()) names.push_back(std::string(s) + "__" + std::string(f));
    if (include_doy) names.emplace_back("day_of_year");
    return names;
}

void export_feature_csv(const FeatureMatrix& m, std::ostream& out, bool include_doy) {
    out << "date";
    for (const auto& name : flat_feature_names(include_doy)) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << format_date(m.day_index()[r]);
        for (double v : flatten_row(m, r, include_doy)) out << ',' << format_number(v);
        out << '\n';
    }
}

} // namespace pollen
