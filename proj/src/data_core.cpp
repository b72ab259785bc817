#include "pollen/data_core.hpp"

#include "pollen/error.hpp"
#include "pollen/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace pollen {

namespace chr = std::chrono;

const std::array<std::string_view, kSeriesCount>& series_names() {
    static constexpr std::array<std::string_view, kSeriesCount> names = {
        "pollen",   "tmax",           "tmin",      "tavg",        "precip",    "humidity",
        "wind_speed", "pressure",     "sunshine_hours", "dew_point", "cloud_cover", "soil_temp",
    };
    return names;
}

Date parse_date(std::string_view text) {
    while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    auto bad = [&] { fail(ErrorKind::FormatError, "invalid ISO date '" + std::string(text) + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') bad();
    auto digits = [&](std::size_t from, std::size_t len) {
        int v = 0;
        for (std::size_t i = from; i < from + len; ++i) {
            if (text[i] < '0' || text[i] > '9') bad();
            v = v * 10 + (text[i] - '0');
        }
        return v;
    };
    chr::year_month_day ymd{chr::year{digits(0, 4)}, chr::month{static_cast<unsigned>(digits(5, 2))},
                            chr::day{static_cast<unsigned>(digits(8, 2))}};
    if (!ymd.ok()) bad();
    return Date{ymd};
}

std::string format_date(Date date) {
    chr::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int year_of(Date date) { return static_cast<int>(chr::year_month_day{date}.year()); }

int day_of_year(Date date) {
    const Date jan1{chr::year{year_of(date)} / chr::January / 1};
    return static_cast<int>((date - jan1).count()) + 1;
}

int days_in_year(int year) { return chr::year{year}.is_leap() ? 366 : 365; }

Date date_from_doy(int year, int doy) {
    return Date{chr::year{year} / chr::January / 1} + chr::days{doy - 1};
}

void validate_record(const DailyRecord& r) {
    const auto& names = series_names();
    for (std::size_t i = 0; i < kSeriesCount; ++i) {
        if (!std::isfinite(r.values[i]))
            fail(ErrorKind::NonFinite, "non-finite " + std::string(names[i]) + " on " + format_date(r.date));
    }
    auto violated = [&](const std::string& what) {
        fail(ErrorKind::InvariantViolation, what + " on " + format_date(r.date));
    };
    if (r.pollen() < 0.0) violated("negative pollen");
    const double hum = r.value(Series::Humidity);
    const double cloud = r.value(Series::CloudCover);
    if (hum < 0.0 || hum > 100.0) violated("humidity outside [0,100]");
    if (cloud < 0.0 || cloud > 100.0) violated("cloud_cover outside [0,100]");
    if (!(r.value(Series::Tmin) <= r.value(Series::Tavg) && r.value(Series::Tavg) <= r.value(Series::Tmax)))
        violated("temperatures not ordered tmin <= tavg <= tmax");
}

Dataset::Dataset(std::vector<DailyRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        validate_record(records_[i]);
        if (i > 0 && records_[i].date != records_[i - 1].date + chr::days{1}) {
            if (records_[i].date <= records_[i - 1].date)
                fail(ErrorKind::NonMonotoneDates, "dates not increasing at " + format_date(records_[i].date));
            fail(ErrorKind::GapTooLarge, "missing days before " + format_date(records_[i].date));
        }
    }
}

Date Dataset::first_date() const {
    if (records_.empty()) fail(ErrorKind::Empty, "empty dataset");
    return records_.front().date;
}

Date Dataset::last_date() const {
    if (records_.empty()) fail(ErrorKind::Empty, "empty dataset");
    return records_.back().date;
}

std::optional<std::size_t> Dataset::index_of(Date date) const {
    if (records_.empty()) return std::nullopt;
    const auto offset = (date - records_.front().date).count();
    if (offset < 0 || offset >= static_cast<long>(records_.size())) return std::nullopt;
    return static_cast<std::size_t>(offset);
}

bool Dataset::covers_year(int year) const {
    return index_of(date_from_doy(year, 1)) && index_of(date_from_doy(year, days_in_year(year)));
}

std::vector<int> Dataset::full_years() const {
    std::vector<int> years;
    if (records_.empty()) return years;
    for (int y = year_of(first_date()); y <= year_of(last_date()); ++y)
        if (covers_year(y)) years.push_back(y);
    return years;
}

std::vector<double> Dataset::series(Series s) const {
    std::vector<double> out(records_.size());
    std::transform(records_.begin(), records_.end(), out.begin(),
                   [s](const DailyRecord& r) { return r.value(s); });
    return out;
}

std::vector<double> Dataset::year_series(Series s, int year) const {
    if (!covers_year(year))
        fail(ErrorKind::InsufficientData, "dataset does not cover year " + std::to_string(year));
    const std::size_t first = *index_of(date_from_doy(year, 1));
    std::vector<double> out(static_cast<std::size_t>(days_in_year(year)));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = records_[first + i].value(s);
    return out;
}

Dataset Dataset::truncated(Date last) const {
    Dataset copy;
    for (const auto& r : records_)
        if (r.date <= last) copy.records_.push_back(r);
    return copy;
}

ColumnMap::ColumnMap() {
    for (std::size_t i = 0; i < kSeriesCount; ++i) series[i] = std::string(series_names()[i]);
}

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    return ingest_csv(in, columns);
}

IngestResult ingest_csv(std::istream& in, const ColumnMap& columns) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::MissingColumn, "empty CSV: no header row");

    std::map<std::string, std::size_t, std::less<>> header;
    {
        const auto fields = split_csv_line(line);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string name(fields[i]);
            name.erase(0, name.find_first_not_of(' '));
            name.erase(name.find_last_not_of(' ') + 1);
            header.emplace(std::move(name), i);
        }
    }
    auto column = [&](const std::string& name) {
        auto it = header.find(name);
        if (it == header.end()) fail(ErrorKind::MissingColumn, "missing column '" + name + "'");
        return it->second;
    };
    const std::size_t date_col = column(columns.date);
    std::array<std::size_t, kSeriesCount> value_cols{};
    for (std::size_t i = 0; i < kSeriesCount; ++i) value_cols[i] = column(columns.series[i]);

    IngestResult result;
    std::vector<DailyRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < header.size())
            fail(ErrorKind::FormatError, "line " + std::to_string(line_no) + ": too few fields");
        DailyRecord rec;
        rec.date = parse_date(fields[date_col]);
        for (std::size_t i = 0; i < kSeriesCount; ++i) {
            auto v = parse_number(fields[value_cols[i]]);
            if (!v || !std::isfinite(*v))
                fail(ErrorKind::NonFinite, "line " + std::to_string(line_no) + ": bad value for '" +
                                               columns.series[i] + "'");
            rec.values[i] = *v;
        }
        ++result.report.rows_read;

        if (!records.empty()) {
            const auto step = (rec.date - records.back().date).count();
            if (step <= 0)
                fail(ErrorKind::NonMonotoneDates, "line " + std::to_string(line_no) + ": date " +
                                                      format_date(rec.date) + " not after previous");
            const auto missing = step - 1;
            if (missing > kMaxFillableGap)
                fail(ErrorKind::GapTooLarge, std::to_string(missing) + " consecutive missing days before " +
                                                 format_date(rec.date));
            for (long k = 0; k < missing; ++k) {
                DailyRecord fill = records.back();
                fill.date += chr::days{1};
                result.report.filled_dates.push_back(fill.date);
                records.push_back(fill);
            }
        }
        records.push_back(rec);
    }
    result.data = Dataset(std::move(records));
    return result;
}

void emit_csv(const Dataset& data, std::ostream& out) {
    out << "date";
    for (auto name : series_names()) out << ',' << name;
    out << '\n';
    for (const auto& r : data.records()) {
        out << format_date(r.date);
        for (double v : r.values) out << ',' << format_number(v);
        out << '\n';
    }
}

void emit_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
    emit_csv(data, out);
    if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

void SeasonDefinition::validate() const {
    if (!(delta_c > 0.0) || !std::isfinite(delta_c))
        fail(ErrorKind::InvalidArgument, "delta_c must be a positive finite number");
    if (delta_n < 1 || delta_n > window_days)
        fail(ErrorKind::InvalidArgument, "delta_n must lie in [1, 7]");
}

SeasonBounds scan_season(std::span<const double> pollen, const SeasonDefinition& def) {
    def.validate();
    constexpr int w = SeasonDefinition::window_days;
    const int n = static_cast<int>(pollen.size());
    SeasonBounds bounds;
    if (n < w) return bounds;

    // typical_before[i] = number of typical days among the first i entries
    std::vector<int> typical_before(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        typical_before[i + 1] = typical_before[i] + (pollen[i] > def.delta_c ? 1 : 0);
    auto window_count = [&](int first) { return typical_before[first + w] - typical_before[first]; };

    for (int first = 0; first + w <= n; ++first) {
        if (window_count(first) >= def.delta_n) {
            bounds.start = first + 1;
            break;
        }
    }
    if (!bounds.start) return bounds;
    for (int first = n - w; first >= 0; --first) {
        if (window_count(first) >= def.delta_n) {
            bounds.end = first + w;
            break;
        }
    }
    return bounds;
}

SeasonBounds scan_season_brute_force(std::span<const double> pollen, const SeasonDefinition& def) {
    def.validate();
    constexpr int w = SeasonDefinition::window_days;
    const int n = static_cast<int>(pollen.size());
    auto typical_in = [&](int lo, int hi) {
        int count = 0;
        for (int d = lo; d <= hi; ++d)
            if (pollen[d - 1] > def.delta_c) ++count;
        return count;
    };
    SeasonBounds bounds;
    for (int d = 1; d <= n; ++d) {
        if (d + w - 1 > n) continue;
        if (typical_in(d, d + w - 1) >= def.delta_n) {
            bounds.start = d;
            break;
        }
    }
    if (!bounds.start) return bounds;
    for (int d = 1; d <= n; ++d) {
        if (d - w + 1 < 1 || d < *bounds.start) continue;
        if (typical_in(d - w + 1, d) >= def.delta_n) bounds.end = d;
    }
    return bounds;
}

namespace {

SeasonLabel to_label(int year, const SeasonBounds& b) {
    SeasonLabel label{year, std::nullopt, std::nullopt, std::nullopt};
    if (b.start && b.end) {
        label.start_day = b.start;
        label.end_day = b.end;
        label.length_days = *b.end - *b.start + 1;
    }
    return label;
}

} // namespace

SeasonLabel label_season(const Dataset& data, const SeasonDefinition& def, int year) {
    return to_label(year, scan_season(data.year_series(Series::Pollen, year), def));
}

SeasonLabel label_brute_force(const Dataset& data, const SeasonDefinition& def, int year) {
    return to_label(year, scan_season_brute_force(data.year_series(Series::Pollen, year), def));
}

std::vector<SeasonLabel> label_all(const Dataset& data, const SeasonDefinition& def) {
    std::vector<SeasonLabel> labels;
    for (int y : data.full_years()) labels.push_back(label_season(data, def, y));
    return labels;
}

SeasonStats season_stats(std::span<const SeasonLabel> labels) {
    std::vector<double> starts, ends, lengths;
    for (const auto& l : labels) {
        if (!l.present()) continue;
        starts.push_back(*l.start_day);
        ends.push_back(*l.end_day);
        lengths.push_back(*l.length_days);
    }
    if (starts.size() < 2) fail(ErrorKind::TooFewSeasons, "need at least two present seasons");
    auto sample_sd = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    return {starts.size(), sample_sd(starts), sample_sd(ends), sample_sd(lengths)};
}

} // namespace pollen
