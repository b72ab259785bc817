#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pollen {

using Date = std::chrono::sys_days;

inline constexpr std::size_t kSeriesCount = 12;
inline constexpr std::size_t kCovariateCount = kSeriesCount - 1;

/// Column slots of a daily record. Pollen is always slot 0.
enum class Series : std::size_t {
    Pollen = 0,
    Tmax,
    Tmin,
    Tavg,
    Precip,
    Humidity,
    WindSpeed,
    Pressure,
    SunshineHours,
    DewPoint,
    CloudCover,
    SoilTemp,
};

/// Canonical series names, in slot order. These are also the CSV headers.
const std::array<std::string_view, kSeriesCount>& series_names();

Date parse_date(std::string_view text);
std::string format_date(Date date);
int year_of(Date date);
/// 1-based day of the year (1..366).
int day_of_year(Date date);
int days_in_year(int year);
Date date_from_doy(int year, int doy);

struct DailyRecord {
    Date date{};
    std::array<double, kSeriesCount> values{};

    double pollen() const { return values[0]; }
    double value(Series s) const { return values[static_cast<std::size_t>(s)]; }

    friend bool operator==(const DailyRecord&, const DailyRecord&) = default;
};

/// Checks the per-record invariants (finite values, non-negative pollen,
/// percentages in range, tmin <= tavg <= tmax). Throws on violation.
void validate_record(const DailyRecord& record);

/// Gap-free, strictly consecutive daily series. Immutable once built.
class Dataset {
public:
    Dataset() = default;
    /// Validates every record and the consecutive-date invariant.
    explicit Dataset(std::vector<DailyRecord> records);

    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::vector<DailyRecord>& records() const { return records_; }
    const DailyRecord& operator[](std::size_t i) const { return records_[i]; }

    Date first_date() const;
    Date last_date() const;

    std::optional<std::size_t> index_of(Date date) const;
    bool covers_year(int year) const;
    /// Calendar years covered from Jan 1 through Dec 31.
    std::vector<int> full_years() const;

    std::vector<double> series(Series s) const;
    /// Values of one series for a fully covered calendar year.
    std::vector<double> year_series(Series s, int year) const;

    /// Copy truncated to records dated on or before `last`.
    Dataset truncated(Date last) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<DailyRecord> records_;
};

/// Maps canonical slots to header names in a CSV file.
struct ColumnMap {
    std::string date = "date";
    std::array<std::string, kSeriesCount> series;

    ColumnMap();
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::vector<Date> filled_dates;
};

struct IngestResult {
    Dataset data;
    LoadReport report;
};

inline constexpr int kMaxFillableGap = 3;

IngestResult ingest_csv(const std::filesystem::path& path, const ColumnMap& columns = {});
IngestResult ingest_csv(std::istream& in, const ColumnMap& columns = {});

/// Writes the canonical schema with shortest round-trip decimals.
void emit_csv(const Dataset& data, std::ostream& out);
void emit_csv(const Dataset& data, const std::filesystem::path& path);

struct SeasonDefinition {
    static constexpr int window_days = 7;

    double delta_c = 120.0;
    int delta_n = 4;

    void validate() const;
};

struct SeasonLabel {
    int year = 0;
    std::optional<int> start_day;
    std::optional<int> end_day;
    std::optional<int> length_days;

    bool present() const { return start_day.has_value(); }
    friend bool operator==(const SeasonLabel&, const SeasonLabel&) = default;
};

/// 1-based start/end positions of the season within a series.
struct SeasonBounds {
    std::optional<int> start;
    std::optional<int> end;

    friend bool operator==(const SeasonBounds&, const SeasonBounds&) = default;
};

/// Sliding-count scan. Start is the first day whose forward 7-day window
/// holds at least delta_n typical days; end is the last day whose trailing
/// window does. Windows never leave the series.
SeasonBounds scan_season(std::span<const double> pollen, const SeasonDefinition& def);

/// Literal enumeration of every window, used as the oracle for scan_season.
SeasonBounds scan_season_brute_force(std::span<const double> pollen, const SeasonDefinition& def);

SeasonLabel label_season(const Dataset& data, const SeasonDefinition& def, int year);
SeasonLabel label_brute_force(const Dataset& data, const SeasonDefinition& def, int year);

/// Labels every fully covered year.
std::vector<SeasonLabel> label_all(const Dataset& data, const SeasonDefinition& def);

struct SeasonStats {
    std::size_t seasons = 0;
    double start_sd = 0.0;
    double end_sd = 0.0;
    double length_sd = 0.0;
};

/// Sample standard deviations over the present labels (needs at least two).
SeasonStats season_stats(std::span<const SeasonLabel> labels);

} // namespace pollen
