#include "pollen/synthetic.hpp"

#include "pollen/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace pollen {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    GeneratorProfile, start_year, temp_mean, temp_amplitude, coldest_day, year_anomaly_sd, daily_anomaly_sd,
    daily_anomaly_ar, diurnal_range, soil_lag_days, gdd_base, onset_gdd_mean, onset_gdd_sd, season_length_mean,
    season_length_sd, min_season_length, max_season_length, preseason_ramp_days, peak_pollen_log_mean,
    peak_pollen_log_sd, background_pollen, pollen_noise_log_sd, rain_washout, rain_probability, rain_mean_mm,
    wind_mean, pressure_mean)

void GeneratorProfile::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::InvalidArgument, std::string("generator profile: ") + what);
    };
    require(start_year >= 1 && start_year <= 9000, "start_year out of range");
    require(temp_amplitude >= 0.0, "temp_amplitude must be >= 0");
    require(year_anomaly_sd >= 0.0 && daily_anomaly_sd >= 0.0, "anomaly sd must be >= 0");
    require(daily_anomaly_ar >= 0.0 && daily_anomaly_ar < 1.0, "daily_anomaly_ar must lie in [0,1)");
    require(diurnal_range >= 0.0, "diurnal_range must be >= 0");
    require(soil_lag_days >= 1.0, "soil_lag_days must be >= 1");
    require(onset_gdd_mean > 0.0 && onset_gdd_sd >= 0.0, "onset gdd parameters invalid");
    require(min_season_length >= 1.0 && max_season_length >= min_season_length, "season length bounds invalid");
    require(season_length_sd >= 0.0 && peak_pollen_log_sd >= 0.0 && pollen_noise_log_sd >= 0.0,
            "sd parameters must be >= 0");
    require(preseason_ramp_days > 0.0, "preseason_ramp_days must be > 0");
    require(background_pollen >= 0.0, "background_pollen must be >= 0");
    require(rain_washout >= 0.0 && rain_washout <= 1.0, "rain_washout must lie in [0,1]");
    require(rain_probability >= 0.0 && rain_probability <= 1.0, "rain_probability must lie in [0,1]");
    require(rain_mean_mm > 0.0 && wind_mean >= 0.0, "rain/wind means invalid");
}

GeneratorProfile profile_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (!j.is_object()) fail(ErrorKind::FormatError, "generator profile must be a JSON object");
        const auto known = nlohmann::json(GeneratorProfile{});
        for (const auto& [key, _] : j.items())
            if (!known.contains(key)) fail(ErrorKind::FormatError, "unknown generator profile key '" + key + "'");
        auto profile = j.get<GeneratorProfile>();
        profile.validate();
        return profile;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::FormatError, std::string("generator profile: ") + e.what());
    }
}

GeneratorProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return profile_from_json(ss.str());
}

std::string profile_to_json(const GeneratorProfile& profile) { return nlohmann::json(profile).dump(2); }

namespace {

struct DayWeather {
    double tavg, tmax, tmin, precip, humidity, wind, pressure, sunshine, dew_point, cloud, soil;
};

} // namespace

Dataset generate_synthetic(std::uint64_t seed, int years, const GeneratorProfile& p) {
    if (years < 1) fail(ErrorKind::InvalidArgument, "years must be >= 1");
    p.validate();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::exponential_distribution<double> rain_amount(1.0 / p.rain_mean_mm);

    constexpr double two_pi = 2.0 * std::numbers::pi;
    double daily_anomaly = 0.0;
    double pressure_anomaly = 0.0;
    double soil = p.temp_mean - p.temp_amplitude;
    const double innovation_sd = p.daily_anomaly_sd * std::sqrt(1.0 - p.daily_anomaly_ar * p.daily_anomaly_ar);

    std::vector<DailyRecord> records;
    for (int yi = 0; yi < years; ++yi) {
        const int year = p.start_year + yi;
        const int n_days = days_in_year(year);
        const double year_anomaly = p.year_anomaly_sd * normal(rng);
        const double onset_gdd = std::max(1.0, p.onset_gdd_mean + p.onset_gdd_sd * normal(rng));
        const double season_length = std::clamp(p.season_length_mean + p.season_length_sd * normal(rng),
                                                p.min_season_length, p.max_season_length);
        const double peak = std::exp(p.peak_pollen_log_mean + p.peak_pollen_log_sd * normal(rng));

        std::vector<DayWeather> weather(static_cast<std::size_t>(n_days));
        std::vector<bool> rained(weather.size());
        double gdd = 0.0;
        int onset = n_days - static_cast<int>(p.min_season_length) - 10;
        bool onset_found = false;
        for (int d = 1; d <= n_days; ++d) {
            auto& w = weather[static_cast<std::size_t>(d - 1)];
            daily_anomaly = p.daily_anomaly_ar * daily_anomaly + innovation_sd * normal(rng);
            const double seasonal = p.temp_mean - p.temp_amplitude * std::cos(two_pi * (d - p.coldest_day) / 365.25);
            w.tavg = seasonal + year_anomaly + daily_anomaly;

            const bool rain = uniform(rng) < p.rain_probability;
            rained[static_cast<std::size_t>(d - 1)] = rain;
            w.precip = rain ? rain_amount(rng) : 0.0;
            const double range = std::max(0.5, p.diurnal_range * (rain ? 0.6 : 1.0) + normal(rng));
            w.tmax = w.tavg + 0.5 * range;
            w.tmin = w.tavg - 0.5 * range;
            w.cloud = std::clamp(35.0 + (rain ? 45.0 : 0.0) + 15.0 * normal(rng), 0.0, 100.0);
            w.humidity = std::clamp(55.0 + (rain ? 22.0 : 0.0) + 0.2 * (w.cloud - 35.0) + 8.0 * normal(rng), 5.0, 100.0);
            w.dew_point = w.tavg - (100.0 - w.humidity) / 5.0;
            w.wind = std::abs(p.wind_mean + 1.5 * normal(rng));
            pressure_anomaly = 0.8 * pressure_anomaly + 3.6 * normal(rng);
            w.pressure = p.pressure_mean + pressure_anomaly - (rain ? 5.0 : 0.0);
            const double day_length = 12.0 + 4.0 * std::sin(two_pi * (d - 80) / 365.25);
            w.sunshine = day_length * (1.0 - w.cloud / 100.0) * (0.8 + 0.2 * uniform(rng));
            soil += (w.tavg - soil) / p.soil_lag_days;
            w.soil = soil;

            gdd += std::max(0.0, w.tavg - p.gdd_base);
            if (!onset_found && gdd >= onset_gdd) {
                onset = d;
                onset_found = true;
            }
        }

        const double season_end = std::min<double>(onset + season_length, n_days - 10);
        const double noise_sd = p.pollen_noise_log_sd;
        for (int d = 1; d <= n_days; ++d) {
            const auto& w = weather[static_cast<std::size_t>(d - 1)];
            double clean;
            if (d < onset) {
                clean = p.background_pollen + 0.3 * peak * std::exp((d - onset) / p.preseason_ramp_days);
            } else if (d <= season_end) {
                const double s = (d - onset) / std::max(1.0, season_end - onset);
                clean = p.background_pollen + peak * (0.45 + 0.55 * std::sin(std::numbers::pi * s));
            } else {
                clean = p.background_pollen + 0.45 * peak * std::exp(-(d - season_end) / 5.0);
            }
            double pollen = clean * std::exp(noise_sd * normal(rng) - 0.5 * noise_sd * noise_sd);
            if (rained[static_cast<std::size_t>(d - 1)]) pollen *= p.rain_washout;
            pollen *= 0.85 + 0.05 * std::min(w.wind, 6.0);

            DailyRecord rec;
            rec.date = date_from_doy(year, d);
            rec.values = {std::max(0.0, pollen), w.tmax, w.tmin, w.tavg, w.precip, w.humidity,
                          w.wind, w.pressure, w.sunshine, w.dew_point, w.cloud, w.soil};
            records.push_back(rec);
        }
    }
    return Dataset(std::move(records));
}

} // namespace pollen
