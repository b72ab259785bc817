#pragma once

#include "pollen/data_core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace pollen {

/// Parameters of the synthetic daily weather and pollen generator.
///
/// Temperature is a seasonal cycle plus a persistent per-year anomaly and a
/// daily AR(1) anomaly. The pollen season opens when growing degree days
/// (base `gdd_base`) accumulated since Jan 1 pass a per-year requirement, so
/// the covariate history carries real information about the onset date.
struct GeneratorProfile {
    int start_year = 2003;

    // temperature, degrees C
    double temp_mean = 9.5;
    double temp_amplitude = 11.0;
    int coldest_day = 20;
    double year_anomaly_sd = 1.6;
    double daily_anomaly_sd = 2.2;
    double daily_anomaly_ar = 0.85;
    double diurnal_range = 9.0;
    double soil_lag_days = 20.0;

    // onset and season shape
    double gdd_base = 5.0;
    double onset_gdd_mean = 220.0;
    double onset_gdd_sd = 12.0;
    double season_length_mean = 70.0;
    double season_length_sd = 35.0;
    double min_season_length = 20.0;
    double max_season_length = 160.0;
    double preseason_ramp_days = 7.0;
    double peak_pollen_log_mean = 6.0;
    double peak_pollen_log_sd = 0.3;
    double background_pollen = 4.0;
    double pollen_noise_log_sd = 0.35;
    double rain_washout = 0.4;

    // precipitation and the remaining covariates
    double rain_probability = 0.3;
    double rain_mean_mm = 6.0;
    double wind_mean = 3.2;
    double pressure_mean = 1013.0;

    void validate() const;
};

GeneratorProfile load_profile(const std::filesystem::path& path);
GeneratorProfile profile_from_json(const std::string& text);
std::string profile_to_json(const GeneratorProfile& profile);

/// Deterministic given (seed, years, profile). Produces `years` complete
/// calendar years starting at `profile.start_year`.
Dataset generate_synthetic(std::uint64_t seed, int years, const GeneratorProfile& profile = {});

} // namespace pollen
