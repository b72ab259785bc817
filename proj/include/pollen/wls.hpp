#pragma once

#include "pollen/forecast.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pollen {

/// Guards the division in the z-intercept.
inline constexpr double kSlopeFloor = 1e-6;

/// Weighted straight-line fit y_hat ~ beta0 + beta1 * z with weights
/// 1/u_hat^2.
///
/// Weights are rescaled to sum to N before any moment is taken, so z_mean,
/// z_spread and sigma0_sq reduce to their unweighted forms under uniform
/// weights and are unchanged when all weights are scaled together.
struct WLSFit {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double var_beta0 = 0.0;
    double var_beta1 = 0.0;
    /// Weighted mean squared residual of the fit.
    double sigma0_sq = 0.0;
    /// sigma0_sq / N.
    double sigma_prime_sq = 0.0;
    std::size_t n_points = 0;
    double z_mean = 0.0;
    /// Weighted sum of squared deviations of z about z_mean.
    double z_spread = 0.0;
    std::vector<double> weights_used;
};

/// Fits the line through (z, y_hat) with weights 1/u_hat^2.
WLSFit fit_wls(std::span<const PredictionPoint> points);
/// Same fit with explicit positive weights.
WLSFit fit_wls(std::span<const double> z, std::span<const double> y, std::span<const double> weights);

/// Fills var_beta0, var_beta1 and sigma_prime_sq from sigma0_sq, n_points,
/// z_mean and z_spread.
void assign_coefficient_variances(WLSFit& fit);

struct FinalForecast {
    double y_star = 0.0;
    double sigma_y_star = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    std::size_t n_points = 0;
};

/// z-intercept of the fitted line and its propagated standard deviation
///
///   sigma(y*) = |beta0 / beta1| * sqrt(var_beta0 / beta0^2 + var_beta1 / beta1^2)
///
/// evaluated in the equivalent form sqrt(var_beta0 / beta1^2 + beta0^2 var_beta1 / beta1^4),
/// which stays defined at beta0 = 0. No covariance term is included.
FinalForecast final_forecast(const WLSFit& fit);

std::string final_forecast_json(const FinalForecast& forecast);

/// Ratio of the fused variance to the single-prediction variance for N
/// consecutive prediction days z_start, ..., z_start + N - 1.
double threshold_function(double beta0, double beta1, int n, double z_start);

struct ThresholdAnalysis {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double z_start = 0.0;
    std::vector<std::pair<int, double>> table;  // (N, f_th(N)) for N = 2..N_max
    std::optional<int> min_days;                 // smallest N with f_th(N) < 1
};

ThresholdAnalysis min_days(double beta0, double beta1, double z_start, int n_max);

/// CSV with header `N,f_th`.
void export_threshold_csv(const ThresholdAnalysis& analysis, std::ostream& out);

struct IdentityCheck {
    double lhs = 0.0;  // threshold_function
    double rhs = 0.0;  // propagated variance ratio sigma^2(y*) / sigma0^2
};

/// Evaluates the threshold function and, separately, the variance of y*
/// propagated from the coefficient variances with sigma'^2 = sigma0^2 / N.
IdentityCheck propagation_identity_check(double beta0, double beta1, int n, double z_start, double sigma0);

struct MonteCarloResult {
    std::size_t trials = 0;
    std::size_t degenerate_trials = 0;
    double empirical_sd = 0.0;
    double mean_y_star = 0.0;
    double mean_reported_sigma = 0.0;
};

/// Simulates y_hat_i = boundary - z_i + eps_i, eps_i ~ N(0, sigma0^2), fits
/// with uniform weights and reports the spread of y*. Trial t draws from
/// its own generator seeded by (seed, t).
MonteCarloResult monte_carlo_variance(double boundary, double sigma0, int n, double z_start, int trials,
                                      std::uint64_t seed);

} // namespace pollen
