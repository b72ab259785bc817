#include "pollen/wls.hpp"

#include "pollen/error.hpp"
#include "pollen/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace pollen {

void assign_coefficient_variances(WLSFit& fit) {
    const double n = static_cast<double>(fit.n_points);
    fit.sigma_prime_sq = fit.sigma0_sq / n;
    fit.var_beta0 = fit.sigma_prime_sq * (1.0 / n + fit.z_mean * fit.z_mean / fit.z_spread);
    fit.var_beta1 = fit.sigma_prime_sq / fit.z_spread;
}

WLSFit fit_wls(std::span<const double> z, std::span<const double> y, std::span<const double> weights) {
    if (z.size() != y.size() || z.size() != weights.size())
        fail(ErrorKind::LengthMismatch, "z, y and weights must have equal length");
    const std::size_t count = z.size();
    if (count < 2) fail(ErrorKind::TooFewPoints, "weighted regression needs at least two points");
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(z[i]) || !std::isfinite(y[i])) fail(ErrorKind::NonFinite, "non-finite regression input");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            fail(ErrorKind::NonPositiveWeight, "weights must be positive and finite");
    }
    if (std::all_of(z.begin(), z.end(), [&](double v) { return v == z[0]; }))
        fail(ErrorKind::DegenerateDesign, "all prediction days are identical");

    const double n = static_cast<double>(count);
    const double weight_total = std::accumulate(weights.begin(), weights.end(), 0.0);

    WLSFit fit;
    fit.n_points = count;
    fit.weights_used.resize(count);
    for (std::size_t i = 0; i < count; ++i) fit.weights_used[i] = weights[i] * n / weight_total;
    const auto& w = fit.weights_used;

    double z_sum = 0.0, y_sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        z_sum += w[i] * z[i];
        y_sum += w[i] * y[i];
    }
    fit.z_mean = z_sum / n;
    const double y_mean = y_sum / n;

    double szz = 0.0, szy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double dz = z[i] - fit.z_mean;
        szz += w[i] * dz * dz;
        szy += w[i] * dz * (y[i] - y_mean);
    }
    if (!(szz > 0.0)) fail(ErrorKind::DegenerateDesign, "prediction days carry no spread");
    fit.z_spread = szz;
    fit.beta1 = szy / szz;
    fit.beta0 = y_mean - fit.beta1 * fit.z_mean;

    double rss = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double r = y[i] - fit.beta0 - fit.beta1 * z[i];
        rss += w[i] * r * r;
    }
    fit.sigma0_sq = rss / n;
    assign_coefficient_variances(fit);
    return fit;
}

WLSFit fit_wls(std::span<const PredictionPoint> points) {
    std::vector<double> z, y, w;
    z.reserve(points.size());
    y.reserve(points.size());
    w.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.u_hat > 0.0) || !std::isfinite(p.u_hat))
            fail(ErrorKind::NonPositiveWeight, "u_hat must be positive to form a weight");
        z.push_back(static_cast<double>(p.z));
        y.push_back(p.y_hat);
        w.push_back(1.0 / (p.u_hat * p.u_hat));
    }
    return fit_wls(z, y, w);
}

FinalForecast final_forecast(const WLSFit& fit) {
    if (!(std::abs(fit.beta1) > kSlopeFloor))
        fail(ErrorKind::DegenerateSlope, "fitted slope " + format_number(fit.beta1) +
                                             " is too flat to extract a z-intercept");
    FinalForecast out;
    out.beta0 = fit.beta0;
    out.beta1 = fit.beta1;
    out.n_points = fit.n_points;
    out.y_star = -fit.beta0 / fit.beta1;
    const double b1_sq = fit.beta1 * fit.beta1;
    const double variance = fit.var_beta0 / b1_sq + fit.beta0 * fit.beta0 * fit.var_beta1 / (b1_sq * b1_sq);
    out.sigma_y_star = std::sqrt(std::max(0.0, variance));
    return out;
}

std::string final_forecast_json(const FinalForecast& f) {
    nlohmann::json doc{{"y_star", f.y_star},
                       {"sigma_y_star", f.sigma_y_star},
                       {"beta0", f.beta0},
                       {"beta1", f.beta1},
                       {"n_points", f.n_points}};
    return doc.dump(2);
}

namespace {

struct ConsecutiveDays {
    double mean;
    double spread;
};

ConsecutiveDays consecutive_days(int n, double z_start) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += z_start + i;
    const double mean = sum / n;
    double spread = 0.0;
    for (int i = 0; i < n; ++i) spread += (z_start + i - mean) * (z_start + i - mean);
    return {mean, spread};
}

void check_threshold_args(double beta0, double beta1, int n, double z_start) {
    if (n < 2) fail(ErrorKind::InvalidArgument, "N must be >= 2");
    if (!std::isfinite(beta0) || !std::isfinite(beta1) || !std::isfinite(z_start))
        fail(ErrorKind::NonFinite, "threshold arguments must be finite");
    if (beta1 == 0.0) fail(ErrorKind::ZeroSlope, "beta1 must be non-zero");
}

} // namespace

double threshold_function(double beta0, double beta1, int n, double z_start) {
    check_threshold_args(beta0, beta1, n, z_start);
    const auto [mean, spread] = consecutive_days(n, z_start);
    const double b1_sq = beta1 * beta1;
    return 1.0 / (n * b1_sq) * (1.0 / n + mean * mean / spread + (beta0 * beta0 / b1_sq) / spread);
}

ThresholdAnalysis min_days(double beta0, double beta1, double z_start, int n_max) {
    if (n_max < 2) fail(ErrorKind::InvalidArgument, "N_max must be >= 2");
    ThresholdAnalysis out{beta0, beta1, z_start, {}, std::nullopt};
    for (int n = 2; n <= n_max; ++n) {
        const double f = threshold_function(beta0, beta1, n, z_start);
        out.table.emplace_back(n, f);
        if (!out.min_days && f < 1.0) out.min_days = n;
    }
    return out;
}

void export_threshold_csv(const ThresholdAnalysis& analysis, std::ostream& out) {
    out << "N,f_th\n";
    for (const auto& [n, f] : analysis.table) out << n << ',' << format_number(f) << '\n';
}

IdentityCheck propagation_identity_check(double beta0, double beta1, int n, double z_start, double sigma0) {
    check_threshold_args(beta0, beta1, n, z_start);
    if (!(sigma0 > 0.0)) fail(ErrorKind::InvalidArgument, "sigma0 must be positive");

    const auto [mean, spread] = consecutive_days(n, z_start);
    WLSFit fit;
    fit.beta0 = beta0;
    fit.beta1 = beta1;
    fit.n_points = static_cast<std::size_t>(n);
    fit.z_mean = mean;
    fit.z_spread = spread;
    fit.sigma0_sq = sigma0 * sigma0;
    assign_coefficient_variances(fit);

    // sigma(y*) exactly as the relative-variance sum when beta0 != 0.
    double sigma_y;
    if (beta0 != 0.0) {
        sigma_y = std::abs(beta0 / beta1) *
                  std::sqrt(fit.var_beta0 / (beta0 * beta0) + fit.var_beta1 / (beta1 * beta1));
    } else {
        sigma_y = std::sqrt(fit.var_beta0) / std::abs(beta1);
    }
    return {threshold_function(beta0, beta1, n, z_start), sigma_y * sigma_y / fit.sigma0_sq};
}

MonteCarloResult monte_carlo_variance(double boundary, double sigma0, int n, double z_start, int trials,
                                      std::uint64_t seed) {
    if (trials < 100) fail(ErrorKind::InvalidArgument, "trials must be >= 100");
    if (n < 2) fail(ErrorKind::InvalidArgument, "N must be >= 2");
    if (!(sigma0 >= 0.0) || !std::isfinite(sigma0) || !std::isfinite(boundary) || !std::isfinite(z_start))
        fail(ErrorKind::InvalidArgument, "boundary, sigma0 and z_start must be finite with sigma0 >= 0");

    std::vector<double> z(static_cast<std::size_t>(n)), y(z.size()), w(z.size(), 1.0);
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = z_start + i;

    MonteCarloResult out;
    out.trials = static_cast<std::size_t>(trials);
    std::vector<double> stars;
    double reported = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t i = 0; i < z.size(); ++i) y[i] = boundary - z[i] + sigma0 * noise(rng);
        const auto fit = fit_wls(z, y, w);
        if (!(std::abs(fit.beta1) > kSlopeFloor)) {
            ++out.degenerate_trials;
            continue;
        }
        const auto f = final_forecast(fit);
        stars.push_back(f.y_star);
        reported += f.sigma_y_star;
    }
    if (stars.size() < 2) fail(ErrorKind::InsufficientData, "too few non-degenerate Monte Carlo trials");
    const double k = static_cast<double>(stars.size());
    out.mean_y_star = std::accumulate(stars.begin(), stars.end(), 0.0) / k;
    double ss = 0.0;
    for (double s : stars) ss += (s - out.mean_y_star) * (s - out.mean_y_star);
    out.empirical_sd = std::sqrt(ss / (k - 1.0));
    out.mean_reported_sigma = reported / k;
    return out;
}

} // namespace pollen
