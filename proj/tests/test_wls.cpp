#include "helpers.hpp"

#include "pollen/wls.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>
#include "pollen/text.hpp"

using namespace pollen;

namespace {

// Oracle: solve the 2x2 weighted normal equations directly.
std::pair<double, double> normal_equations(const std::vector<double>& z, const std::vector<double>& y,
                                           const std::vector<double>& w) {
    long double a = 0, b = 0, c = 0, d = 0, e = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        a += w[i];
        b += w[i] * z[i];
        c += w[i] * z[i] * z[i];
        d += w[i] * y[i];
        e += w[i] * z[i] * y[i];
    }
    const long double det = a * c - b * b;
    return {static_cast<double>((c * d - b * e) / det), static_cast<double>((a * e - b * d) / det)};
}

double direct_threshold(double b0, double b1, int n, double z0) {
    double zbar = 0.0;
    for (int i = 0; i < n; ++i) zbar += (z0 + i) / n;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (z0 + i - zbar) * (z0 + i - zbar);
    return (1.0 / n + zbar * zbar / s + (b0 * b0) / (b1 * b1) / s) / (n * b1 * b1);
}

} // namespace

TEST_CASE("exact line") {
    std::vector<PredictionPoint> pts;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.3, 9.0);
    for (int z = 0; z < 12; ++z) pts.push_back({z, 10.0 - z, u(rng)});
    const auto fit = fit_wls(pts);
    CHECK(fit.beta0 == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(fit.beta1 == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fit.sigma0_sq == doctest::Approx(0.0).epsilon(1e-20));
    const auto f = final_forecast(fit);
    CHECK(f.y_star == doctest::Approx(10.0));
    CHECK(f.sigma_y_star == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("uniform weights reproduce the covariance closed form") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 4.0);
    for (int t = 0; t < 100; ++t) {
        const int n = 3 + t % 60;
        std::vector<double> z, y, w(static_cast<std::size_t>(n), 2.5);
        for (int i = 0; i < n; ++i) {
            z.push_back(30.0 + i + (t % 3 == 0 ? 0.5 * i : 0.0));
            y.push_back(70.0 - z.back() + g(rng));
        }
        double ez = 0, ey = 0;
        for (int i = 0; i < n; ++i) {
            ez += z[static_cast<std::size_t>(i)] / n;
            ey += y[static_cast<std::size_t>(i)] / n;
        }
        double cov = 0, var = 0;
        for (int i = 0; i < n; ++i) {
            cov += (z[static_cast<std::size_t>(i)] - ez) * (y[static_cast<std::size_t>(i)] - ey) / n;
            var += (z[static_cast<std::size_t>(i)] - ez) * (z[static_cast<std::size_t>(i)] - ez) / n;
        }
        const auto fit = fit_wls(z, y, w);
        CHECK(fit.beta1 == doctest::Approx(cov / var).epsilon(1e-10));
        CHECK(fit.beta0 == doctest::Approx(ey - cov / var * ez).epsilon(1e-10));
    }
}

TEST_CASE("weighted fit matches the normal equations") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 3.0);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> z, y, w;
        for (int i = 0; i < 50; ++i) {
            z.push_back(80.0 + i);
            y.push_back(140.0 - z.back() + g(rng));
            w.push_back(u(rng));
        }
        const auto [b0, b1] = normal_equations(z, y, w);
        const auto fit = fit_wls(z, y, w);
        CHECK(fit.beta0 == doctest::Approx(b0).epsilon(1e-10));
        CHECK(fit.beta1 == doctest::Approx(b1).epsilon(1e-10));

        // Weight-scale invariance and shift equivariance.
        std::vector<double> w2 = w, z2 = z;
        for (auto& v : w2) v *= 17.0;
        const auto scaled = fit_wls(z, y, w2);
        CHECK(scaled.beta0 == doctest::Approx(fit.beta0).epsilon(1e-12));
        CHECK(scaled.beta1 == doctest::Approx(fit.beta1).epsilon(1e-12));
        CHECK(scaled.var_beta0 == doctest::Approx(fit.var_beta0).epsilon(1e-12));
        for (auto& v : z2) v += 9.0;
        const auto shifted = fit_wls(z2, y, w);
        CHECK(final_forecast(shifted).y_star == doctest::Approx(final_forecast(fit).y_star + 9.0).epsilon(1e-12));
    }
}

TEST_CASE("coefficient variances") {
    std::vector<double> z{0, 1, 2, 3}, y{1, 0, 2, 1}, w{1, 1, 1, 1};
    const auto fit = fit_wls(z, y, w);
    // z_mean 1.5, spread 5, slope 0.2, intercept 0.7, residuals .3 -.9 .9 -.3
    CHECK(fit.z_mean == 1.5);
    CHECK(fit.z_spread == 5.0);
    CHECK(fit.sigma0_sq == doctest::Approx(1.8 / 4.0));
    CHECK(fit.sigma_prime_sq == doctest::Approx(1.8 / 16.0));
    CHECK(fit.var_beta0 == doctest::Approx(1.8 / 16.0 * (0.25 + 2.25 / 5.0)));
    CHECK(fit.var_beta1 == doctest::Approx(1.8 / 16.0 / 5.0));
    const auto f = final_forecast(fit);
    CHECK(f.y_star == doctest::Approx(-3.5));
    const double rel = std::sqrt(fit.var_beta0 / (0.7 * 0.7) + fit.var_beta1 / (0.2 * 0.2));
    CHECK(f.sigma_y_star == doctest::Approx(3.5 * rel).epsilon(1e-12));
}

TEST_CASE("fit errors") {
    std::vector<double> one{1};
    CHECK_KIND(fit_wls(one, one, one), ErrorKind::TooFewPoints);
    std::vector<double> z{2, 2, 2}, y{1, 2, 3}, w{1, 1, 1}, bad_w{1, 0, 1};
    CHECK_KIND(fit_wls(z, y, w), ErrorKind::DegenerateDesign);
    std::vector<double> z2{1, 2, 3};
    CHECK_KIND(fit_wls(z2, y, bad_w), ErrorKind::NonPositiveWeight);
    CHECK_KIND(fit_wls(z2, one, w), ErrorKind::LengthMismatch);
    std::vector<double> flat{5, 5, 5};
    CHECK_KIND(final_forecast(fit_wls(z2, flat, w)), ErrorKind::DegenerateSlope);
    std::vector<PredictionPoint> zero_u{{1, 1, 0.0}, {2, 0, 1.0}};
    CHECK_KIND(fit_wls(zero_u), ErrorKind::NonPositiveWeight);
}

TEST_CASE("final forecast JSON") {
    FinalForecast f{10.0, 0.5, 10.0, -1.0, 12};
    const auto doc = nlohmann::json::parse(final_forecast_json(f));
    CHECK(doc.at("y_star") == 10.0);
    CHECK(doc.at("n_points") == 12);
}

TEST_CASE("threshold function values") {
    CHECK(threshold_function(0, 1, 2, 0) == doctest::Approx(0.5));
    for (int n = 2; n < 30; ++n) {
        const double closed = 1.0 / (n * n) + 3.0 * (n - 1) / (n * n * (n + 1.0));
        CHECK(threshold_function(0, 1, n, 0) == doctest::Approx(closed).epsilon(1e-12));
    }
    CHECK(threshold_function(10, 1, 6, 0) >= 1.0);
    CHECK(threshold_function(10, 1, 7, 0) < 1.0);
    CHECK_KIND(threshold_function(1, 0, 5, 0), ErrorKind::ZeroSlope);
    CHECK_KIND(threshold_function(1, 1, 1, 0), ErrorKind::InvalidArgument);
}

TEST_CASE("minimum days and table semantics") {
    CHECK(min_days(0, 1, 0, 100).min_days == 2);
    const auto a = min_days(10, 1, 0, 100);
    CHECK(a.min_days == 7);
    CHECK(a.table.size() == 99);
    for (std::size_t i = 1; i < a.table.size(); ++i) REQUIRE(a.table[i].second < a.table[i - 1].second);
    for (const auto& [n, f] : a.table) {
        CHECK(f == doctest::Approx(direct_threshold(10, 1, n, 0)).epsilon(1e-12));
        CHECK((n >= *a.min_days) == (f < 1.0));
    }
    CHECK_FALSE(min_days(1000, 1, 0, 5).min_days.has_value());
    std::ostringstream csv;
    export_threshold_csv(min_days(0, 1, 0, 3), csv);
    CHECK(csv.str() == "N,f_th\n2,0.5\n3," + format_number(threshold_function(0, 1, 3, 0)) + "\n");
}

TEST_CASE("threshold grows with |beta0|") {
    for (int n : {3, 10, 40})
        for (double b0 = 0.0; b0 < 50.0; b0 += 5.0) {
            CHECK(threshold_function(b0 + 5.0, 1, n, 0) > threshold_function(b0, 1, n, 0));
            CHECK(threshold_function(-(b0 + 5.0), 1, n, 0) == threshold_function(b0 + 5.0, 1, n, 0));
        }
}

TEST_CASE("propagation identity") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> b0(-80, 80), b1(0.2, 3), z0(-20, 150), s0(0.1, 10);
    std::uniform_int_distribution<int> n(2, 120);
    for (int t = 0; t < 200; ++t) {
        const double beta1 = t % 2 ? b1(rng) : -b1(rng);
        const auto c = propagation_identity_check(b0(rng), beta1, n(rng), z0(rng), s0(rng));
        CHECK(std::abs(c.lhs - c.rhs) <= 1e-12 * std::max(1.0, c.lhs));
    }
    const auto seven = propagation_identity_check(10, 1, 7, 0, 5);
    CHECK(seven.lhs == doctest::Approx(seven.rhs).epsilon(1e-12));
    CHECK(seven.lhs < 1.0);
    CHECK(propagation_identity_check(10, 1, 7, 0, 0.5).rhs == doctest::Approx(seven.rhs).epsilon(1e-12));
}

TEST_CASE("Monte Carlo spread") {
    const auto noiseless = monte_carlo_variance(60, 0.0, 10, 1, 100, 1);
    CHECK(noiseless.empirical_sd == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(noiseless.mean_y_star == doctest::Approx(60.0));
    const auto r = monte_carlo_variance(60, 5, 40, 1, 2000, 7);
    CHECK(r.trials == 2000);
    CHECK(r.empirical_sd < 5.0);
    CHECK(r.mean_y_star == doctest::Approx(60.0).epsilon(0.02));
    CHECK(monte_carlo_variance(60, 5, 20, 1, 300, 3).empirical_sd ==
          monte_carlo_variance(60, 5, 20, 1, 300, 3).empirical_sd);
    CHECK_KIND(monte_carlo_variance(60, 5, 20, 1, 99, 3), ErrorKind::InvalidArgument);
}
