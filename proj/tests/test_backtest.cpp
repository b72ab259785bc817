#include "helpers.hpp"

#include "pollen/backtest.hpp"
#include "pollen/synthetic.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

using namespace pollen;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const Dataset& synthetic8() {
    static const Dataset data = generate_synthetic(42, 8);
    return data;
}

BacktestConfig small_config() {
    BacktestConfig cfg;
    const auto years = synthetic8().full_years();
    cfg.folds = expanding_folds(years, 2);
    cfg.stage1.n_trees = 40;
    cfg.stage2.n_trees = 20;
    return cfg;
}

const BacktestReport& small_report() {
    static const BacktestReport report = rolling_backtest(synthetic8(), small_config());
    return report;
}

} // namespace

TEST_CASE("mean absolute error") {
    CHECK(mae(std::vector<double>{52, 49}, std::vector<double>{51, 51}) == 1.5);
    CHECK(mae(std::vector<double>{54}, std::vector<double>{51}) == 3.0);
    CHECK(mae(std::vector<double>{3, 4}, std::vector<double>{3, 4}) == 0.0);
    CHECK_KIND(mae(std::vector<double>{}, std::vector<double>{}), ErrorKind::Empty);
    CHECK_KIND(mae(std::vector<double>{1}, std::vector<double>{1, 2}), ErrorKind::LengthMismatch);
}

TEST_CASE("expanding folds") {
    const std::vector<int> years{2001, 2002, 2003, 2004, 2005};
    const auto folds = expanding_folds(years, 2);
    REQUIRE(folds.size() == 2);
    CHECK(folds[0].test_year == 2004);
    CHECK(folds[0].train_years == std::vector<int>{2001, 2002, 2003});
    CHECK(folds[1].train_years.size() == 4);
    CHECK_KIND(expanding_folds(years, 4), ErrorKind::FoldConfigInvalid);
}

TEST_CASE("configuration checks") {
    BacktestConfig cfg;
    CHECK_KIND(cfg.validate(), ErrorKind::FoldConfigInvalid);
    cfg.folds = {{{2001, 2002}, 2002}};
    CHECK_KIND(cfg.validate(), ErrorKind::FoldConfigInvalid);
    cfg.folds = {{{2001, 2002}, 2003}};
    cfg.validate();
    cfg.z_range.lead_days = 59;
    CHECK_KIND(cfg.validate(), ErrorKind::FoldConfigInvalid);
}

TEST_CASE("convergence trace") {
    ForecastSeries s{2001, Boundary::Start, {}};
    for (int z = 10; z < 20; ++z) s.points.push_back({z, 30.0 - z, 1.0});
    const auto trace = convergence_trace(s, 4);
    REQUIRE(trace.size() == 10);
    CHECK_FALSE(trace[0].y_star.has_value());
    CHECK(trace[1].y_star.has_value());
    CHECK(*trace[9].y_star == doctest::Approx(30.0));
    CHECK_FALSE(trace[2].reduces_uncertainty);
    CHECK(trace[3].reduces_uncertainty);
    CHECK(trace[9].z == 19);

    ForecastSeries flat{2001, Boundary::Start, {{1, 5.0, 1.0}, {2, 5.0, 1.0}, {3, 4.0, 1.0}}};
    const auto t2 = convergence_trace(flat, std::nullopt);
    CHECK_FALSE(t2[1].y_star.has_value());
    CHECK(t2[2].y_star.has_value());
}

TEST_CASE("rolling backtest on a short synthetic record") {
    const auto& report = small_report();
    REQUIRE(report.folds.size() == 2);
    std::vector<double> stars, truths;
    for (const auto& f : report.folds) {
        CHECK(f.abs_error == std::abs(f.y_star - f.truth));
        CHECK(f.trace.size() == f.series.points.size());
        CHECK(f.series.points.size() == 60);
        CHECK(f.series.points.back().z == f.truth);
        CHECK(f.sigma_y_star >= 0.0);
        stars.push_back(f.y_star);
        truths.push_back(f.truth);
    }
    CHECK(report.mae == mae(stars, truths));
    CHECK(report.folds[0].test_year == synthetic8().full_years()[6]);
}

TEST_CASE("report files") {
    const auto dir = std::filesystem::temp_directory_path() / "pollen_backtest_test";
    std::filesystem::remove_all(dir);
    const auto files = emit_report(small_report(), dir / "a");
    CHECK(files.size() == 2 + small_report().folds.size());
    for (const auto& f : files) CHECK(std::filesystem::exists(f));
    const auto again = emit_report(rolling_backtest(synthetic8(), small_config()), dir / "b");
    for (std::size_t i = 0; i < files.size(); ++i) CHECK(slurp(files[i]) == slurp(again[i]));

    const auto doc = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
    CHECK(doc.at("folds").size() == 2);
    CHECK(doc.at("mae") == small_report().mae);
    const auto conv = slurp(files[2]);
    CHECK(conv.rfind("k,y_star,sigma_y_star,reduces_uncertainty\n1,,,", 0) == 0);

    CHECK_KIND(emit_report(BacktestReport{}, dir / "c"), ErrorKind::Empty);
    std::filesystem::remove_all(dir);
}

TEST_CASE("missing label is reported before fitting") {
    std::vector<double> p(1096, 0.0);
    const auto data = testing::pollen_only(2011, p);
    BacktestConfig cfg;
    cfg.folds = {{{2011, 2012}, 2013}};
    CHECK_KIND(rolling_backtest(data, cfg), ErrorKind::MissingLabel);
}
