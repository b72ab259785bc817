// pollenfc: command-line front end for the pollen season forecaster.

#include "pollen/backtest.hpp"
#include "pollen/data_core.hpp"
#include "pollen/error.hpp"
#include "pollen/pipeline.hpp"
#include "pollen/synthetic.hpp"
#include "pollen/text.hpp"
#include "pollen/wls.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace pollen;

constexpr int kExitRuntime = 2;
constexpr int kExitUsage = 64;

// Reads --config files written as nested JSON objects: top-level keys are
// global options, and an object keyed by a subcommand name holds that
// subcommand's options.
class ConfigJSON : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames()[0];
            if (opt->count() > 0) {
                const auto& results = opt->results();
                j[name] = results.size() == 1 ? nlohmann::json(results[0]) : nlohmann::json(results);
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            const auto nested = nlohmann::json::parse(to_config(sub, default_also, false, ""));
            if (!nested.empty()) j[sub->get_name()] = nested;
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v, const std::string& key) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        if (v.is_number()) return v.dump();
        throw CLI::ConversionError("config value for '" + key + "' must be a string, number or boolean");
    }

    static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items) {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                collect(value, nested, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(scalar(v, key));
            } else {
                item.inputs.push_back(scalar(value, key));
            }
            items.push_back(std::move(item));
        }
    }
};

struct Globals {
    std::uint64_t seed = 42;
    bool verbose = false;
};

Globals globals;

void log(const std::string& message) {
    if (globals.verbose) std::cerr << "pollenfc: " << message << '\n';
}

struct SeasonOptions {
    double delta_c = 120.0;
    int delta_n = 4;

    void add(CLI::App* cmd) {
        cmd->add_option("--delta-c", delta_c, "Pollen concentration above which a day is typical")
            ->capture_default_str();
        cmd->add_option("--delta-n", delta_n, "Typical days needed in a 7-day window")
            ->check(CLI::Range(1, 7))
            ->capture_default_str();
    }
    SeasonDefinition definition() const {
        SeasonDefinition def{delta_c, delta_n};
        def.validate();
        return def;
    }
};

struct ModelOptions {
    std::string boundary = "start";
    int horizon = kDefaultHorizon;
    std::string protocol = "leave-one-year-out";
    double u_floor = kDefaultUFloor;
    bool no_doy = false;
    GBMConfig gbm;

    void add(CLI::App* cmd) {
        cmd->add_option("--boundary", boundary, "Season boundary to forecast")
            ->check(CLI::IsMember({"start", "end"}))
            ->capture_default_str();
        cmd->add_option("--horizon", horizon, "Days before the boundary covered by training rows")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--protocol", protocol, "Stage-2 residual protocol")
            ->check(CLI::IsMember({"leave-one-year-out", "loyo", "disjoint-block", "block"}))
            ->capture_default_str();
        cmd->add_option("--u-floor", u_floor, "Lower clamp on predicted uncertainty (days)")->capture_default_str();
        cmd->add_flag("--no-doy", no_doy, "Leave day-of-year out of the feature vector");
        cmd->add_option("--trees", gbm.n_trees, "Boosting rounds per stage")->capture_default_str();
        cmd->add_option("--depth", gbm.max_depth, "Maximum tree depth")->capture_default_str();
        cmd->add_option("--learning-rate", gbm.learning_rate, "Shrinkage per tree")->capture_default_str();
        cmd->add_option("--min-leaf", gbm.min_samples_leaf, "Minimum rows per leaf")->capture_default_str();
        cmd->add_option("--subsample", gbm.subsample_fraction, "Row fraction sampled per tree")
            ->capture_default_str();
    }
    GBMConfig learner() const {
        GBMConfig c = gbm;
        c.seed = globals.seed;
        return c;
    }
};

Dataset load(const std::string& path) {
    auto result = ingest_csv(path);
    log("read " + std::to_string(result.report.rows_read) + " rows from " + path + ", forward-filled " +
        std::to_string(result.report.filled_dates.size()) + " days");
    return std::move(result.data);
}

template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::IoError, "cannot write " + path);
    write(out);
    if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<int> labeled_years(const Dataset& data, const SeasonDefinition& def) {
    std::vector<int> years;
    for (const auto& label : label_all(data, def))
        if (label.present()) years.push_back(label.year);
    return years;
}

// --- synth -----------------------------------------------------------------

struct SynthCommand {
    int years = 17;
    std::string profile;
    std::string out;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("synth", "Generate a synthetic daily dataset");
        cmd->add_option("--years", years, "Number of calendar years")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--profile", profile, "Generator profile JSON")->check(CLI::ExistingFile);
        cmd->add_option("-o,--out", out, "Output CSV ('-' for stdout)")->required();
        cmd->callback([this] { run(); });
    }
    void run() const {
        const GeneratorProfile p = profile.empty() ? GeneratorProfile{} : load_profile(profile);
        const auto data = generate_synthetic(globals.seed, years, p);
        with_output(out, [&](std::ostream& os) { emit_csv(data, os); });
        log("wrote " + std::to_string(data.size()) + " days");
    }
};

// --- label -----------------------------------------------------------------

struct LabelCommand {
    std::string data;
    std::string out;
    SeasonOptions season;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("label", "Label the allergy season of every full year");
        cmd->add_option("-d,--data", data, "Input daily CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("-o,--out", out, "Output CSV ('-' for stdout)");
        season.add(cmd);
        cmd->callback([this] { run(); });
    }
    void run() const {
        const auto labels = label_all(load(data), season.definition());
        with_output(out, [&](std::ostream& os) {
            os << "year,start_day,end_day,length_days\n";
            auto cell = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string{}; };
            for (const auto& l : labels)
                os << l.year << ',' << cell(l.start_day) << ',' << cell(l.end_day) << ',' << cell(l.length_days)
                   << '\n';
        });
        const auto present = std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.present(); });
        if (present >= 2) {
            const auto s = season_stats(labels);
            log("seasons " + std::to_string(s.seasons) + ", start sd " + format_number(s.start_sd) + ", end sd " +
                format_number(s.end_sd) + ", length sd " + format_number(s.length_sd));
        }
    }
};

// --- train -----------------------------------------------------------------

struct TrainCommand {
    std::string data;
    std::string model;
    std::vector<int> years;
    SeasonOptions season;
    ModelOptions options;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Fit the Stage-1 and Stage-2 models");
        cmd->add_option("-d,--data", data, "Input daily CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("-m,--model", model, "Output model JSON")->required();
        cmd->add_option("--years", years, "Training years (default: every labeled full year)");
        season.add(cmd);
        options.add(cmd);
        cmd->callback([this] { run(); });
    }
    void run() const {
        const auto dataset = load(data);
        TrainConfig tc;
        tc.def = season.definition();
        tc.boundary = parse_boundary(options.boundary);
        tc.horizon = options.horizon;
        tc.years = years.empty() ? labeled_years(dataset, tc.def) : years;
        tc.stage1 = options.learner();
        tc.stage2 = options.learner();
        tc.protocol = parse_protocol(options.protocol);
        tc.u_floor = options.u_floor;
        tc.include_doy = !options.no_doy;
        log("training on " + std::to_string(tc.years.size()) + " years");
        const auto trained = train_forecaster(dataset, tc);
        with_output(model, [&](std::ostream& os) { os << forecaster_to_json(trained) << '\n'; });
    }
};

// --- predict ---------------------------------------------------------------

struct PredictCommand {
    std::string data;
    std::string model;
    int year = 0;
    std::optional<int> from_day;
    std::optional<int> to_day;
    int lead = 0;
    std::string series_out;
    std::string forecast_out;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("predict", "Forecast the season boundary of one year");
        cmd->add_option("-d,--data", data, "Input daily CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("-m,--model", model, "Model JSON from 'train'")->required()->check(CLI::ExistingFile);
        cmd->add_option("--year", year, "Year to forecast")->required();
        auto* from = cmd->add_option("--from-day", from_day, "First prediction day of year");
        auto* to = cmd->add_option("--to-day", to_day, "Last prediction day of year");
        from->needs(to);
        to->needs(from);
        cmd->add_option("--lead", lead, "Days before the labeled boundary where predictions stop")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd->add_option("--series-out", series_out, "CSV of per-day predictions (z,y_hat,u_hat)");
        cmd->add_option("-o,--out", forecast_out, "Final forecast JSON ('-' for stdout)");
        cmd->callback([this] { run(); });
    }
    void run() const {
        const auto dataset = load(data);
        const auto trained = forecaster_from_json(read_file(model));
        const auto& cfg = trained.config;
        int first = 0, last = 0;
        if (from_day) {
            first = *from_day;
            last = *to_day;
        } else {
            const auto label = label_season(dataset, cfg.def, year);
            if (!label.present())
                fail(ErrorKind::MissingLabel, "year " + std::to_string(year) +
                                                  " has no labeled season; pass --from-day and --to-day");
            const int truth = boundary_day(label, cfg.boundary);
            first = truth - cfg.horizon;
            last = truth - lead;
        }
        log("predicting days " + std::to_string(first) + ".." + std::to_string(last) + " of " + std::to_string(year));
        const FeatureContext ctx(dataset, trained.references, cfg.include_doy);
        const auto series = predict_series(trained.stage1, trained.stage2, ctx, year, first, last, cfg.boundary);
        if (!series_out.empty()) with_output(series_out, [&](std::ostream& os) { export_series_csv(series, os); });
        const auto forecast = final_forecast(fit_wls(series.points));
        with_output(forecast_out, [&](std::ostream& os) { os << final_forecast_json(forecast) << '\n'; });
    }
};

// --- backtest --------------------------------------------------------------

struct BacktestCommand {
    std::string data;
    std::string out;
    int folds = 5;
    int lead = 0;
    std::optional<int> from_day;
    std::optional<int> to_day;
    SeasonOptions season;
    ModelOptions options;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("backtest", "Rolling-origin evaluation over the last years");
        cmd->add_option("-d,--data", data, "Input daily CSV")->required()->check(CLI::ExistingFile);
        cmd->add_option("-o,--out", out, "Report directory")->required();
        cmd->add_option("--folds", folds, "Number of test years")->check(CLI::PositiveNumber)->capture_default_str();
        cmd->add_option("--lead", lead, "Days before the true boundary where predictions stop")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        auto* from = cmd->add_option("--from-day", from_day, "Fixed first prediction day (calendar policy)");
        auto* to = cmd->add_option("--to-day", to_day, "Fixed last prediction day (calendar policy)");
        from->needs(to);
        to->needs(from);
        season.add(cmd);
        options.add(cmd);
        cmd->callback([this] { run(); });
    }
    void run() const {
        const auto dataset = load(data);
        BacktestConfig cfg;
        cfg.def = season.definition();
        const auto years = dataset.full_years();
        cfg.folds = expanding_folds(years, folds);
        cfg.boundary = parse_boundary(options.boundary);
        cfg.horizon = options.horizon;
        cfg.stage1 = options.learner();
        cfg.stage2 = options.learner();
        cfg.protocol = parse_protocol(options.protocol);
        cfg.u_floor = options.u_floor;
        cfg.include_doy = !options.no_doy;
        if (from_day) {
            cfg.z_range.kind = ZRangePolicy::Kind::Calendar;
            cfg.z_range.first_day = *from_day;
            cfg.z_range.last_day = *to_day;
        } else {
            cfg.z_range.lead_days = lead;
        }
        log("running " + std::to_string(cfg.folds.size()) + " folds");
        const auto report = rolling_backtest(dataset, cfg);
        const auto files = emit_report(report, out);
        for (const auto& f : report.folds)
            log(std::to_string(f.test_year) + ": truth " + std::to_string(f.truth) + ", y* " + format_number(f.y_star) +
                " +/- " + format_number(f.sigma_y_star));
        std::cout << "mae " << format_number(report.mae) << "\nstage1_last_mae " << format_number(report.stage1_last_mae)
                  << "\n";
        log("wrote " + std::to_string(files.size()) + " files to " + out);
    }
};

// --- threshold -------------------------------------------------------------

struct ThresholdCommand {
    double beta0 = 0.0;
    double beta1 = 1.0;
    double z_start = 0.0;
    int n_max = 100;
    std::string out;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("threshold", "Tabulate the variance ratio against the number of days");
        cmd->add_option("--beta0", beta0, "Assumed intercept")->required();
        cmd->add_option("--beta1", beta1, "Assumed slope")->capture_default_str();
        cmd->add_option("--z-start", z_start, "First prediction day")->capture_default_str();
        cmd->add_option("--n-max", n_max, "Largest N tabulated")->check(CLI::Range(2, 100000))->capture_default_str();
        cmd->add_option("-o,--out", out, "Output CSV ('-' for stdout)");
        cmd->callback([this] { run(); });
    }
    void run() const {
        const auto analysis = min_days(beta0, beta1, z_start, n_max);
        with_output(out, [&](std::ostream& os) { export_threshold_csv(analysis, os); });
        const std::string n_n = analysis.min_days ? std::to_string(*analysis.min_days) : std::string("none");
        if (!out.empty() && out != "-") std::cout << "min_days " << n_n << "\n";
        else log("min_days " + n_n);
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pollen allergy season forecaster"};
    app.name("pollenfc");
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<ConfigJSON>());
    app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("--seed", globals.seed, "Seed for data generation and model fitting")->capture_default_str();
    app.add_flag("-v,--verbose", globals.verbose, "Log progress to stderr");

    SynthCommand synth;
    LabelCommand label;
    TrainCommand train;
    PredictCommand predict;
    BacktestCommand backtest;
    ThresholdCommand threshold;
    synth.add(app);
    label.add(app);
    train.add(app);
    predict.add(app);
    backtest.add(app);
    threshold.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        std::cerr << "run 'pollenfc --help' for usage\n";
        return kExitUsage;
    } catch (const pollen::Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
