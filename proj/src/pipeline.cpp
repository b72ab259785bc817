#include "pollen/pipeline.hpp"

#include "pollen/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace pollen {

using nlohmann::json;

FeatureContext::FeatureContext(const Dataset& data, const ReferenceThresholds& references, bool include_doy)
    : data_(&data), references_(references), include_doy_(include_doy),
      matrix_(build_feature_matrix(data, references)) {}

bool FeatureContext::has_window(int year, int z) const {
    if (z < 1 || z > days_in_year(year)) return false;
    return matrix_.row_of(date_from_doy(year, z)).has_value();
}

std::vector<double> FeatureContext::features(int year, int z) const {
    if (z < 1 || z > days_in_year(year))
        fail(ErrorKind::WindowUnavailable, "day " + std::to_string(z) + " is outside year " + std::to_string(year));
    const auto row = matrix_.row_of(date_from_doy(year, z));
    if (!row)
        fail(ErrorKind::WindowUnavailable, "no full 14-day window for " + format_date(date_from_doy(year, z)));
    return flatten_row(matrix_, *row, include_doy_);
}

int boundary_day(const SeasonLabel& label, Boundary boundary) {
    if (!label.present())
        fail(ErrorKind::MissingLabel, "year " + std::to_string(label.year) + " has no allergy season");
    return boundary == Boundary::Start ? *label.start_day : *label.end_day;
}

Stage1TrainingSet build_s1(const FeatureContext& ctx, const SeasonDefinition& def, std::span<const int> years,
                           Boundary boundary, int horizon) {
    if (horizon < 0) fail(ErrorKind::HorizonOutOfRange, "horizon must be >= 0");
    Stage1TrainingSet s1;
    for (int year : years) {
        const int b = boundary_day(label_season(ctx.data(), def, year), boundary);
        for (int z = b - horizon; z <= b; ++z) {
            if (!ctx.has_window(year, z))
                fail(ErrorKind::HorizonOutOfRange, "day " + std::to_string(z) + " of " + std::to_string(year) +
                                                       " (boundary " + std::to_string(b) +
                                                       ") has no usable feature window");
            s1.rows.push_row(ctx.features(year, z));
            s1.targets.push_back(static_cast<double>(b - z));
            s1.provenance.push_back({year, z});
        }
    }
    return s1;
}

Stage1Model fit_stage1(const Stage1TrainingSet& s1, const GBMConfig& cfg, TrainingCurve* curve) {
    auto result = fit(s1.rows, s1.targets, cfg, std::string(kCatalogVersion));
    if (curve) *curve = std::move(result.curve);
    return {std::move(result.model)};
}

std::string_view to_string(Stage2Protocol p) {
    return p == Stage2Protocol::LeaveOneYearOut ? "leave-one-year-out" : "disjoint-block";
}

Stage2Protocol parse_protocol(std::string_view text) {
    if (text == "leave-one-year-out" || text == "loyo") return Stage2Protocol::LeaveOneYearOut;
    if (text == "disjoint-block" || text == "block") return Stage2Protocol::DisjointBlock;
    fail(ErrorKind::InvalidArgument, "unknown stage-2 protocol '" + std::string(text) + "'");
}

namespace {

Stage1TrainingSet subset(const Stage1TrainingSet& all, const std::vector<int>& years) {
    Stage1TrainingSet out;
    for (std::size_t i = 0; i < all.provenance.size(); ++i) {
        if (std::find(years.begin(), years.end(), all.provenance[i].year) == years.end()) continue;
        out.rows.push_row(all.rows.row(i));
        out.targets.push_back(all.targets[i]);
        out.provenance.push_back(all.provenance[i]);
    }
    return out;
}

void score_rows(const Stage1TrainingSet& all, const std::vector<int>& scored_years, const std::vector<int>& fit_years,
                const GBMConfig& stage1_cfg, Stage2TrainingSet& out) {
    const auto model = fit_stage1(subset(all, fit_years), stage1_cfg);
    std::vector<double> row;
    for (std::size_t i = 0; i < all.provenance.size(); ++i) {
        if (std::find(scored_years.begin(), scored_years.end(), all.provenance[i].year) == scored_years.end())
            continue;
        const auto x = all.rows.row(i);
        const double y_hat = model.predict(x);
        row.assign(1, y_hat);
        row.insert(row.end(), x.begin(), x.end());
        out.rows.push_row(row);
        out.targets.push_back(std::abs(y_hat - all.targets[i]));
        out.provenance.push_back(all.provenance[i]);
        out.scorer_years.push_back(fit_years);
    }
}

} // namespace

Stage2TrainingSet build_s2(const FeatureContext& ctx, const SeasonDefinition& def, std::span<const int> years,
                           Boundary boundary, int horizon, Stage2Protocol protocol, const GBMConfig& stage1_cfg) {
    std::vector<int> sorted(years.begin(), years.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (sorted.size() < 2) fail(ErrorKind::TooFewYears, "stage-2 training needs at least two years");

    const auto all = build_s1(ctx, def, sorted, boundary, horizon);
    Stage2TrainingSet s2;
    if (protocol == Stage2Protocol::LeaveOneYearOut) {
        for (int held_out : sorted) {
            std::vector<int> others;
            std::copy_if(sorted.begin(), sorted.end(), std::back_inserter(others), [&](int y) { return y != held_out; });
            score_rows(all, {held_out}, others, stage1_cfg, s2);
        }
    } else {
        const auto half = static_cast<long>((sorted.size() + 1) / 2);
        std::vector<int> early(sorted.begin(), sorted.begin() + half);
        std::vector<int> late(sorted.begin() + half, sorted.end());
        score_rows(all, late, early, stage1_cfg, s2);
    }
    return s2;
}

double Stage2Model::predict(double y_hat, std::span<const double> features) const {
    std::vector<double> x;
    x.reserve(features.size() + 1);
    x.push_back(y_hat);
    x.insert(x.end(), features.begin(), features.end());
    return std::max(pollen::predict(model, x), u_floor);
}

Stage2Model fit_stage2(const Stage2TrainingSet& s2, const GBMConfig& cfg, double u_floor, TrainingCurve* curve) {
    if (!(u_floor > 0.0)) fail(ErrorKind::InvalidArgument, "u_floor must be positive");
    auto result = fit(s2.rows, s2.targets, cfg, std::string(kCatalogVersion));
    if (curve) *curve = std::move(result.curve);
    return {std::move(result.model), u_floor};
}

ForecastSeries predict_series(const Stage1Model& s1m, const Stage2Model& s2m, const FeatureContext& ctx, int year,
                              int z_first, int z_last, Boundary boundary) {
    if (z_last < z_first) fail(ErrorKind::InvalidArgument, "empty prediction range");
    ForecastSeries series{year, boundary, {}};
    for (int z = z_first; z <= z_last; ++z) {
        const auto x = ctx.features(year, z);
        const double y_hat = s1m.predict(x);
        series.points.push_back({z, y_hat, s2m.predict(y_hat, x)});
    }
    return series;
}

void TrainConfig::validate() const {
    def.validate();
    stage1.validate();
    stage2.validate();
    if (horizon < 1) fail(ErrorKind::InvalidArgument, "horizon must be >= 1");
    if (!(u_floor > 0.0)) fail(ErrorKind::InvalidArgument, "u_floor must be positive");
    if (years.size() < 2) fail(ErrorKind::TooFewYears, "training needs at least two years");
}

TrainedForecaster train_forecaster(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    TrainedForecaster out;
    out.config = cfg;
    out.references = reference_thresholds(data, cfg.def.delta_c, cfg.years);
    const FeatureContext ctx(data, out.references, cfg.include_doy);
    const auto s1 = build_s1(ctx, cfg.def, cfg.years, cfg.boundary, cfg.horizon);
    out.stage1 = fit_stage1(s1, cfg.stage1);
    const auto s2 = build_s2(ctx, cfg.def, cfg.years, cfg.boundary, cfg.horizon, cfg.protocol, cfg.stage1);
    out.stage2 = fit_stage2(s2, cfg.stage2, cfg.u_floor);
    return out;
}

namespace {

json gbm_config_json(const GBMConfig& c) {
    return {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"learning_rate", c.learning_rate},
            {"min_samples_leaf", c.min_samples_leaf},
            {"subsample_fraction", c.subsample_fraction},
            {"seed", c.seed}};
}

GBMConfig gbm_config_from(const json& j) {
    GBMConfig c;
    c.n_trees = j.at("n_trees").get<int>();
    c.max_depth = j.at("max_depth").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    c.subsample_fraction = j.at("subsample_fraction").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

} // namespace

std::string forecaster_to_json(const TrainedForecaster& f) {
    const auto& c = f.config;
    json doc{{"format", "pollen-forecaster"},
             {"version", 1},
             {"catalog_version", kCatalogVersion},
             {"config",
              {{"delta_c", c.def.delta_c},
               {"delta_n", c.def.delta_n},
               {"boundary", to_string(c.boundary)},
               {"horizon", c.horizon},
               {"years", c.years},
               {"protocol", to_string(c.protocol)},
               {"u_floor", c.u_floor},
               {"include_doy", c.include_doy},
               {"stage1", gbm_config_json(c.stage1)},
               {"stage2", gbm_config_json(c.stage2)}}},
             {"references", f.references},
             {"stage1", json::parse(model_to_json(f.stage1.model))},
             {"stage2", json::parse(model_to_json(f.stage2.model))}};
    return doc.dump();
}

TrainedForecaster forecaster_from_json(const std::string& text) {
    try {
        const auto doc = json::parse(text);
        if (doc.value("format", std::string{}) != "pollen-forecaster")
            fail(ErrorKind::FormatError, "not a pollen-forecaster document");
        if (doc.at("catalog_version").get<std::string>() != kCatalogVersion)
            fail(ErrorKind::FormatError, "model was built with feature catalog '" +
                                             doc.at("catalog_version").get<std::string>() + "'");
        TrainedForecaster f;
        const auto& c = doc.at("config");
        f.config.def.delta_c = c.at("delta_c").get<double>();
        f.config.def.delta_n = c.at("delta_n").get<int>();
        f.config.boundary = parse_boundary(c.at("boundary").get<std::string>());
        f.config.horizon = c.at("horizon").get<int>();
        f.config.years = c.at("years").get<std::vector<int>>();
        f.config.protocol = parse_protocol(c.at("protocol").get<std::string>());
        f.config.u_floor = c.at("u_floor").get<double>();
        f.config.include_doy = c.at("include_doy").get<bool>();
        f.config.stage1 = gbm_config_from(c.at("stage1"));
        f.config.stage2 = gbm_config_from(c.at("stage2"));
        f.references = doc.at("references").get<ReferenceThresholds>();
        f.stage1.model = model_from_json(doc.at("stage1").dump());
        f.stage2.model = model_from_json(doc.at("stage2").dump());
        f.stage2.u_floor = f.config.u_floor;
        return f;
    } catch (const json::exception& e) {
        fail(ErrorKind::FormatError, std::string("forecaster document: ") + e.what());
    }
}

} // namespace pollen
