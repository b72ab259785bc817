#pragma once

#include "pollen/data_core.hpp"
#include "pollen/features.hpp"
#include "pollen/forecast.hpp"
#include "pollen/gbm.hpp"

#include <span>
#include <string>
#include <vector>

namespace pollen {

/// Lower clamp on predicted uncertainty so Stage-3 weights stay finite.
inline constexpr double kDefaultUFloor = 0.25;
inline constexpr int kDefaultHorizon = 59;

/// Dataset plus its trailing-window feature tensor; turns (year, day) into
/// a flat model input. The dataset must outlive the context.
class FeatureContext {
public:
    FeatureContext(const Dataset& data, const ReferenceThresholds& references, bool include_doy = true);

    const Dataset& data() const { return *data_; }
    const ReferenceThresholds& references() const { return references_; }
    bool include_doy() const { return include_doy_; }
    std::size_t width() const { return kFlatWidth + (include_doy_ ? 1 : 0); }

    bool has_window(int year, int z) const;
    /// Throws WindowUnavailable when the day lacks a full trailing window.
    std::vector<double> features(int year, int z) const;

private:
    const Dataset* data_;
    ReferenceThresholds references_;
    bool include_doy_;
    FeatureMatrix matrix_;
};

/// Day-of-year of the chosen boundary; throws MissingLabel when absent.
int boundary_day(const SeasonLabel& label, Boundary boundary);

struct Provenance {
    int year = 0;
    int z = 0;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Stage1TrainingSet {
    Matrix rows;
    std::vector<double> targets;  // countdown: boundary - z
    std::vector<Provenance> provenance;
};

/// One row per (year, z) with z in [boundary - horizon, boundary].
Stage1TrainingSet build_s1(const FeatureContext& ctx, const SeasonDefinition& def, std::span<const int> years,
                           Boundary boundary, int horizon);

struct Stage1Model {
    GBMModel model;
    double predict(std::span<const double> features) const { return pollen::predict(model, features); }
};

Stage1Model fit_stage1(const Stage1TrainingSet& s1, const GBMConfig& cfg, TrainingCurve* curve = nullptr);

enum class Stage2Protocol {
    /// Each year is scored by a Stage-1 model fitted on all other years.
    LeaveOneYearOut,
    /// The earlier half of the years fits one Stage-1 model that scores the later half.
    DisjointBlock,
};

std::string_view to_string(Stage2Protocol p);
Stage2Protocol parse_protocol(std::string_view text);

struct Stage2TrainingSet {
    Matrix rows;                  // [y_hat, features...]
    std::vector<double> targets;  // |y_hat - true countdown|
    std::vector<Provenance> provenance;
    /// Years used to fit the Stage-1 model that scored each row.
    std::vector<std::vector<int>> scorer_years;
};

Stage2TrainingSet build_s2(const FeatureContext& ctx, const SeasonDefinition& def, std::span<const int> years,
                           Boundary boundary, int horizon, Stage2Protocol protocol, const GBMConfig& stage1_cfg);

struct Stage2Model {
    GBMModel model;
    double u_floor = kDefaultUFloor;

    /// max(raw prediction, u_floor).
    double predict(double y_hat, std::span<const double> features) const;
};

Stage2Model fit_stage2(const Stage2TrainingSet& s2, const GBMConfig& cfg, double u_floor = kDefaultUFloor,
                       TrainingCurve* curve = nullptr);

/// Stage-1 and Stage-2 predictions for every day in [z_first, z_last].
ForecastSeries predict_series(const Stage1Model& s1m, const Stage2Model& s2m, const FeatureContext& ctx, int year,
                              int z_first, int z_last, Boundary boundary = Boundary::Start);

struct TrainConfig {
    SeasonDefinition def;
    Boundary boundary = Boundary::Start;
    int horizon = kDefaultHorizon;
    std::vector<int> years;
    GBMConfig stage1;
    GBMConfig stage2;
    Stage2Protocol protocol = Stage2Protocol::LeaveOneYearOut;
    double u_floor = kDefaultUFloor;
    bool include_doy = true;

    void validate() const;
};

/// Both fitted stages plus everything needed to rebuild their inputs.
struct TrainedForecaster {
    TrainConfig config;
    ReferenceThresholds references{};
    Stage1Model stage1;
    Stage2Model stage2;
};

TrainedForecaster train_forecaster(const Dataset& data, const TrainConfig& cfg);

std::string forecaster_to_json(const TrainedForecaster& f);
TrainedForecaster forecaster_from_json(const std::string& text);

} // namespace pollen
