#pragma once

#include "rctrack/detect.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rctrack {

enum class ExperimentKind { detection, filtering };
enum class SweepAxis { alpha, horizon, p_stay, m, epsilon, sigma2 };

[[nodiscard]] std::string to_string(SweepAxis axis);
[[nodiscard]] std::string to_string(ExperimentKind kind);

struct ObservationConfig {
    bool multi = false;
    double epsilon = 0.5;   // single model clutter rate
    std::size_t m = 1;      // multi model slot count
    double lambda0 = 0.0;   // multi model no-target prior
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::alpha;
    std::vector<double> values;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ExperimentKind kind = ExperimentKind::detection;
    GridSpec grid;
    double p_stay = 0.5;
    std::size_t horizon = 16;
    EndpointSpec endpoints;
    ObservationConfig observation;
    double sigma2 = 1.0;
    std::size_t trials = 2000;
    std::uint64_t seed = 1;
    std::vector<TargetModel> models{TargetModel::hrc, TargetModel::hmc, TargetModel::hsc};
    std::optional<SweepSpec> sweep;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    [[nodiscard]] bool uses(TargetModel m) const;
};

/// Alternative-hypothesis regime described by the config.
[[nodiscard]] ObservationRegime make_regime(const ExperimentConfig& cfg);
/// Same regime with no target (epsilon = 1 or lambda0 = 1).
[[nodiscard]] ObservationRegime make_null_regime(const ExperimentConfig& cfg);
[[nodiscard]] TargetModels build_models(const ExperimentConfig& cfg);
/// Copy of `cfg` with one sweep axis set to `value`.
[[nodiscard]] ExperimentConfig with_axis(const ExperimentConfig& cfg, SweepAxis axis, double value);

struct DetectorMetrics {
    TargetModel model = TargetModel::hrc;
    RocCurve roc;
    double auc = 0.0;
    double auc_se = 0.0;
    std::vector<double> h1_scores;
    std::vector<double> h0_scores;
};

struct TrackerMetrics {
    TargetModel model = TargetModel::hrc;
    std::vector<double> rmse_cm;         // per epoch 0..T
    double rmse_aps = 0.0;
    std::vector<double> aps_per_trial;
};

struct MetricsReport {
    ExperimentConfig config;
    double beta = 0.0;
    std::vector<DetectorMetrics> detectors;
    std::optional<double> delta_auc;     // AUC_HRC - AUC_HMC
    std::optional<double> delta_auc_se;  // DeLong, paired over shared trials
    std::vector<TrackerMetrics> trackers;
    double runtime_seconds = 0.0;

    [[nodiscard]] const DetectorMetrics& detector(TargetModel m) const;
    [[nodiscard]] const TrackerMetrics& tracker(TargetModel m) const;
};

/// One Monte Carlo realisation: the state path and its observations.
struct Trial {
    std::vector<State> path;
    ObservationSequence observations;
};

/// Target-present trial `index`; its data depends only on (seed, index).
[[nodiscard]] Trial simulate_target_trial(const ExperimentConfig& cfg, const TargetModels& models, std::size_t index);
/// Clutter-only trial `index`.
[[nodiscard]] Trial simulate_null_trial(const ExperimentConfig& cfg, const TargetModels& models, std::size_t index);

[[nodiscard]] MetricsReport run_detection_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);
[[nodiscard]] MetricsReport run_filtering_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);
[[nodiscard]] MetricsReport run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

/// One report per value, each with its own derived seed.
[[nodiscard]] std::vector<MetricsReport> sweep(const ExperimentConfig& cfg, SweepAxis axis,
                                               const std::vector<double>& values, std::size_t threads = 1);

/// Mean and standard error of the paired per-trial difference a - b.
struct PairedDifference {
    double mean = 0.0;
    double se = 0.0;
};
[[nodiscard]] PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b);

} // namespace rctrack
