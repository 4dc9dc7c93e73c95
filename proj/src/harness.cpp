#include "rctrack/harness.hpp"

#include "rctrack/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rctrack {

namespace {

constexpr std::uint64_t kTargetStream = 1;
constexpr std::uint64_t kNullStream = 2;
constexpr std::uint64_t kSweepStream = 100;

ObservationSequence observe(const std::vector<State>& path, const ObservationRegime& regime, const GridSpec& grid,
                            Rng& rng) {
    return std::visit([&](const auto& model) { return generate_sequence(path, model, grid, rng); }, regime);
}

template <typename Fn>
auto with_trial_context(const char* hypothesis, std::size_t index, Fn&& fn) {
    try {
        return fn();
    } catch (const ZeroEvidenceError& e) {
        throw Error(std::string(hypothesis) + " trial " + std::to_string(index) + ": " + e.what());
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

std::string to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::alpha: return "alpha";
    case SweepAxis::horizon: return "T";
    case SweepAxis::p_stay: return "p_R";
    case SweepAxis::m: return "M";
    case SweepAxis::epsilon: return "epsilon";
    case SweepAxis::sigma2: return "sigma2";
    }
    return "?";
}

std::string to_string(ExperimentKind kind) {
    return kind == ExperimentKind::detection ? "detection" : "filtering";
}

void ExperimentConfig::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (grid.width < 1 || grid.height < 1 || grid.size() < 2) throw ConfigError("grid", "need at least 2 cells");
    if (!(p_stay > 0.0 && p_stay < 1.0)) throw ConfigError("p_R", "must lie in (0, 1)");
    if (horizon < 2) throw ConfigError("T", "must be at least 2");
    if (endpoints.kind == EndpointKind::mixture && !in_unit(endpoints.alpha)) {
        throw ConfigError("endpoints.alpha", "must lie in [0, 1]");
    }
    if ((endpoints.kind == EndpointKind::mixture || endpoints.kind == EndpointKind::crossing) &&
        (grid.width < 2 || grid.height < 2)) {
        throw ConfigError("endpoints.kind", "crossing endpoints need a grid at least 2x2");
    }
    if (endpoints.kind == EndpointKind::pair && (endpoints.source >= grid.size() || endpoints.destination >= grid.size())) {
        throw ConfigError("endpoints", "pair outside grid");
    }
    if (endpoints.kind == EndpointKind::loitering && !endpoints.loiter_weights.empty() &&
        endpoints.loiter_weights.size() != grid.size()) {
        throw ConfigError("endpoints.weights", "need one weight per cell");
    }
    if (observation.multi) {
        if (observation.m < 1) throw ConfigError("observation.M", "must be at least 1");
        if (!in_unit(observation.lambda0)) throw ConfigError("observation.lambda0", "must lie in [0, 1]");
    } else if (!in_unit(observation.epsilon)) {
        throw ConfigError("observation.epsilon", "must lie in [0, 1]");
    }
    if (!(sigma2 >= 0.0)) throw ConfigError("sigma2", "must be nonnegative");
    if (trials < 2 || trials % 2 != 0) throw ConfigError("trials", "must be an even number >= 2");
    if (models.empty()) throw ConfigError("models", "need at least one target model");
    if (sweep) {
        if (sweep->values.empty()) throw ConfigError("sweep.values", "must not be empty");
        for (double v : sweep->values) {
            try {
                (void)with_axis(*this, sweep->axis, v);
            } catch (const ConfigError& e) {
                throw ConfigError("sweep.values", e.what());
            }
        }
    }
}

bool ExperimentConfig::uses(TargetModel m) const {
    return std::find(models.begin(), models.end(), m) != models.end();
}

ObservationRegime make_regime(const ExperimentConfig& cfg) {
    const NoiseModel noise{cfg.sigma2};
    ClutterModel clutter = ClutterModel::uniform(cfg.grid.size());
    if (cfg.observation.multi) {
        return MultiObsModel::exchangeable(cfg.observation.m, cfg.observation.lambda0, noise, std::move(clutter));
    }
    return SingleObsModel{cfg.observation.epsilon, noise, std::move(clutter)};
}

ObservationRegime make_null_regime(const ExperimentConfig& cfg) {
    ExperimentConfig null_cfg = cfg;
    null_cfg.observation.epsilon = 1.0;
    null_cfg.observation.lambda0 = 1.0;
    return make_regime(null_cfg);
}

TargetModels build_models(const ExperimentConfig& cfg) {
    return TargetModels::build(cfg.grid, build_random_walk(cfg.grid, cfg.p_stay), make_endpoints(cfg.grid, cfg.endpoints),
                               cfg.horizon, cfg.uses(TargetModel::hsc));
}

ExperimentConfig with_axis(const ExperimentConfig& cfg, SweepAxis axis, double value) {
    ExperimentConfig out = cfg;
    out.sweep.reset();
    switch (axis) {
    case SweepAxis::alpha:
        if (cfg.endpoints.kind != EndpointKind::mixture) throw ConfigError("sweep.axis", "alpha sweep needs mixture endpoints");
        out.endpoints.alpha = value;
        break;
    case SweepAxis::horizon:
        if (value < 2 || value != std::floor(value)) throw ConfigError("T", "must be an integer >= 2");
        out.horizon = static_cast<std::size_t>(value);
        break;
    case SweepAxis::p_stay:
        out.p_stay = value;
        break;
    case SweepAxis::m:
        if (!cfg.observation.multi) throw ConfigError("sweep.axis", "M sweep needs the multi-observation model");
        if (value < 1 || value != std::floor(value)) throw ConfigError("observation.M", "must be an integer >= 1");
        out.observation.m = static_cast<std::size_t>(value);
        break;
    case SweepAxis::epsilon:
        // For the multi model the clutter-rate axis is lambda0.
        if (cfg.observation.multi) {
            out.observation.lambda0 = value;
        } else {
            out.observation.epsilon = value;
        }
        break;
    case SweepAxis::sigma2:
        out.sigma2 = value;
        break;
    }
    out.validate();
    return out;
}

const DetectorMetrics& MetricsReport::detector(TargetModel m) const {
    for (const auto& d : detectors) {
        if (d.model == m) return d;
    }
    throw Error("report has no detector " + to_string(m));
}

const TrackerMetrics& MetricsReport::tracker(TargetModel m) const {
    for (const auto& t : trackers) {
        if (t.model == m) return t;
    }
    throw Error("report has no tracker " + to_string(m));
}

Trial simulate_target_trial(const ExperimentConfig& cfg, const TargetModels& models, std::size_t index) {
    Rng rng(derive_seed(cfg.seed, kTargetStream, index));
    Trial trial;
    trial.path = sample_rc_path(models.bridges, models.endpoints, rng);
    trial.observations = observe(trial.path, make_regime(cfg), models.grid, rng);
    return trial;
}

Trial simulate_null_trial(const ExperimentConfig& cfg, const TargetModels& models, std::size_t index) {
    Rng rng(derive_seed(cfg.seed, kNullStream, index));
    Trial trial;
    const std::vector<State> placeholder(cfg.horizon + 1, 0);
    trial.observations = observe(placeholder, make_null_regime(cfg), models.grid, rng);
    return trial;
}

MetricsReport run_detection_experiment(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const TargetModels models = build_models(cfg);
    const ObservationRegime regime = make_regime(cfg);
    const std::size_t half = cfg.trials / 2;
    const std::size_t d = cfg.models.size();

    std::vector<std::vector<double>> scores(cfg.trials, std::vector<double>(d));
    parallel_for(cfg.trials, threads, [&](std::size_t r) {
        const bool target = r < half;
        const std::size_t index = target ? r : r - half;
        with_trial_context(target ? "H1" : "H0", index, [&] {
            const Trial trial = target ? simulate_target_trial(cfg, models, index) : simulate_null_trial(cfg, models, index);
            const LikelihoodTable table = likelihood_table(trial.observations, regime, models.grid);
            const double null = null_loglik(trial.observations, regime, models.grid);
            for (std::size_t m = 0; m < d; ++m) scores[r][m] = run_filter(table, cfg.models[m], models).loglik - null;
            return 0;
        });
    });

    MetricsReport report;
    report.config = cfg;
    report.beta = benefit_indicator(models.endpoints, cfg.horizon, models.grid);
    std::vector<std::vector<double>> h1(d), h0(d);
    for (std::size_t m = 0; m < d; ++m) {
        h1[m].reserve(half);
        h0[m].reserve(half);
        for (std::size_t r = 0; r < cfg.trials; ++r) (r < half ? h1[m] : h0[m]).push_back(scores[r][m]);
    }
    const Matrix cov = auc_covariance(h1, h0);
    for (std::size_t m = 0; m < d; ++m) {
        DetectorMetrics det;
        det.model = cfg.models[m];
        det.roc = roc_from_scores(h1[m], h0[m]);
        det.auc = auc(det.roc);
        det.auc_se = std::sqrt(std::max(0.0, cov(m, m)));
        det.h1_scores = std::move(h1[m]);
        det.h0_scores = std::move(h0[m]);
        report.detectors.push_back(std::move(det));
    }
    const auto pos = [&](TargetModel t) {
        return static_cast<std::size_t>(std::find(cfg.models.begin(), cfg.models.end(), t) - cfg.models.begin());
    };
    if (cfg.uses(TargetModel::hrc) && cfg.uses(TargetModel::hmc)) {
        const std::size_t a = pos(TargetModel::hrc);
        const std::size_t b = pos(TargetModel::hmc);
        report.delta_auc = report.detectors[a].auc - report.detectors[b].auc;
        report.delta_auc_se = std::sqrt(std::max(0.0, cov(a, a) + cov(b, b) - 2.0 * cov(a, b)));
    }
    report.runtime_seconds = seconds_since(start);
    return report;
}

MetricsReport run_filtering_experiment(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const TargetModels models = build_models(cfg);
    const ObservationRegime regime = make_regime(cfg);
    const std::size_t d = cfg.models.size();
    const std::size_t epochs = cfg.horizon + 1;

    // sq[r][m][t]: squared Euclidean error of the conditional mean
    std::vector<std::vector<std::vector<double>>> sq(cfg.trials,
                                                     std::vector<std::vector<double>>(d, std::vector<double>(epochs)));
    parallel_for(cfg.trials, threads, [&](std::size_t r) {
        with_trial_context("H1", r, [&] {
            const Trial trial = simulate_target_trial(cfg, models, r);
            const LikelihoodTable table = likelihood_table(trial.observations, regime, models.grid);
            for (std::size_t m = 0; m < d; ++m) {
                const FilterOutput out = run_filter(table, cfg.models[m], models);
                for (std::size_t t = 0; t < epochs; ++t) {
                    const Point2 est = conditional_mean(out.posterior(t), models.grid);
                    const Point2 truth = models.grid.center(trial.path[t]);
                    sq[r][m][t] = (est.x - truth.x) * (est.x - truth.x) + (est.y - truth.y) * (est.y - truth.y);
                }
            }
            return 0;
        });
    });

    MetricsReport report;
    report.config = cfg;
    report.beta = benefit_indicator(models.endpoints, cfg.horizon, models.grid);
    const double trials = static_cast<double>(cfg.trials);
    for (std::size_t m = 0; m < d; ++m) {
        TrackerMetrics tr;
        tr.model = cfg.models[m];
        tr.rmse_cm.assign(epochs, 0.0);
        tr.aps_per_trial.resize(cfg.trials);
        for (std::size_t r = 0; r < cfg.trials; ++r) {
            double seq_total = 0.0;
            for (std::size_t t = 0; t < epochs; ++t) {
                tr.rmse_cm[t] += sq[r][m][t] / trials;
                if (t >= 1) seq_total += sq[r][m][t];
            }
            tr.aps_per_trial[r] = std::sqrt(seq_total / static_cast<double>(cfg.horizon));
            tr.rmse_aps += tr.aps_per_trial[r] / trials;
        }
        for (double& v : tr.rmse_cm) v = std::sqrt(v);
        report.trackers.push_back(std::move(tr));
    }
    report.runtime_seconds = seconds_since(start);
    return report;
}

MetricsReport run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
    return cfg.kind == ExperimentKind::detection ? run_detection_experiment(cfg, threads)
                                                 : run_filtering_experiment(cfg, threads);
}

std::vector<MetricsReport> sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                                 std::size_t threads) {
    std::vector<MetricsReport> reports;
    reports.reserve(values.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        ExperimentConfig point = with_axis(cfg, axis, values[v]);
        point.seed = derive_seed(cfg.seed, kSweepStream, v);
        reports.push_back(run_experiment(point, threads));
    }
    return reports;
}

PairedDifference paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw Error("paired_difference needs equal-length samples of size >= 2");
    const double n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += (a[i] - b[i]) / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace rctrack
