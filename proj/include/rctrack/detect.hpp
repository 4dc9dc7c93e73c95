#pragma once

#include "rctrack/chain_models.hpp"
#include "rctrack/filters.hpp"
#include "rctrack/gridworld.hpp"
#include "rctrack/observation.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rctrack {

enum class TargetModel { hrc, hmc, hsc };

[[nodiscard]] std::string to_string(TargetModel m);
[[nodiscard]] TargetModel target_model_from_string(const std::string& s);

/// Everything a detector needs about the target: base chain, endpoint law
/// and the structures derived from them. Immutable once built, so trial
/// workers share one instance.
struct TargetModels {
    GridSpec grid;
    TransitionMatrix base;
    EndpointDistribution endpoints;
    BridgeFamily bridges;
    Vector pi0;  // source marginal of the endpoint law
    Vector piT;  // destination marginal
    std::optional<SchrodingerBridge> schrodinger;

    /// Builds bridges by the closed form; the Schrodinger bridge only when
    /// `with_schrodinger` is set.
    static TargetModels build(const GridSpec& grid, TransitionMatrix base, EndpointDistribution endpoints,
                              std::size_t horizon, bool with_schrodinger);

    [[nodiscard]] std::size_t horizon() const { return bridges.horizon(); }
};

using ObservationRegime = std::variant<SingleObsModel, MultiObsModel>;

/// Alternative hypothesis: a target of the given model under `regime`.
/// The null hypothesis is the same regime with epsilon = 1 (resp. lambda0 = 1).
struct DetectorSpec {
    TargetModel alternative = TargetModel::hrc;
    ObservationRegime regime;
};

struct RocPoint {
    double threshold = 0.0;
    double p_fa = 0.0;
    double p_d = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // p_fa and p_d nondecreasing
    std::size_t h1_trials = 0;
    std::size_t h0_trials = 0;
};

[[nodiscard]] LikelihoodTable likelihood_table(const ObservationSequence& seq, const ObservationRegime& regime,
                                               const GridSpec& grid);

[[nodiscard]] double null_loglik_single(const ObservationSequence& seq, const SingleObsModel& model,
                                        const GridSpec& grid);
[[nodiscard]] double null_loglik_multi(const ObservationSequence& seq, const MultiObsModel& model,
                                       const GridSpec& grid);
[[nodiscard]] double null_loglik(const ObservationSequence& seq, const ObservationRegime& regime, const GridSpec& grid);

/// Sequence log-likelihood under the alternative target model.
[[nodiscard]] double alternative_loglik(const ObservationSequence& seq, TargetModel model, const ObservationRegime& regime,
                                        const TargetModels& models);
[[nodiscard]] FilterOutput run_filter(const LikelihoodTable& table, TargetModel model, const TargetModels& models);

[[nodiscard]] double log_likelihood_ratio(const ObservationSequence& seq, const DetectorSpec& spec,
                                          const TargetModels& models);

/// Empirical ROC: thresholds at every distinct score plus +-inf sentinels;
/// a score counts as a detection only when strictly above the threshold.
[[nodiscard]] RocCurve roc_from_scores(const std::vector<double>& h1_scores, const std::vector<double>& h0_scores);
/// Trapezoidal area over the false-alarm axis.
[[nodiscard]] double auc(const RocCurve& curve);
[[nodiscard]] double delta_auc(const RocCurve& a, const RocCurve& b);

/// (p_fa, p_d) of the test that declares a target when the score exceeds tau.
[[nodiscard]] RocPoint operating_point(const std::vector<double>& h1_scores, const std::vector<double>& h0_scores,
                                       double tau);

/// DeLong covariance of empirical AUCs computed on shared trials.
/// `h1[d]`, `h0[d]` are detector d's scores; returns the covariance matrix.
[[nodiscard]] Matrix auc_covariance(const std::vector<std::vector<double>>& h1,
                                    const std::vector<std::vector<double>>& h0);

} // namespace rctrack
