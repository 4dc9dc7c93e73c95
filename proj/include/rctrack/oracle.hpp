#pragma once

#include "rctrack/detect.hpp"

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rctrack {

/// Exact prior probability of a full state path X_0..X_T.
struct PathLaw {
    std::size_t n = 0;
    std::size_t horizon = 0;
    std::function<double(std::span<const State>)> probability;
};

/// Pi_{x0,xT} prod A / (A^T)_{x0,xT}.
[[nodiscard]] PathLaw hrc_path_law(const TransitionMatrix& a, const EndpointDistribution& pi, std::size_t horizon);
/// pi0(x0) prod A.
[[nodiscard]] PathLaw hmc_path_law(const TransitionMatrix& a, const Vector& pi0, std::size_t horizon);
/// lambda0(x0) prod A lambdaT(xT).
[[nodiscard]] PathLaw hsc_path_law(const TransitionMatrix& a, const Vector& lambda0, const Vector& lambdaT,
                                   std::size_t horizon);

/// Target detections without clutter.
struct ClutterlessObsModel {
    NoiseModel noise;
};

using OracleObservation = std::variant<ClutterlessObsModel, SingleObsModel, MultiObsModel>;

inline constexpr double kOracleBudget = 1e7;

/// Pr{Y_t | X_t = i} for every epoch and state, by summing the generative
/// model over the association and every clutter placement.
[[nodiscard]] Matrix brute_force_observation_table(const ObservationSequence& seq, const OracleObservation& obs,
                                                   const GridSpec& grid);

/// Total probability of the sequence by enumeration of all N^(T+1) paths.
/// Throws Error when the enumeration exceeds kOracleBudget.
[[nodiscard]] double brute_force_sequence_likelihood(const PathLaw& law, const ObservationSequence& seq,
                                                     const OracleObservation& obs, const GridSpec& grid);

/// Pr{X_t = . | Y_0..Y_t} by enumeration.
[[nodiscard]] Vector brute_force_posterior(const PathLaw& law, const ObservationSequence& seq,
                                           const OracleObservation& obs, const GridSpec& grid, std::size_t t);

/// All filtered marginals, rows t = 0..T.
[[nodiscard]] Matrix brute_force_posteriors(const PathLaw& law, const ObservationSequence& seq,
                                            const OracleObservation& obs, const GridSpec& grid);

/// Pr{X_{t+1} = j | X_t = i, X_T = k} under the base chain, by enumeration.
/// Rows that cannot reach k are left zero.
[[nodiscard]] Matrix brute_force_bridge(const TransitionMatrix& a, std::size_t horizon, State k, std::size_t t);

/// Small random model on a grid with at most 4 cells.
struct OracleInstance {
    GridSpec grid;
    TransitionMatrix base;
    EndpointDistribution endpoints;
    std::size_t horizon;
};

/// Random base chain with a positive diagonal and an endpoint law supported
/// where A^T is positive. With `sparse`, off-diagonal entries are zero with
/// probability 0.4; otherwise A is strictly positive.
[[nodiscard]] OracleInstance random_oracle_instance(Rng& rng, std::size_t n, std::size_t horizon, bool sparse = true);

struct OracleCheckOptions {
    std::vector<std::string> suites{"bridges", "likelihoods", "filters"};
    std::size_t instances = 50;
    std::uint64_t seed = 1;
    double tolerance = 1e-8;
    /// Test hook: add 1e-3 to one bridge entry before comparing.
    bool perturb_bridge = false;
};

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t hsc_cases = 0;             // filters suite: instances that include HSC
    double max_loglik_deviation = 0.0;   // relative
    double max_marginal_deviation = 0.0; // absolute
    bool passed = true;
};

[[nodiscard]] std::vector<std::string> oracle_suite_names();
/// Throws ConfigError for an empty or unknown suite selection.
[[nodiscard]] std::vector<SuiteResult> run_oracle_suites(const OracleCheckOptions& options);

} // namespace rctrack
