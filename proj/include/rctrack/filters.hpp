#pragma once

#include "rctrack/chain_models.hpp"
#include "rctrack/gridworld.hpp"
#include "rctrack/observation.hpp"
#include "rctrack/types.hpp"

#include <vector>

namespace rctrack {

/// Joint filtered posterior of the HRC filter after epoch t.
///
/// `joint(i, k)` = Pr{X_t = i, X_T = k | Y_0..Y_t}. At the terminal epoch
/// X_t = X_T, so only the diagonal is populated. `h` is the last
/// normaliser Pr{Y_t | Y_0..Y_{t-1}} and `loglik` the running sum of log h.
struct FilterState {
    std::size_t t = 0;
    Matrix joint;
    double h = 0.0;
    double loglik = 0.0;

    [[nodiscard]] Vector marginal() const { return joint.rowwise().sum(); }
    [[nodiscard]] Vector destination() const { return joint.colwise().sum().transpose(); }
};

struct FilterOutput {
    Matrix marginals;  // rows epochs 0..T, columns states
    Vector h;          // per-epoch normalisers
    double loglik = 0.0;

    [[nodiscard]] Vector posterior(std::size_t t) const { return marginals.row(static_cast<Eigen::Index>(t)).transpose(); }
};

struct Estimates {
    std::vector<Point2> means;
    std::vector<State> map;
};

// ---- HRC ----

[[nodiscard]] FilterState hrc_initialize(const Vector& c0, const EndpointDistribution& pi);
/// Forward step to epoch state.t + 1 <= T - 1 through B^k(state.t).
[[nodiscard]] FilterState hrc_step(const FilterState& state, const Vector& c, const BridgeFamily& bridges,
                                   KernelStats* stats = nullptr);
/// Terminal update at epoch T: q^k(T) proportional to C_T(k) sum_i q_i^k(T-1).
[[nodiscard]] FilterState hrc_terminal(const FilterState& state, const Vector& c);

/// Single-observation step under uniform clutter working from the raw
/// target-conditional likelihoods c_i(t) and the clutter rate directly.
[[nodiscard]] FilterState clutter_embedded_hrc_step(const FilterState& state, const Vector& raw,
                                                    const BridgeFamily& bridges, double epsilon);

[[nodiscard]] FilterOutput hrc_filter(const LikelihoodTable& likelihood, const BridgeFamily& bridges,
                                      const EndpointDistribution& pi, KernelStats* stats = nullptr);

// ---- Markov and Schrodinger chains ----

[[nodiscard]] FilterOutput hmc_filter(const LikelihoodTable& likelihood, const TransitionMatrix& a, const Vector& pi0);
[[nodiscard]] FilterOutput hsc_filter(const LikelihoodTable& likelihood, const SchrodingerBridge& sb, const Vector& pi0);

// ---- estimates ----

[[nodiscard]] Point2 conditional_mean(const Vector& posterior, const GridSpec& grid);
/// Ties go to the lowest state index.
[[nodiscard]] State map_estimate(const Vector& posterior);
[[nodiscard]] Estimates estimates(const FilterOutput& out, const GridSpec& grid);

} // namespace rctrack
