#include "rctrack/filters.hpp"

#include <cmath>
#include <string>

namespace rctrack {

namespace {

double checked_normalizer(double h, std::size_t t) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ZeroEvidenceError(t);
    return h;
}

// prior(:, k) = B^k(t)' q^k for every destination k holding mass.
Matrix hrc_predict(const FilterState& state, const BridgeFamily& bridges, KernelStats* stats) {
    const std::size_t n = bridges.size();
    Matrix prior = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (State k = 0; k < n; ++k) {
        const auto qk = state.joint.col(static_cast<Eigen::Index>(k));
        const SparseRowMatrix& b = bridges.transition(k, state.t);
        auto out = prior.col(static_cast<Eigen::Index>(k));
        for (State j = 0; j < n; ++j) {
            const double w = qk(j);
            if (w == 0.0) continue;
            for (SparseRowMatrix::InnerIterator it(b, static_cast<Eigen::Index>(j)); it; ++it) {
                out(it.col()) += it.value() * w;
            }
            if (stats) stats->transition_mults += static_cast<std::size_t>(b.outerIndexPtr()[j + 1] - b.outerIndexPtr()[j]);
        }
    }
    return prior;
}

FilterState finish(std::size_t t, Matrix joint, double loglik_before) {
    FilterState out;
    out.t = t;
    out.h = checked_normalizer(joint.sum(), t);
    joint /= out.h;
    out.joint = std::move(joint);
    out.loglik = loglik_before + std::log(out.h);
    return out;
}

void check_table(const LikelihoodTable& table, std::size_t n, std::size_t epochs) {
    if (static_cast<std::size_t>(table.cols()) != n) throw ModelError("likelihood table has wrong state count");
    if (static_cast<std::size_t>(table.rows()) != epochs) {
        throw ModelError("likelihood table has " + std::to_string(table.rows()) + " epochs, expected " +
                         std::to_string(epochs));
    }
}

template <typename StepFn>
FilterOutput markov_forward(const LikelihoodTable& likelihood, const Vector& pi0, std::size_t horizon, StepFn&& step) {
    const std::size_t n = static_cast<std::size_t>(pi0.size());
    check_table(likelihood, n, horizon + 1);
    FilterOutput out;
    out.marginals.resize(static_cast<Eigen::Index>(horizon + 1), static_cast<Eigen::Index>(n));
    out.h.resize(static_cast<Eigen::Index>(horizon + 1));
    Vector q = likelihood.row(0).transpose().cwiseProduct(pi0);
    for (std::size_t t = 0; t <= horizon; ++t) {
        if (t > 0) q = likelihood.row(static_cast<Eigen::Index>(t)).transpose().cwiseProduct(step(t - 1, q));
        const double h = checked_normalizer(q.sum(), t);
        q /= h;
        out.h(t) = h;
        out.loglik += std::log(h);
        out.marginals.row(static_cast<Eigen::Index>(t)) = q.transpose();
    }
    return out;
}

} // namespace

FilterState hrc_initialize(const Vector& c0, const EndpointDistribution& pi) {
    if (static_cast<std::size_t>(c0.size()) != pi.size()) throw ModelError("likelihood row size mismatch");
    return finish(0, c0.asDiagonal() * pi.matrix(), 0.0);
}

FilterState hrc_step(const FilterState& state, const Vector& c, const BridgeFamily& bridges, KernelStats* stats) {
    if (state.t + 2 > bridges.horizon()) throw ModelError("hrc_step past epoch T-1; use hrc_terminal");
    Matrix prior = hrc_predict(state, bridges, stats);
    return finish(state.t + 1, c.asDiagonal() * prior, state.loglik);
}

FilterState clutter_embedded_hrc_step(const FilterState& state, const Vector& raw, const BridgeFamily& bridges,
                                      double epsilon) {
    if (state.t + 2 > bridges.horizon()) throw ModelError("clutter-embedded step past epoch T-1");
    const double n = static_cast<double>(raw.size());
    const double background = raw.sum() / n;
    Matrix prior = hrc_predict(state, bridges, nullptr);
    // Joint over (X_t, X_T, U_t) with U_t uniform, summed over U_t.
    for (Eigen::Index i = 0; i < prior.rows(); ++i) {
        prior.row(i) *= (1.0 - epsilon) * raw(i) + epsilon * background;
    }
    return finish(state.t + 1, std::move(prior), state.loglik);
}

FilterState hrc_terminal(const FilterState& state, const Vector& c) {
    const std::size_t n = static_cast<std::size_t>(c.size());
    Matrix joint = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Vector dest = state.destination();
    for (State k = 0; k < n; ++k) joint(k, k) = c(k) * dest(k);
    return finish(state.t + 1, std::move(joint), state.loglik);
}

FilterOutput hrc_filter(const LikelihoodTable& likelihood, const BridgeFamily& bridges, const EndpointDistribution& pi,
                        KernelStats* stats) {
    const std::size_t n = bridges.size();
    const std::size_t horizon = bridges.horizon();
    check_table(likelihood, n, horizon + 1);
    FilterOutput out;
    out.marginals.resize(static_cast<Eigen::Index>(horizon + 1), static_cast<Eigen::Index>(n));
    out.h.resize(static_cast<Eigen::Index>(horizon + 1));

    auto record = [&](const FilterState& s) {
        out.marginals.row(static_cast<Eigen::Index>(s.t)) = s.marginal().transpose();
        out.h(s.t) = s.h;
        out.loglik = s.loglik;
    };
    FilterState state = hrc_initialize(likelihood.row(0).transpose(), pi);
    record(state);
    for (std::size_t t = 1; t < horizon; ++t) {
        state = hrc_step(state, likelihood.row(static_cast<Eigen::Index>(t)).transpose(), bridges, stats);
        record(state);
    }
    state = hrc_terminal(state, likelihood.row(static_cast<Eigen::Index>(horizon)).transpose());
    record(state);
    return out;
}

FilterOutput hmc_filter(const LikelihoodTable& likelihood, const TransitionMatrix& a, const Vector& pi0) {
    const std::size_t horizon = static_cast<std::size_t>(likelihood.rows()) - 1;
    if (static_cast<std::size_t>(pi0.size()) != a.size()) throw ModelError("pi0 size mismatch");
    const SparseRowMatrix at = a.sparse().transpose();
    return markov_forward(likelihood, pi0, horizon, [&](std::size_t, const Vector& q) -> Vector { return at * q; });
}

FilterOutput hsc_filter(const LikelihoodTable& likelihood, const SchrodingerBridge& sb, const Vector& pi0) {
    const std::size_t horizon = sb.horizon();
    std::vector<SparseRowMatrix> transposed;
    transposed.reserve(horizon);
    for (const auto& s : sb.transitions) transposed.emplace_back(s.transpose());
    return markov_forward(likelihood, pi0, horizon,
                          [&](std::size_t t, const Vector& q) -> Vector { return transposed[t] * q; });
}

Point2 conditional_mean(const Vector& posterior, const GridSpec& grid) {
    Point2 mean;
    for (State i = 0; i < static_cast<State>(posterior.size()); ++i) {
        const double w = posterior(i);
        if (w == 0.0) continue;
        const Point2 c = grid.center(i);
        mean.x += w * c.x;
        mean.y += w * c.y;
    }
    return mean;
}

State map_estimate(const Vector& posterior) {
    State best = 0;
    for (State i = 1; i < static_cast<State>(posterior.size()); ++i) {
        if (posterior(i) > posterior(best)) best = i;
    }
    return best;
}

Estimates estimates(const FilterOutput& out, const GridSpec& grid) {
    Estimates e;
    const std::size_t epochs = static_cast<std::size_t>(out.marginals.rows());
    e.means.reserve(epochs);
    e.map.reserve(epochs);
    for (std::size_t t = 0; t < epochs; ++t) {
        const Vector p = out.posterior(t);
        e.means.push_back(conditional_mean(p, grid));
        e.map.push_back(map_estimate(p));
    }
    return e;
}

} // namespace rctrack
