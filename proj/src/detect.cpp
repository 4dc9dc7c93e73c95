#include "rctrack/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rctrack {

std::string to_string(TargetModel m) {
    switch (m) {
    case TargetModel::hrc: return "hrc";
    case TargetModel::hmc: return "hmc";
    case TargetModel::hsc: return "hsc";
    }
    return "?";
}

TargetModel target_model_from_string(const std::string& s) {
    if (s == "hrc") return TargetModel::hrc;
    if (s == "hmc") return TargetModel::hmc;
    if (s == "hsc") return TargetModel::hsc;
    throw ModelError("unknown target model '" + s + "'");
}

TargetModels TargetModels::build(const GridSpec& grid, TransitionMatrix base, EndpointDistribution endpoints,
                                 std::size_t horizon, bool with_schrodinger) {
    if (base.size() != grid.size() || endpoints.size() != grid.size()) throw ModelError("model size does not match grid");
    BridgeFamily bridges = bridges_from_base_closed_form(base, endpoints, horizon);
    Vector pi0 = endpoints.source_marginal();
    Vector piT = endpoints.destination_marginal();
    std::optional<SchrodingerBridge> sb;
    if (with_schrodinger) sb = solve_schrodinger(base, pi0, piT, horizon);
    return TargetModels{grid, std::move(base), std::move(endpoints), std::move(bridges),
                        std::move(pi0), std::move(piT), std::move(sb)};
}

LikelihoodTable likelihood_table(const ObservationSequence& seq, const ObservationRegime& regime, const GridSpec& grid) {
    return std::visit(
        [&](const auto& model) -> LikelihoodTable {
            using M = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<M, SingleObsModel>) {
                return single_obs_table(seq, model, grid);
            } else {
                return multi_obs_table(seq, model, grid);
            }
        },
        regime);
}

double null_loglik_single(const ObservationSequence& seq, const SingleObsModel& model, const GridSpec& grid) {
    double total = 0.0;
    for (const auto& rec : seq) {
        if (rec.points.size() != 1) throw ModelError("single-observation model expects one point per epoch");
        const double l = clutter_point_likelihood(rec.points.front(), model.noise, model.clutter, grid);
        if (!(l > 0.0)) throw ZeroEvidenceError(rec.epoch);
        total += std::log(l);
    }
    return total;
}

double null_loglik_multi(const ObservationSequence& seq, const MultiObsModel& model, const GridSpec& grid) {
    double total = 0.0;
    for (const auto& rec : seq) {
        if (rec.points.size() != model.m) throw ModelError("observation record size does not match M");
        for (const auto& y : rec.points) {
            const double l = clutter_point_likelihood(y, model.noise, model.clutter, grid);
            if (!(l > 0.0)) throw ZeroEvidenceError(rec.epoch);
            total += std::log(l);
        }
    }
    return total;
}

double null_loglik(const ObservationSequence& seq, const ObservationRegime& regime, const GridSpec& grid) {
    return std::visit(
        [&](const auto& model) -> double {
            using M = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<M, SingleObsModel>) {
                return null_loglik_single(seq, model, grid);
            } else {
                return null_loglik_multi(seq, model, grid);
            }
        },
        regime);
}

FilterOutput run_filter(const LikelihoodTable& table, TargetModel model, const TargetModels& models) {
    switch (model) {
    case TargetModel::hrc:
        return hrc_filter(table, models.bridges, models.endpoints);
    case TargetModel::hmc:
        return hmc_filter(table, models.base, models.pi0);
    case TargetModel::hsc:
        if (!models.schrodinger) throw ModelError("Schrodinger bridge not built for this model set");
        return hsc_filter(table, *models.schrodinger, models.pi0);
    }
    throw ModelError("unknown target model");
}

double alternative_loglik(const ObservationSequence& seq, TargetModel model, const ObservationRegime& regime,
                          const TargetModels& models) {
    return run_filter(likelihood_table(seq, regime, models.grid), model, models).loglik;
}

double log_likelihood_ratio(const ObservationSequence& seq, const DetectorSpec& spec, const TargetModels& models) {
    return alternative_loglik(seq, spec.alternative, spec.regime, models) - null_loglik(seq, spec.regime, models.grid);
}

RocCurve roc_from_scores(const std::vector<double>& h1_scores, const std::vector<double>& h0_scores) {
    if (h1_scores.empty() || h0_scores.empty()) throw Error("ROC needs scores under both hypotheses");
    std::vector<double> h1 = h1_scores;
    std::vector<double> h0 = h0_scores;
    std::sort(h1.begin(), h1.end());
    std::sort(h0.begin(), h0.end());
    std::vector<double> thresholds;
    thresholds.reserve(h1.size() + h0.size() + 2);
    thresholds.push_back(std::numeric_limits<double>::infinity());
    std::merge(h1.begin(), h1.end(), h0.begin(), h0.end(), std::back_inserter(thresholds));
    std::reverse(thresholds.begin() + 1, thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(-std::numeric_limits<double>::infinity());

    const double n1 = static_cast<double>(h1.size());
    const double n0 = static_cast<double>(h0.size());
    RocCurve curve;
    curve.h1_trials = h1.size();
    curve.h0_trials = h0.size();
    curve.points.reserve(thresholds.size());
    for (double tau : thresholds) {
        const auto above1 = static_cast<double>(h1.end() - std::upper_bound(h1.begin(), h1.end(), tau));
        const auto above0 = static_cast<double>(h0.end() - std::upper_bound(h0.begin(), h0.end(), tau));
        curve.points.push_back({tau, above0 / n0, above1 / n1});
    }
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t s = 1; s < curve.points.size(); ++s) {
        const auto& a = curve.points[s - 1];
        const auto& b = curve.points[s];
        area += (b.p_fa - a.p_fa) * 0.5 * (a.p_d + b.p_d);
    }
    return area;
}

double delta_auc(const RocCurve& a, const RocCurve& b) { return auc(a) - auc(b); }

RocPoint operating_point(const std::vector<double>& h1_scores, const std::vector<double>& h0_scores, double tau) {
    auto above = [tau](const std::vector<double>& v) {
        return static_cast<double>(std::count_if(v.begin(), v.end(), [tau](double s) { return s > tau; })) /
               static_cast<double>(v.size());
    };
    return {tau, above(h0_scores), above(h1_scores)};
}

Matrix auc_covariance(const std::vector<std::vector<double>>& h1, const std::vector<std::vector<double>>& h0) {
    const std::size_t d = h1.size();
    if (d == 0 || h0.size() != d) throw Error("auc_covariance needs matching detector lists");
    const std::size_t m = h1.front().size();
    const std::size_t n = h0.front().size();
    if (m < 2 || n < 2) throw Error("auc_covariance needs at least two trials per hypothesis");

    // Structural components: V10[d][i] = mean_j psi(x_i, y_j), V01[d][j] = mean_i psi(x_i, y_j).
    std::vector<Vector> v10(d, Vector::Zero(static_cast<Eigen::Index>(m)));
    std::vector<Vector> v01(d, Vector::Zero(static_cast<Eigen::Index>(n)));
    for (std::size_t r = 0; r < d; ++r) {
        const auto& x = h1[r];
        const auto& y = h0[r];
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double psi = x[i] > y[j] ? 1.0 : (x[i] == y[j] ? 0.5 : 0.0);
                v10[r](i) += psi;
                v01[r](j) += psi;
            }
        }
        v10[r] /= static_cast<double>(n);
        v01[r] /= static_cast<double>(m);
    }
    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            const Vector ca = v10[a].array() - v10[a].mean();
            const Vector cb = v10[b].array() - v10[b].mean();
            const Vector da = v01[a].array() - v01[a].mean();
            const Vector db = v01[b].array() - v01[b].mean();
            const double s10 = ca.dot(cb) / static_cast<double>(m - 1);
            const double s01 = da.dot(db) / static_cast<double>(n - 1);
            cov(a, b) = s10 / static_cast<double>(m) + s01 / static_cast<double>(n);
        }
    }
    return cov;
}

} // namespace rctrack
