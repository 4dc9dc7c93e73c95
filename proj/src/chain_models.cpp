#include "rctrack/chain_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rctrack {

namespace {

std::string where(State k, std::size_t t, State i) {
    return "(destination " + std::to_string(k) + ", t " + std::to_string(t) + ", state " + std::to_string(i) + ")";
}

void normalize_row(Matrix& rows, State i) {
    const double s = rows.row(i).sum();
    if (s > 0.0) rows.row(i) /= s;
}

template <typename RowFn>
State sample_sparse_row(const SparseRowMatrix& m, State i, Rng& rng, RowFn&& on_empty) {
    double total = 0.0;
    for (SparseRowMatrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it) total += it.value();
    if (total <= 0.0) on_empty();
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    State last = i;
    for (SparseRowMatrix::InnerIterator it(m, static_cast<Eigen::Index>(i)); it; ++it) {
        if (it.value() <= 0.0) continue;
        acc += it.value();
        last = static_cast<State>(it.col());
        if (u < acc) return last;
    }
    return last;
}

// One candidate pivot l for a backward-recursion row: the successors it
// covers and the ratios Q_{i,m,l}(t+1) / B^k_{m,l}(t+1) on them.
struct Pivot {
    State l = 0;
    std::vector<State> cover;
    std::vector<double> ratio;
    double min_b = 0.0;
};

std::optional<Pivot> make_pivot(const ThreePointKernel::Slice& slice, const Matrix& next,
                                const std::vector<char>& next_reach, State i, State l) {
    if (!slice.defined(i, l)) return std::nullopt;
    Pivot p;
    p.l = l;
    p.min_b = std::numeric_limits<double>::infinity();
    for (State m : slice.support(i, l)) {
        if (!next_reach[m]) continue;
        const double b = next(m, l);
        // Q_{i,m,l} > 0 with B_{m,l} = 0 means l cannot lie on a bridge path from i.
        if (b <= 0.0) return std::nullopt;
        p.cover.push_back(m);
        p.ratio.push_back(slice(i, m, l) / b);
        p.min_b = std::min(p.min_b, b);
    }
    if (p.cover.empty()) return std::nullopt;
    return p;
}

// Backward recursion for row i of B^k(t). A single pivot is used when one
// covers the support; otherwise pivots are chained through shared successors,
// whose ratios differ only by the pivot-dependent constant.
std::optional<Vector> backward_row(const ThreePointKernel::Slice& slice, const Matrix& next,
                                   const std::vector<char>& next_reach, State i, State k, std::size_t t) {
    const std::size_t n = slice.size();
    std::vector<Pivot> pivots;
    for (State l = 0; l < n; ++l) {
        if (auto p = make_pivot(slice, next, next_reach, i, l)) pivots.push_back(std::move(*p));
    }
    if (pivots.empty()) return std::nullopt;

    std::stable_sort(pivots.begin(), pivots.end(), [](const Pivot& a, const Pivot& b) {
        if (a.cover.size() != b.cover.size()) return a.cover.size() > b.cover.size();
        return a.min_b > b.min_b;
    });

    Vector row = Vector::Zero(static_cast<Eigen::Index>(n));
    std::vector<char> covered(n, 0);
    std::vector<char> merged(pivots.size(), 0);
    for (std::size_t a = 0; a < pivots[0].cover.size(); ++a) {
        row(pivots[0].cover[a]) = pivots[0].ratio[a];
        covered[pivots[0].cover[a]] = 1;
    }
    merged[0] = 1;

    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t c = 1; c < pivots.size(); ++c) {
            if (merged[c]) continue;
            const Pivot& p = pivots[c];
            std::size_t anchor = p.cover.size();
            double best_b = -1.0;
            for (std::size_t a = 0; a < p.cover.size(); ++a) {
                const double b = next(p.cover[a], p.l);
                if (covered[p.cover[a]] && b > best_b) {
                    best_b = b;
                    anchor = a;
                }
            }
            if (anchor == p.cover.size()) continue;
            const double scale = row(p.cover[anchor]) / p.ratio[anchor];
            for (std::size_t a = 0; a < p.cover.size(); ++a) {
                if (!covered[p.cover[a]]) {
                    row(p.cover[a]) = p.ratio[a] * scale;
                    covered[p.cover[a]] = 1;
                }
            }
            merged[c] = 1;
            progress = true;
        }
    }
    for (std::size_t c = 0; c < pivots.size(); ++c) {
        if (!merged[c]) {
            throw ModelError("backward recursion: pivot sets do not connect the row support " + where(k, t, i));
        }
    }
    row /= row.sum();
    return row;
}

void check_destination_consistency(const BridgeFamily& fam) {
    const std::size_t n = fam.size();
    const std::size_t horizon = fam.horizon();
    for (State k = 0; k < n; ++k) {
        if (!fam.has_initial(k)) continue;
        Vector dist = fam.initial(k);
        for (std::size_t t = 0; t + 1 < horizon; ++t) {
            for (State j = 0; j < n; ++j) {
                if (dist(j) > 0.0 && !fam.reachable(k, t, j)) {
                    throw ModelError("inconsistent kernel and endpoints: no continuation " + where(k, t, j));
                }
            }
            dist = (dist.transpose() * fam.transition(k, t)).transpose();
        }
    }
}

} // namespace

// ---- TransitionMatrix ----

TransitionMatrix::TransitionMatrix(Matrix a) : dense_(std::move(a)) {
    if (dense_.rows() != dense_.cols()) throw ModelError("transition matrix must be square");
    if (dense_.rows() < 2) throw ModelError("transition matrix needs at least 2 states");
    for (Eigen::Index i = 0; i < dense_.rows(); ++i) {
        for (Eigen::Index j = 0; j < dense_.cols(); ++j) {
            const double v = dense_(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ModelError("transition entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [0,1]");
            }
        }
        if (std::abs(dense_.row(i).sum() - 1.0) > kStochasticTol) {
            throw ModelError("transition row " + std::to_string(i) + " does not sum to 1");
        }
    }
    sparse_ = dense_.sparseView(0.0, 0.0);
    sparse_.makeCompressed();
}

Matrix TransitionMatrix::power(std::size_t n) const {
    Matrix p = Matrix::Identity(dense_.rows(), dense_.cols());
    for (std::size_t s = 0; s < n; ++s) p = p * dense_;
    return p;
}

// ---- EndpointDistribution ----

EndpointDistribution::EndpointDistribution(Matrix pi) : pi_(std::move(pi)) {
    if (pi_.rows() != pi_.cols() || pi_.rows() == 0) throw ModelError("endpoint distribution must be square and nonempty");
    if ((pi_.array() < 0.0).any() || !pi_.allFinite()) throw ModelError("endpoint distribution has negative entries");
    if (std::abs(pi_.sum() - 1.0) > kStochasticTol) throw ModelError("endpoint distribution does not sum to 1");
}

bool EndpointDistribution::feasible(const TransitionMatrix& a, std::size_t horizon) const {
    if (a.size() != size()) return false;
    const Matrix p = a.power(horizon);
    for (Eigen::Index i = 0; i < pi_.rows(); ++i) {
        for (Eigen::Index k = 0; k < pi_.cols(); ++k) {
            if (pi_(i, k) > 0.0 && p(i, k) <= 0.0) return false;
        }
    }
    return true;
}

EndpointDistribution EndpointDistribution::markov(const TransitionMatrix& a, const Vector& pi0, std::size_t horizon) {
    if (static_cast<std::size_t>(pi0.size()) != a.size()) throw ModelError("pi0 size mismatch");
    return EndpointDistribution(pi0.asDiagonal() * a.power(horizon));
}

// ---- ThreePointKernel ----

ThreePointKernel::Slice::Slice(std::size_t n)
    : n_(n), q_(n * n * n, 0.0), defined_(n * n, 0), support_(n * n) {}

void ThreePointKernel::Slice::set(State i, State l, const Vector& column) {
    auto& sup = support_[i * n_ + l];
    sup.clear();
    for (State j = 0; j < n_; ++j) {
        q_[(i * n_ + l) * n_ + j] = column(j);
        if (column(j) > 0.0) sup.push_back(j);
    }
    defined_[i * n_ + l] = 1;
}

ThreePointKernel::ThreePointKernel(std::size_t horizon, std::vector<std::shared_ptr<const Slice>> slices)
    : horizon_(horizon), slices_(std::move(slices)) {
    if (horizon_ < 2) throw ModelError("horizon must be at least 2");
    if (slices_.size() != horizon_ - 1) throw ModelError("three-point kernel needs T-1 interior slices");
}

const ThreePointKernel::Slice& ThreePointKernel::at(std::size_t t) const {
    if (t < 1 || t >= horizon_) throw ModelError("three-point slice index out of range");
    return *slices_[t - 1];
}

ThreePointKernel three_point_from_base(const TransitionMatrix& a, std::size_t horizon) {
    if (horizon < 2) throw ModelError("horizon must be at least 2");
    const std::size_t n = a.size();
    const Matrix& am = a.dense();
    const Matrix a2 = am * am;
    auto slice = std::make_shared<ThreePointKernel::Slice>(n);
    Vector column(static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) {
        for (State l = 0; l < n; ++l) {
            if (a2(i, l) <= 0.0) continue;
            for (State j = 0; j < n; ++j) column(j) = am(i, j) * am(j, l) / a2(i, l);
            slice->set(i, l, column);
        }
    }
    std::vector<std::shared_ptr<const ThreePointKernel::Slice>> slices(horizon - 1, slice);
    return ThreePointKernel(horizon, std::move(slices));
}

// ---- BridgeFamily ----

BridgeFamily::BridgeFamily(std::size_t n, std::size_t horizon)
    : n_(n), horizon_(horizon),
      steps_(n * (horizon - 1)), reachable_(n * (horizon - 1), std::vector<char>(n, 0)),
      initial_(n, Vector::Zero(static_cast<Eigen::Index>(n))), has_initial_(n, 0) {
    if (horizon < 2) throw ModelError("horizon must be at least 2");
    for (auto& s : steps_) s.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

void BridgeFamily::set_step(State k, std::size_t t, const Matrix& rows, const std::vector<char>& reachable) {
    SparseRowMatrix s = rows.sparseView(0.0, 0.0);
    s.makeCompressed();
    steps_[index(k, t)] = std::move(s);
    reachable_[index(k, t)] = reachable;
}

void BridgeFamily::set_initial(const EndpointDistribution& pi) {
    if (pi.size() != n_) throw ModelError("endpoint distribution size mismatch");
    for (State k = 0; k < n_; ++k) {
        const double mass = pi.matrix().col(static_cast<Eigen::Index>(k)).sum();
        if (mass > 0.0) {
            initial_[k] = pi.matrix().col(static_cast<Eigen::Index>(k)) / mass;
            has_initial_[k] = 1;
        } else {
            initial_[k].setZero();
            has_initial_[k] = 0;
        }
    }
}

BridgeFamily bridges_from_kernel(const ThreePointKernel& q, const EndpointDistribution& pi) {
    const std::size_t n = q.size();
    const std::size_t horizon = q.horizon();
    if (pi.size() != n) throw ModelError("endpoint distribution size mismatch");

    BridgeFamily fam(n, horizon);
    fam.set_initial(pi);
    Matrix rows(n, n);
    Matrix next(n, n);
    std::vector<char> reach(n);
    std::vector<char> next_reach(n);

    for (State k = 0; k < n; ++k) {
        // B^k(T-2) = Q_{.,.,k}(T-1)
        const auto& last = q.at(horizon - 1);
        rows.setZero();
        std::fill(reach.begin(), reach.end(), 0);
        for (State i = 0; i < n; ++i) {
            if (!last.defined(i, k)) continue;
            for (State j : last.support(i, k)) rows(i, j) = last(i, j, k);
            normalize_row(rows, i);
            reach[i] = rows.row(i).sum() > 0.0;
        }
        fam.set_step(k, horizon - 2, rows, reach);

        for (std::size_t t = horizon - 2; t-- > 0;) {
            next = rows;
            next_reach = reach;
            const auto& slice = q.at(t + 1);
            rows.setZero();
            std::fill(reach.begin(), reach.end(), 0);
            for (State i = 0; i < n; ++i) {
                if (auto row = backward_row(slice, next, next_reach, i, k, t)) {
                    rows.row(i) = row->transpose();
                    reach[i] = 1;
                }
            }
            fam.set_step(k, t, rows, reach);
        }
    }
    check_destination_consistency(fam);
    return fam;
}

std::optional<Vector> bridge_row_via_pivot(const ThreePointKernel& q, const BridgeFamily& family,
                                           State k, std::size_t t, State i, State l) {
    if (t + 2 >= family.horizon()) return std::nullopt;
    const std::size_t n = family.size();
    const Matrix next = family.dense(k, t + 1);
    std::vector<char> next_reach(n);
    for (State m = 0; m < n; ++m) next_reach[m] = family.reachable(k, t + 1, m);

    const auto pivot = make_pivot(q.at(t + 1), next, next_reach, i, l);
    if (!pivot) return std::nullopt;

    const Matrix current = family.dense(k, t);
    std::size_t support = 0;
    for (State j = 0; j < n; ++j) support += current(i, j) > 0.0;
    if (pivot->cover.size() != support) return std::nullopt;

    Vector row = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < pivot->cover.size(); ++a) {
        if (current(i, pivot->cover[a]) <= 0.0) return std::nullopt;
        row(pivot->cover[a]) = pivot->ratio[a];
    }
    row /= row.sum();
    return row;
}

BridgeFamily bridges_from_base_closed_form(const TransitionMatrix& a, const EndpointDistribution& pi,
                                           std::size_t horizon) {
    if (horizon < 2) throw ModelError("horizon must be at least 2");
    const std::size_t n = a.size();
    if (pi.size() != n) throw ModelError("endpoint distribution size mismatch");

    std::vector<Matrix> powers(horizon + 1);
    powers[0] = Matrix::Identity(n, n);
    for (std::size_t s = 1; s <= horizon; ++s) powers[s] = powers[s - 1] * a.dense();

    for (State i = 0; i < n; ++i) {
        for (State k = 0; k < n; ++k) {
            if (pi(i, k) > 0.0 && powers[horizon](i, k) <= 0.0) {
                throw ModelError("endpoint pair (" + std::to_string(i) + "," + std::to_string(k) +
                                 ") unreachable within horizon " + std::to_string(horizon));
            }
        }
    }

    BridgeFamily fam(n, horizon);
    fam.set_initial(pi);
    const SparseRowMatrix& as = a.sparse();
    Matrix rows(n, n);
    std::vector<char> reach(n);
    for (State k = 0; k < n; ++k) {
        for (std::size_t t = 0; t + 1 < horizon; ++t) {
            const Matrix& ahead = powers[horizon - t - 1];
            const Matrix& here = powers[horizon - t];
            rows.setZero();
            std::fill(reach.begin(), reach.end(), 0);
            for (State i = 0; i < n; ++i) {
                const double denom = here(i, k);
                if (denom <= 0.0) continue;
                for (SparseRowMatrix::InnerIterator it(as, static_cast<Eigen::Index>(i)); it; ++it) {
                    rows(i, it.col()) = it.value() * ahead(it.col(), k) / denom;
                }
                normalize_row(rows, i);
                reach[i] = 1;
            }
            fam.set_step(k, t, rows, reach);
        }
    }
    return fam;
}

// ---- Schrodinger bridge ----

SchrodingerBridge solve_schrodinger(const TransitionMatrix& a, const Vector& pi0, const Vector& piT,
                                    std::size_t horizon, const SchrodingerOptions& options) {
    const std::size_t n = a.size();
    if (horizon < 1) throw ModelError("Schrodinger horizon must be at least 1");
    if (static_cast<std::size_t>(pi0.size()) != n || static_cast<std::size_t>(piT.size()) != n) {
        throw ModelError("marginal size mismatch");
    }
    for (const Vector* v : {&pi0, &piT}) {
        if ((v->array() < 0.0).any() || std::abs(v->sum() - 1.0) > 1e-10) {
            throw ModelError("Schrodinger marginals must be probability vectors");
        }
    }

    const Matrix p = a.power(horizon);
    for (State k = 0; k < n; ++k) {
        if (piT(k) <= 0.0) continue;
        bool hit = false;
        for (State i = 0; i < n && !hit; ++i) hit = pi0(i) > 0.0 && p(i, k) > 0.0;
        if (!hit) throw ModelError("terminal state " + std::to_string(k) + " unreachable from initial support");
    }
    for (State i = 0; i < n; ++i) {
        if (pi0(i) <= 0.0) continue;
        bool hit = false;
        for (State k = 0; k < n && !hit; ++k) hit = piT(k) > 0.0 && p(i, k) > 0.0;
        if (!hit) throw ModelError("initial state " + std::to_string(i) + " reaches no terminal support");
    }

    SchrodingerBridge sb;
    Vector lambdaT = Vector::Ones(static_cast<Eigen::Index>(n));
    Vector lambda0 = Vector::Zero(static_cast<Eigen::Index>(n));
    auto update_lambda0 = [&] {
        const Vector back = p * lambdaT;
        Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
        for (State i = 0; i < n; ++i) {
            if (pi0(i) > 0.0) out(i) = pi0(i) / back(i);
        }
        return out;
    };
    auto relative_change = [](const Vector& before, const Vector& after) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < after.size(); ++i) {
            if (after(i) > 0.0) worst = std::max(worst, std::abs(after(i) - before(i)) / after(i));
        }
        return worst;
    };

    bool converged = false;
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        const Vector new0 = update_lambda0();
        const Vector fwd = p.transpose() * new0;
        Vector newT = Vector::Zero(static_cast<Eigen::Index>(n));
        for (State k = 0; k < n; ++k) {
            if (piT(k) > 0.0) newT(k) = piT(k) / fwd(k);
        }
        change = std::max(relative_change(lambda0, new0), relative_change(lambdaT, newT));
        lambda0 = new0;
        lambdaT = newT;
        sb.iterations = it;
        if (it > 1 && change < options.tol) {
            converged = true;
            break;
        }
    }
    lambda0 = update_lambda0();
    const Vector start = lambda0.cwiseProduct(p * lambdaT);
    const Vector end = lambdaT.cwiseProduct(p.transpose() * lambda0);
    sb.residual = std::max((start - pi0).cwiseAbs().maxCoeff(), (end - piT).cwiseAbs().maxCoeff());
    if (!converged) {
        throw ConvergenceError("Schrodinger scaling did not converge; residual " + std::to_string(sb.residual) +
                                   ", last change " + std::to_string(change),
                               sb.residual);
    }

    sb.lambda0 = lambda0;
    sb.lambdaT = lambdaT;
    sb.psi.resize(horizon + 1);
    sb.psi[horizon] = lambdaT;
    for (std::size_t t = horizon; t-- > 0;) sb.psi[t] = a.sparse() * sb.psi[t + 1];

    sb.transitions.resize(horizon);
    sb.reachable.assign(horizon, std::vector<char>(n, 0));
    const SparseRowMatrix& as = a.sparse();
    Matrix rows(n, n);
    for (std::size_t t = 0; t < horizon; ++t) {
        rows.setZero();
        for (State i = 0; i < n; ++i) {
            const double denom = sb.psi[t](i);
            if (denom <= 0.0) continue;
            for (SparseRowMatrix::InnerIterator it(as, static_cast<Eigen::Index>(i)); it; ++it) {
                rows(i, it.col()) = it.value() * sb.psi[t + 1](it.col()) / denom;
            }
            normalize_row(rows, i);
            sb.reachable[t][i] = 1;
        }
        sb.transitions[t] = rows.sparseView(0.0, 0.0);
        sb.transitions[t].makeCompressed();
    }
    return sb;
}

// ---- sampling ----

std::vector<State> sample_rc_path(const BridgeFamily& bridges, const EndpointDistribution& pi, Rng& rng) {
    const std::size_t n = bridges.size();
    const std::size_t horizon = bridges.horizon();
    std::vector<double> weights(n * n);
    for (State i = 0; i < n; ++i) {
        for (State k = 0; k < n; ++k) weights[i * n + k] = pi(i, k);
    }
    const std::size_t pair = sample_categorical(weights, rng);
    const State k = pair % n;
    std::vector<State> path(horizon + 1);
    path[0] = pair / n;
    for (std::size_t t = 0; t + 1 < horizon; ++t) {
        path[t + 1] = sample_sparse_row(bridges.transition(k, t), path[t], rng, [&] {
            throw ModelError("sampled into an unreachable bridge row " + where(k, t, path[t]));
        });
    }
    path[horizon] = k;
    return path;
}

std::vector<State> sample_markov_path(const TransitionMatrix& a, const Vector& pi0, std::size_t horizon, Rng& rng) {
    std::vector<State> path(horizon + 1);
    path[0] = sample_categorical(std::span<const double>(pi0.data(), static_cast<std::size_t>(pi0.size())), rng);
    for (std::size_t t = 0; t < horizon; ++t) {
        path[t + 1] = sample_sparse_row(a.sparse(), path[t], rng, [] {
            throw ModelError("transition row with no mass");
        });
    }
    return path;
}

std::vector<State> sample_markov_path(const std::vector<SparseRowMatrix>& steps, const Vector& pi0, Rng& rng) {
    std::vector<State> path(steps.size() + 1);
    path[0] = sample_categorical(std::span<const double>(pi0.data(), static_cast<std::size_t>(pi0.size())), rng);
    for (std::size_t t = 0; t < steps.size(); ++t) {
        path[t + 1] = sample_sparse_row(steps[t], path[t], rng, [&] {
            throw ModelError("sampled into a transition row with no mass at t " + std::to_string(t));
        });
    }
    return path;
}

} // namespace rctrack
