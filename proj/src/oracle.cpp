#include "rctrack/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rctrack {

namespace {

double noise_density(Point2 y, Point2 source, const NoiseModel& noise) {
    const double dx = y.x - source.x;
    const double dy = y.y - source.y;
    if (noise.sigma2 == 0.0) return (dx == 0.0 && dy == 0.0) ? 1.0 : 0.0;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * noise.sigma2)) / (2.0 * std::numbers::pi * noise.sigma2);
}

double integer_power(double base, std::size_t e) {
    double out = 1.0;
    for (std::size_t i = 0; i < e; ++i) out *= base;
    return out;
}

/// Calls fn(seq) for every sequence in {0..n-1}^len, last position fastest.
template <typename Fn>
void for_each_sequence(std::size_t n, std::size_t len, Fn&& fn) {
    std::vector<State> seq(len, 0);
    while (true) {
        fn(std::span<const State>(seq));
        std::size_t pos = len;
        while (pos > 0) {
            --pos;
            if (++seq[pos] < n) break;
            seq[pos] = 0;
            if (pos == 0) return;
        }
        if (len == 0) return;
    }
}

double epoch_probability(const ObservationRecord& rec, State x, const ClutterlessObsModel& model, const GridSpec& grid) {
    if (rec.points.size() != 1) throw ModelError("clutterless model expects one point per epoch");
    return noise_density(rec.points.front(), grid.center(x), model.noise);
}

double epoch_probability(const ObservationRecord& rec, State x, const SingleObsModel& model, const GridSpec& grid) {
    if (rec.points.size() != 1) throw ModelError("single-observation model expects one point per epoch");
    const Point2 y = rec.points.front();
    double total = (1.0 - model.epsilon) * noise_density(y, grid.center(x), model.noise);
    for (State u = 0; u < grid.size(); ++u) {
        total += model.epsilon * model.clutter.probs(static_cast<Eigen::Index>(u)) *
                 noise_density(y, grid.center(u), model.noise);
    }
    return total;
}

double epoch_probability(const ObservationRecord& rec, State x, const MultiObsModel& model, const GridSpec& grid) {
    const std::size_t m = model.m;
    if (rec.points.size() != m) throw ModelError("observation record size does not match M");
    const std::size_t n = grid.size();
    double total = 0.0;
    // a = 0: every slot is clutter; a = s + 1: slot s carries the target.
    for (std::size_t a = 0; a <= m; ++a) {
        const double prior = a == 0 ? model.lambda0 : model.lambda[a - 1];
        if (prior == 0.0) continue;
        for_each_sequence(n, m, [&](std::span<const State> u) {
            double p = prior;
            for (std::size_t s = 0; s < m; ++s) {
                p *= model.clutter.probs(static_cast<Eigen::Index>(u[s]));
                const State source = (a == s + 1) ? x : u[s];
                p *= noise_density(rec.points[s], grid.center(source), model.noise);
            }
            total += p;
        });
    }
    return total;
}

std::size_t association_count(const OracleObservation& obs) {
    if (const auto* multi = std::get_if<MultiObsModel>(&obs)) return multi->m + 1;
    return std::holds_alternative<SingleObsModel>(obs) ? 2 : 1;
}

/// Unnormalised Pr{X_t = i, Y_0..Y_t}, rows t = 0..T.
Matrix enumerate_joint(const PathLaw& law, const ObservationSequence& seq, const OracleObservation& obs,
                       const GridSpec& grid) {
    const std::size_t n = law.n;
    const std::size_t epochs = law.horizon + 1;
    if (seq.size() != epochs) throw ModelError("observation sequence length does not match horizon");
    if (grid.size() != n) throw ModelError("grid size does not match path law");
    const double paths = integer_power(static_cast<double>(n), epochs);
    if (paths * static_cast<double>(association_count(obs)) > kOracleBudget) {
        throw Error("enumeration exceeds the oracle budget");
    }
    const Matrix table = brute_force_observation_table(seq, obs, grid);
    Matrix joint = Matrix::Zero(static_cast<Eigen::Index>(epochs), static_cast<Eigen::Index>(n));
    for_each_sequence(n, epochs, [&](std::span<const State> path) {
        const double prior = law.probability(path);
        if (prior == 0.0) return;
        double acc = prior;
        for (std::size_t t = 0; t < epochs; ++t) {
            acc *= table(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(path[t]));
            if (acc == 0.0) return;
            joint(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(path[t])) += acc;
        }
    });
    return joint;
}

} // namespace

PathLaw hrc_path_law(const TransitionMatrix& a, const EndpointDistribution& pi, std::size_t horizon) {
    const Matrix at = a.power(horizon);
    const Matrix dense = a.dense();
    const Matrix endpoints = pi.matrix();
    return PathLaw{a.size(), horizon, [dense, at, endpoints](std::span<const State> x) {
                       const State s = x.front();
                       const State k = x.back();
                       if (endpoints(s, k) == 0.0) return 0.0;
                       double p = endpoints(s, k) / at(s, k);
                       for (std::size_t t = 0; t + 1 < x.size(); ++t) p *= dense(x[t], x[t + 1]);
                       return p;
                   }};
}

PathLaw hmc_path_law(const TransitionMatrix& a, const Vector& pi0, std::size_t horizon) {
    const Matrix dense = a.dense();
    return PathLaw{a.size(), horizon, [dense, pi0](std::span<const State> x) {
                       double p = pi0(static_cast<Eigen::Index>(x.front()));
                       for (std::size_t t = 0; t + 1 < x.size(); ++t) p *= dense(x[t], x[t + 1]);
                       return p;
                   }};
}

PathLaw hsc_path_law(const TransitionMatrix& a, const Vector& lambda0, const Vector& lambdaT, std::size_t horizon) {
    const Matrix dense = a.dense();
    return PathLaw{a.size(), horizon, [dense, lambda0, lambdaT](std::span<const State> x) {
                       double p = lambda0(static_cast<Eigen::Index>(x.front()));
                       for (std::size_t t = 0; t + 1 < x.size(); ++t) p *= dense(x[t], x[t + 1]);
                       return p * lambdaT(static_cast<Eigen::Index>(x.back()));
                   }};
}

Matrix brute_force_observation_table(const ObservationSequence& seq, const OracleObservation& obs,
                                     const GridSpec& grid) {
    const std::size_t n = grid.size();
    Matrix table(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < seq.size(); ++t) {
        for (State x = 0; x < n; ++x) {
            table(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(x)) =
                std::visit([&](const auto& model) { return epoch_probability(seq[t], x, model, grid); }, obs);
        }
    }
    return table;
}

double brute_force_sequence_likelihood(const PathLaw& law, const ObservationSequence& seq,
                                       const OracleObservation& obs, const GridSpec& grid) {
    return enumerate_joint(law, seq, obs, grid).row(static_cast<Eigen::Index>(law.horizon)).sum();
}

Matrix brute_force_posteriors(const PathLaw& law, const ObservationSequence& seq, const OracleObservation& obs,
                              const GridSpec& grid) {
    Matrix joint = enumerate_joint(law, seq, obs, grid);
    for (Eigen::Index t = 0; t < joint.rows(); ++t) {
        const double total = joint.row(t).sum();
        if (total > 0.0) joint.row(t) /= total;
    }
    return joint;
}

Vector brute_force_posterior(const PathLaw& law, const ObservationSequence& seq, const OracleObservation& obs,
                             const GridSpec& grid, std::size_t t) {
    if (t > law.horizon) throw ModelError("epoch beyond horizon");
    return brute_force_posteriors(law, seq, obs, grid).row(static_cast<Eigen::Index>(t)).transpose();
}

Matrix brute_force_bridge(const TransitionMatrix& a, std::size_t horizon, State k, std::size_t t) {
    if (t + 1 > horizon) throw ModelError("bridge epoch beyond horizon");
    const std::size_t n = a.size();
    const std::size_t steps = horizon - t;
    if (integer_power(static_cast<double>(n), steps) * static_cast<double>(n) > kOracleBudget) {
        throw Error("enumeration exceeds the oracle budget");
    }
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) {
        Vector mass = Vector::Zero(static_cast<Eigen::Index>(n));
        for_each_sequence(n, steps, [&](std::span<const State> tail) {
            if (tail.back() != k) return;
            double p = a(i, tail.front());
            for (std::size_t s = 0; s + 1 < tail.size() && p > 0.0; ++s) p *= a(tail[s], tail[s + 1]);
            mass(static_cast<Eigen::Index>(tail.front())) += p;
        });
        const double total = mass.sum();
        if (total > 0.0) out.row(static_cast<Eigen::Index>(i)) = (mass / total).transpose();
    }
    return out;
}

OracleInstance random_oracle_instance(Rng& rng, std::size_t n, std::size_t horizon, bool sparse) {
    if (n < 2 || n > 4) throw ModelError("oracle instances use 2 to 4 states");
    const GridSpec grid = n == 4 ? GridSpec{2, 2} : GridSpec{n, 1};
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) {
        for (State j = 0; j < n; ++j) {
            if (i == j) {
                a(i, j) = 0.2 + 0.8 * uniform01(rng);
            } else if (!sparse || uniform01(rng) < 0.6) {
                a(i, j) = 0.05 + 0.95 * uniform01(rng);
            }
        }
        a.row(static_cast<Eigen::Index>(i)) /= a.row(static_cast<Eigen::Index>(i)).sum();
    }
    TransitionMatrix base(a);
    const Matrix reach = base.power(horizon);
    Matrix pi = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) {
        for (State k = 0; k < n; ++k) {
            if (reach(i, k) > 0.0 && uniform01(rng) < 0.6) pi(i, k) = 0.1 + 0.9 * uniform01(rng);
        }
    }
    if (pi.sum() == 0.0) pi(0, 0) = 1.0;  // the diagonal of A is positive, so (0, 0) is reachable
    pi /= pi.sum();
    return OracleInstance{grid, std::move(base), EndpointDistribution(pi), horizon};
}

// ---- suites ----

namespace {

double relative_deviation(double value, double reference) {
    const double scale = std::max(std::abs(reference), 1e-300);
    return std::abs(value - reference) / scale;
}

void perturb(BridgeFamily& fam) {
    // +1e-3 on the first stored entry of the first reachable row.
    for (State k = 0; k < fam.size(); ++k) {
        for (std::size_t t = 0; t + 1 < fam.horizon(); ++t) {
            Matrix rows = fam.dense(k, t);
            std::vector<char> reach(fam.size());
            for (State i = 0; i < fam.size(); ++i) reach[i] = fam.reachable(k, t, i);
            for (State i = 0; i < fam.size(); ++i) {
                if (!reach[i]) continue;
                for (State j = 0; j < fam.size(); ++j) {
                    if (rows(i, j) > 0.0) {
                        rows(i, j) += 1e-3;
                        fam.set_step(k, t, rows, reach);
                        return;
                    }
                }
            }
        }
    }
}

SuiteResult bridge_suite(const OracleCheckOptions& options) {
    SuiteResult res{"bridges"};
    Rng rng(derive_seed(options.seed, 11, 0));
    for (std::size_t c = 0; c < options.instances; ++c) {
        const std::size_t n = 2 + c % 3;
        const std::size_t horizon = 2 + (c / 3) % 5;
        // The backward recursion needs overlapping pivot sets, which a strictly
        // positive chain guarantees; sparse chains check the closed form only.
        const bool sparse = c % 2 == 1;
        const OracleInstance inst = random_oracle_instance(rng, n, horizon, sparse);
        BridgeFamily closed = bridges_from_base_closed_form(inst.base, inst.endpoints, horizon);
        const BridgeFamily recursive =
            sparse ? closed : bridges_from_kernel(three_point_from_base(inst.base, horizon), inst.endpoints);
        if (options.perturb_bridge && c == 0) perturb(closed);
        for (State k = 0; k < n; ++k) {
            for (std::size_t t = 0; t + 1 < horizon; ++t) {
                const Matrix truth = brute_force_bridge(inst.base, horizon, k, t);
                const Matrix d1 = closed.dense(k, t);
                const Matrix d2 = recursive.dense(k, t);
                for (State i = 0; i < n; ++i) {
                    if (truth.row(static_cast<Eigen::Index>(i)).sum() == 0.0) continue;
                    const auto r = static_cast<Eigen::Index>(i);
                    res.max_marginal_deviation =
                        std::max({res.max_marginal_deviation, (d1.row(r) - truth.row(r)).cwiseAbs().maxCoeff(),
                                  (d2.row(r) - truth.row(r)).cwiseAbs().maxCoeff()});
                }
            }
        }
        ++res.cases;
    }
    res.passed = res.max_marginal_deviation < options.tolerance;
    return res;
}

SuiteResult likelihood_suite(const OracleCheckOptions& options) {
    SuiteResult res{"likelihoods"};
    Rng rng(derive_seed(options.seed, 12, 0));
    for (std::size_t c = 0; c < options.instances; ++c) {
        const std::size_t n = 2 + c % 3;
        const GridSpec grid = n == 4 ? GridSpec{2, 2} : GridSpec{n, 1};
        const NoiseModel noise{c % 4 == 3 ? 0.7 : 0.0};
        const ClutterModel clutter = ClutterModel::uniform(n);
        const std::size_t horizon = 3;
        std::vector<State> path(horizon + 1);
        for (auto& s : path) s = static_cast<State>(rng() % n);

        const SingleObsModel single{0.8 * uniform01(rng), noise, clutter};
        const MultiObsModel multi = MultiObsModel::exchangeable(1 + c % 2, 0.6 * uniform01(rng), noise, clutter);
        const ObservationSequence ys = generate_sequence(path, single, grid, rng);
        const ObservationSequence ym = generate_sequence(path, multi, grid, rng);

        auto compare = [&](const Matrix& value, const Matrix& truth) {
            for (Eigen::Index t = 0; t < truth.rows(); ++t) {
                for (Eigen::Index i = 0; i < truth.cols(); ++i) {
                    res.max_loglik_deviation =
                        std::max(res.max_loglik_deviation, truth(t, i) == 0.0 ? std::abs(value(t, i))
                                                                              : relative_deviation(value(t, i), truth(t, i)));
                }
            }
        };
        compare(single_obs_table(ys, single, grid), brute_force_observation_table(ys, single, grid));
        compare(clutterless_table(ys, noise, grid), brute_force_observation_table(ys, ClutterlessObsModel{noise}, grid));
        const Matrix multi_truth = brute_force_observation_table(ym, multi, grid);
        compare(multi_obs_table(ym, multi, grid), multi_truth);
        Matrix naive(multi_truth.rows(), multi_truth.cols());
        for (std::size_t t = 0; t < ym.size(); ++t) {
            naive.row(static_cast<Eigen::Index>(t)) = multi_obs_row_naive(ym[t].points, multi, grid).transpose();
        }
        compare(naive, multi_truth);

        // Null hypothesis: every point is clutter.
        const MultiObsModel null_multi = MultiObsModel::exchangeable(multi.m, 1.0, noise, clutter);
        const double null_truth = brute_force_observation_table(ym, null_multi, grid).col(0).array().log().sum();
        res.max_loglik_deviation = std::max(res.max_loglik_deviation,
                                            relative_deviation(null_loglik_multi(ym, multi, grid), null_truth));
        ++res.cases;
    }
    res.passed = res.max_loglik_deviation < options.tolerance;
    return res;
}

SuiteResult filter_suite(const OracleCheckOptions& options) {
    SuiteResult res{"filters"};
    Rng rng(derive_seed(options.seed, 13, 0));
    for (std::size_t c = 0; c < options.instances; ++c) {
        const std::size_t n = 2 + c % 3;
        const std::size_t horizon = 2 + (c / 3) % 4;
        const OracleInstance inst = random_oracle_instance(rng, n, horizon, c % 2 == 1);
        // Scaling converges geometrically only when A^T is positive; with zero
        // blocks the potentials may diverge, so HSC is checked on those instances.
        const bool with_hsc = (inst.base.power(horizon).array() > 0.0).all();
        TargetModels models = TargetModels::build(inst.grid, inst.base, inst.endpoints, horizon, with_hsc);
        if (options.perturb_bridge && c == 0) perturb(models.bridges);

        const NoiseModel noise{0.0};
        const ClutterModel clutter = ClutterModel::uniform(n);
        const SingleObsModel single{0.7 * uniform01(rng), noise, clutter};
        const MultiObsModel multi = MultiObsModel::exchangeable(1 + c % 2, 0.5 * uniform01(rng), noise, clutter);
        const std::vector<State> path = sample_rc_path(models.bridges, models.endpoints, rng);

        struct Case {
            OracleObservation obs;
            ObservationSequence seq;
            LikelihoodTable table;
        };
        std::vector<Case> cases;
        {
            const ObservationSequence seq = generate_sequence(path, SingleObsModel{0.0, noise, clutter}, inst.grid, rng);
            cases.push_back({ClutterlessObsModel{noise}, seq, clutterless_table(seq, noise, inst.grid)});
        }
        {
            const ObservationSequence seq = generate_sequence(path, single, inst.grid, rng);
            cases.push_back({single, seq, single_obs_table(seq, single, inst.grid)});
        }
        {
            const ObservationSequence seq = generate_sequence(path, multi, inst.grid, rng);
            cases.push_back({multi, seq, multi_obs_table(seq, multi, inst.grid)});
        }

        std::vector<PathLaw> laws{hrc_path_law(inst.base, inst.endpoints, horizon),
                                  hmc_path_law(inst.base, models.pi0, horizon)};
        std::vector<TargetModel> kinds{TargetModel::hrc, TargetModel::hmc};
        if (with_hsc) {
            laws.push_back(hsc_path_law(inst.base, models.schrodinger->lambda0, models.schrodinger->lambdaT, horizon));
            kinds.push_back(TargetModel::hsc);
            ++res.hsc_cases;
        }
        for (const Case& cs : cases) {
            for (std::size_t m = 0; m < laws.size(); ++m) {
                const double truth = brute_force_sequence_likelihood(laws[m], cs.seq, cs.obs, inst.grid);
                const Matrix post = brute_force_posteriors(laws[m], cs.seq, cs.obs, inst.grid);
                try {
                    const FilterOutput out = run_filter(cs.table, kinds[m], models);
                    res.max_loglik_deviation =
                        std::max(res.max_loglik_deviation, relative_deviation(std::exp(out.loglik), truth));
                    res.max_marginal_deviation =
                        std::max(res.max_marginal_deviation, (out.marginals - post).cwiseAbs().maxCoeff());
                } catch (const ZeroEvidenceError&) {
                    // Only legitimate when the oracle also assigns the data zero probability.
                    if (truth > 0.0) res.max_loglik_deviation = std::max(res.max_loglik_deviation, 1.0);
                }
            }
        }
        ++res.cases;
    }
    res.passed = res.max_loglik_deviation < options.tolerance && res.max_marginal_deviation < options.tolerance;
    return res;
}

} // namespace

std::vector<std::string> oracle_suite_names() { return {"bridges", "likelihoods", "filters"}; }

std::vector<SuiteResult> run_oracle_suites(const OracleCheckOptions& options) {
    if (options.suites.empty()) throw ConfigError("suite", "no oracle suite selected");
    std::vector<SuiteResult> out;
    for (const auto& name : options.suites) {
        if (name == "bridges") {
            out.push_back(bridge_suite(options));
        } else if (name == "likelihoods") {
            out.push_back(likelihood_suite(options));
        } else if (name == "filters") {
            out.push_back(filter_suite(options));
        } else {
            throw ConfigError("suite", "unknown oracle suite '" + name + "'");
        }
    }
    return out;
}

} // namespace rctrack
