#include "rctrack/observation.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rctrack {

namespace {

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ModelError(std::string(name) + " must lie in [0, 1]");
}

void check_clutter(const ClutterModel& clutter, std::size_t n) {
    if (static_cast<std::size_t>(clutter.probs.size()) != n) throw ModelError("clutter law size does not match grid");
    if ((clutter.probs.array() < 0.0).any() || std::abs(clutter.probs.sum() - 1.0) > 1e-12) {
        throw ModelError("clutter law must be a probability vector");
    }
}

Point2 noisy_center(State s, const NoiseModel& noise, const GridSpec& grid, Rng& rng) {
    Point2 c = grid.center(s);
    if (noise.sigma2 > 0.0) {
        std::normal_distribution<double> gauss(0.0, std::sqrt(noise.sigma2));
        c.x += gauss(rng);
        c.y += gauss(rng);
    }
    return c;
}

State draw_clutter(const ClutterModel& clutter, Rng& rng) {
    return sample_categorical(std::span<const double>(clutter.probs.data(), static_cast<std::size_t>(clutter.probs.size())), rng);
}

} // namespace

ClutterModel ClutterModel::uniform(std::size_t n) {
    return {Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
}

void SingleObsModel::validate(std::size_t n) const {
    check_probability(epsilon, "epsilon");
    if (!(noise.sigma2 >= 0.0)) throw ModelError("sigma2 must be nonnegative");
    check_clutter(clutter, n);
}

MultiObsModel MultiObsModel::exchangeable(std::size_t m, double lambda0, NoiseModel noise, ClutterModel clutter) {
    if (m == 0) throw ModelError("M must be at least 1");
    MultiObsModel model;
    model.m = m;
    model.lambda0 = lambda0;
    model.lambda.assign(m, (1.0 - lambda0) / static_cast<double>(m));
    model.noise = noise;
    model.clutter = std::move(clutter);
    return model;
}

void MultiObsModel::validate(std::size_t n) const {
    if (m == 0) throw ModelError("M must be at least 1");
    if (lambda.size() != m) throw ModelError("need one association prior per slot");
    check_probability(lambda0, "lambda0");
    double total = lambda0;
    for (double l : lambda) {
        check_probability(l, "lambda");
        total += l;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ModelError("association priors must sum to 1");
    if (!(noise.sigma2 >= 0.0)) throw ModelError("sigma2 must be nonnegative");
    check_clutter(clutter, n);
}

double point_likelihood(Point2 y, State i, const NoiseModel& noise, const GridSpec& grid) {
    const Point2 c = grid.center(i);
    if (noise.sigma2 == 0.0) return (y.x == c.x && y.y == c.y) ? 1.0 : 0.0;
    const double dx = y.x - c.x;
    const double dy = y.y - c.y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * noise.sigma2)) / (2.0 * std::numbers::pi * noise.sigma2);
}

Vector point_likelihood_row(Point2 y, const NoiseModel& noise, const GridSpec& grid) {
    const std::size_t n = grid.size();
    Vector row(static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) row(i) = point_likelihood(y, i, noise, grid);
    return row;
}

double clutter_point_likelihood(Point2 y, const NoiseModel& noise, const ClutterModel& clutter, const GridSpec& grid) {
    return point_likelihood_row(y, noise, grid).dot(clutter.probs);
}

double single_obs_likelihood(Point2 y, State i, const SingleObsModel& model, const GridSpec& grid) {
    return (1.0 - model.epsilon) * point_likelihood(y, i, model.noise, grid) +
           model.epsilon * clutter_point_likelihood(y, model.noise, model.clutter, grid);
}

Vector single_obs_row(Point2 y, const SingleObsModel& model, const GridSpec& grid) {
    const Vector c = point_likelihood_row(y, model.noise, grid);
    const double background = c.dot(model.clutter.probs);
    return ((1.0 - model.epsilon) * c).array() + model.epsilon * background;
}

double multi_obs_likelihood(std::span<const Point2> ys, State i, const MultiObsModel& model, const GridSpec& grid) {
    return multi_obs_row(ys, model, grid)(static_cast<Eigen::Index>(i));
}

Vector multi_obs_row(std::span<const Point2> ys, const MultiObsModel& model, const GridSpec& grid, KernelStats* stats) {
    const std::size_t m = model.m;
    if (ys.size() != m) {
        throw ModelError("expected " + std::to_string(m) + " points per epoch, got " + std::to_string(ys.size()));
    }
    const std::size_t n = grid.size();
    std::vector<Vector> c(m);
    std::vector<double> background(m);
    for (std::size_t s = 0; s < m; ++s) {
        c[s] = point_likelihood_row(ys[s], model.noise, grid);
        background[s] = c[s].dot(model.clutter.probs);
    }
    // others[l] = product of clutter terms over every slot except l
    std::vector<double> prefix(m + 1, 1.0);
    std::vector<double> suffix(m + 1, 1.0);
    for (std::size_t s = 0; s < m; ++s) prefix[s + 1] = prefix[s] * background[s];
    for (std::size_t s = m; s-- > 0;) suffix[s] = suffix[s + 1] * background[s];

    Vector row = Vector::Constant(static_cast<Eigen::Index>(n), model.lambda0 * prefix[m]);
    for (std::size_t l = 0; l < m; ++l) {
        const double weight = model.lambda[l] * prefix[l] * suffix[l + 1];
        if (weight != 0.0) row += weight * c[l];
    }
    if (stats) stats->likelihood_mults += 2 * m * n + 3 * m;
    return row;
}

Vector multi_obs_row_naive(std::span<const Point2> ys, const MultiObsModel& model, const GridSpec& grid,
                           KernelStats* stats) {
    const std::size_t m = model.m;
    if (ys.size() != m) {
        throw ModelError("expected " + std::to_string(m) + " points per epoch, got " + std::to_string(ys.size()));
    }
    const std::size_t n = grid.size();
    auto clutter_term = [&](const Point2& y) {
        double acc = 0.0;
        for (State j = 0; j < n; ++j) acc += point_likelihood(y, j, model.noise, grid) * model.clutter.probs(j);
        if (stats) stats->likelihood_mults += n;
        return acc;
    };
    Vector row(static_cast<Eigen::Index>(n));
    for (State i = 0; i < n; ++i) {
        double total = 0.0;
        for (std::size_t l = 0; l < m; ++l) {
            double term = model.lambda[l] * point_likelihood(ys[l], i, model.noise, grid);
            for (std::size_t s = 0; s < m; ++s) {
                if (s != l) term *= clutter_term(ys[s]);
            }
            total += term;
        }
        double none = model.lambda0;
        for (std::size_t s = 0; s < m; ++s) none *= clutter_term(ys[s]);
        row(i) = total + none;
    }
    return row;
}

LikelihoodTable clutterless_table(const ObservationSequence& seq, const NoiseModel& noise, const GridSpec& grid) {
    LikelihoodTable table(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq[t].points.size() != 1) throw ModelError("clutterless model expects one point per epoch");
        table.row(t) = point_likelihood_row(seq[t].points.front(), noise, grid).transpose();
    }
    return table;
}

LikelihoodTable single_obs_table(const ObservationSequence& seq, const SingleObsModel& model, const GridSpec& grid) {
    LikelihoodTable table(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq[t].points.size() != 1) throw ModelError("single-observation model expects one point per epoch");
        table.row(t) = single_obs_row(seq[t].points.front(), model, grid).transpose();
    }
    return table;
}

LikelihoodTable multi_obs_table(const ObservationSequence& seq, const MultiObsModel& model, const GridSpec& grid) {
    LikelihoodTable table(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t t = 0; t < seq.size(); ++t) table.row(t) = multi_obs_row(seq[t].points, model, grid).transpose();
    return table;
}

ObservationRecord generate_single(State x, std::size_t epoch, const SingleObsModel& model, const GridSpec& grid,
                                  Rng& rng) {
    const bool clutter = uniform01(rng) < model.epsilon;
    const State source = clutter ? draw_clutter(model.clutter, rng) : x;
    return {epoch, {noisy_center(source, model.noise, grid, rng)}};
}

ObservationRecord generate_multi(State x, std::size_t epoch, const MultiObsModel& model, const GridSpec& grid,
                                 Rng& rng) {
    std::vector<double> weights;
    weights.reserve(model.m + 1);
    weights.push_back(model.lambda0);
    weights.insert(weights.end(), model.lambda.begin(), model.lambda.end());
    const std::size_t a = sample_categorical(weights, rng);  // 0: no target slot
    ObservationRecord rec{epoch, {}};
    rec.points.reserve(model.m);
    for (std::size_t s = 0; s < model.m; ++s) {
        const State source = (a == s + 1) ? x : draw_clutter(model.clutter, rng);
        rec.points.push_back(noisy_center(source, model.noise, grid, rng));
    }
    return rec;
}

ObservationSequence generate_sequence(const std::vector<State>& path, const SingleObsModel& model,
                                      const GridSpec& grid, Rng& rng) {
    ObservationSequence seq;
    seq.reserve(path.size());
    for (std::size_t t = 0; t < path.size(); ++t) seq.push_back(generate_single(path[t], t, model, grid, rng));
    return seq;
}

ObservationSequence generate_sequence(const std::vector<State>& path, const MultiObsModel& model,
                                      const GridSpec& grid, Rng& rng) {
    ObservationSequence seq;
    seq.reserve(path.size());
    for (std::size_t t = 0; t < path.size(); ++t) seq.push_back(generate_multi(path[t], t, model, grid, rng));
    return seq;
}

} // namespace rctrack
