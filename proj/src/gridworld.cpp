#include "rctrack/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rctrack {

State GridSpec::state(std::size_t x, std::size_t y) const {
    if (x < 1 || x > width || y < 1 || y > height) {
        throw ModelError("cell (" + std::to_string(x) + "," + std::to_string(y) + ") outside grid");
    }
    return (y - 1) * width + (x - 1);
}

std::pair<std::size_t, std::size_t> GridSpec::cell(State s) const {
    return {s % width + 1, s / width + 1};
}

Point2 GridSpec::center(State s) const {
    const auto [x, y] = cell(s);
    return {static_cast<double>(x), static_cast<double>(y)};
}

std::vector<State> GridSpec::corners() const {
    return {state(1, 1), state(width, 1), state(1, height), state(width, height)};
}

TransitionMatrix build_random_walk(const GridSpec& grid, double p_stay) {
    if (!(p_stay > 0.0 && p_stay < 1.0)) throw ModelError("p_R must lie in (0, 1)");
    const std::size_t n = grid.size();
    Matrix a = Matrix::Zero(n, n);
    std::vector<State> nbrs;
    for (State s = 0; s < n; ++s) {
        const auto [x, y] = grid.cell(s);
        nbrs.clear();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const long nx = static_cast<long>(x) + dx;
                const long ny = static_cast<long>(y) + dy;
                if (nx < 1 || ny < 1 || nx > static_cast<long>(grid.width) || ny > static_cast<long>(grid.height)) continue;
                nbrs.push_back(grid.state(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny)));
            }
        }
        if (nbrs.empty()) {
            a(s, s) = 1.0;
            continue;
        }
        a(s, s) = p_stay;
        const double move = (1.0 - p_stay) / static_cast<double>(nbrs.size());
        for (State j : nbrs) a(s, j) = move;
    }
    return TransitionMatrix(std::move(a));
}

std::size_t min_steps(const GridSpec& grid, State i, State j) {
    const auto [xi, yi] = grid.cell(i);
    const auto [xj, yj] = grid.cell(j);
    const std::size_t dx = xi > xj ? xi - xj : xj - xi;
    const std::size_t dy = yi > yj ? yi - yj : yj - yi;
    return std::max(dx, dy);
}

EndpointDistribution endpoints_crossing(const GridSpec& grid) {
    if (grid.width < 2 || grid.height < 2) throw ModelError("crossing endpoints need a grid with four distinct corners");
    const std::size_t n = grid.size();
    Matrix pi = Matrix::Zero(n, n);
    const State sw = grid.state(1, 1);
    const State se = grid.state(grid.width, 1);
    const State nw = grid.state(1, grid.height);
    const State ne = grid.state(grid.width, grid.height);
    pi(sw, ne) = 0.25;
    pi(ne, sw) = 0.25;
    pi(se, nw) = 0.25;
    pi(nw, se) = 0.25;
    return EndpointDistribution(std::move(pi));
}

EndpointDistribution endpoints_loitering(const GridSpec& grid, const std::vector<double>& weights) {
    const std::size_t n = grid.size();
    if (weights.size() != n) throw ModelError("loiter weights must have one entry per cell");
    Matrix pi = Matrix::Zero(n, n);
    for (State i = 0; i < n; ++i) pi(i, i) = weights[i];
    return EndpointDistribution(std::move(pi));
}

EndpointDistribution endpoints_loitering(const GridSpec& grid) {
    return endpoints_loitering(grid, std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size())));
}

EndpointDistribution endpoints_mixture(const GridSpec& grid, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ModelError("alpha must lie in [0, 1]");
    const std::size_t n = grid.size();
    Matrix pi = Matrix::Zero(n, n);
    if (alpha > 0.0) pi += alpha * endpoints_crossing(grid).matrix();
    if (alpha < 1.0) pi += (1.0 - alpha) * endpoints_loitering(grid).matrix();
    return EndpointDistribution(std::move(pi));
}

EndpointDistribution endpoints_pair(const GridSpec& grid, State source, State destination) {
    const std::size_t n = grid.size();
    if (source >= n || destination >= n) throw ModelError("endpoint pair outside grid");
    Matrix pi = Matrix::Zero(n, n);
    pi(source, destination) = 1.0;
    return EndpointDistribution(std::move(pi));
}

EndpointDistribution make_endpoints(const GridSpec& grid, const EndpointSpec& spec) {
    switch (spec.kind) {
    case EndpointKind::crossing:
        return endpoints_crossing(grid);
    case EndpointKind::loitering:
        return spec.loiter_weights.empty() ? endpoints_loitering(grid) : endpoints_loitering(grid, spec.loiter_weights);
    case EndpointKind::mixture:
        return endpoints_mixture(grid, spec.alpha);
    case EndpointKind::pair:
        return endpoints_pair(grid, spec.source, spec.destination);
    case EndpointKind::explicit_matrix:
        if (static_cast<std::size_t>(spec.pi.rows()) != grid.size()) throw ModelError("explicit Pi does not match grid");
        return EndpointDistribution(spec.pi);
    }
    throw ModelError("unknown endpoint kind");
}

double benefit_indicator(const EndpointDistribution& pi, std::size_t horizon, const GridSpec& grid) {
    if (horizon < 1) throw ModelError("horizon must be at least 1");
    if (pi.size() != grid.size()) throw ModelError("endpoint distribution does not match grid");
    const std::size_t n = grid.size();
    double total = 0.0;
    for (State i = 0; i < n; ++i) {
        for (State j = 0; j < n; ++j) {
            if (pi(i, j) > 0.0) total += static_cast<double>(min_steps(grid, i, j)) * pi(i, j);
        }
    }
    const double beta = total / static_cast<double>(horizon);
    // Only absorb round-off; a genuinely infeasible Pi is rejected upstream.
    return (beta > 1.0 && beta < 1.0 + 1e-12) ? 1.0 : beta;
}

} // namespace rctrack
