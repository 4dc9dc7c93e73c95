#pragma once

#include "rctrack/chain_models.hpp"
#include "rctrack/types.hpp"

#include <utility>
#include <vector>

namespace rctrack {

/// Rectangular cellular state space. Cell (x, y), x in 1..width and
/// y in 1..height, maps row-major to state (y - 1) * width + (x - 1); its
/// centre sits at real coordinates (x, y).
struct GridSpec {
    std::size_t width = 8;
    std::size_t height = 8;

    [[nodiscard]] std::size_t size() const { return width * height; }
    [[nodiscard]] State state(std::size_t x, std::size_t y) const;
    [[nodiscard]] std::pair<std::size_t, std::size_t> cell(State s) const;
    [[nodiscard]] Point2 center(State s) const;
    [[nodiscard]] std::vector<State> corners() const;
};

enum class EndpointKind { crossing, loitering, mixture, pair, explicit_matrix };

struct EndpointSpec {
    EndpointKind kind = EndpointKind::mixture;
    double alpha = 1.0;
    std::vector<double> loiter_weights;  // empty means uniform
    State source = 0;                    // pair
    State destination = 0;               // pair
    Matrix pi;                           // explicit_matrix
};

/// 8-connected random walk: stay with p_R, otherwise move uniformly to an
/// in-bounds neighbour.
[[nodiscard]] TransitionMatrix build_random_walk(const GridSpec& grid, double p_stay);

/// Chebyshev distance, the minimum number of 8-connected moves.
[[nodiscard]] std::size_t min_steps(const GridSpec& grid, State i, State j);

/// Uniform over the four (corner -> diagonally opposite corner) pairs.
[[nodiscard]] EndpointDistribution endpoints_crossing(const GridSpec& grid);
[[nodiscard]] EndpointDistribution endpoints_loitering(const GridSpec& grid, const std::vector<double>& weights);
[[nodiscard]] EndpointDistribution endpoints_loitering(const GridSpec& grid);
/// alpha * crossing + (1 - alpha) * uniform loitering.
[[nodiscard]] EndpointDistribution endpoints_mixture(const GridSpec& grid, double alpha);
/// Unit mass on a single (source, destination) pair.
[[nodiscard]] EndpointDistribution endpoints_pair(const GridSpec& grid, State source, State destination);
[[nodiscard]] EndpointDistribution make_endpoints(const GridSpec& grid, const EndpointSpec& spec);

/// Pi-weighted mean minimal step count divided by the horizon.
[[nodiscard]] double benefit_indicator(const EndpointDistribution& pi, std::size_t horizon, const GridSpec& grid);

} // namespace rctrack
