#pragma once

#include "rctrack/chain_models.hpp"
#include "rctrack/gridworld.hpp"
#include "rctrack/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

namespace rctest {

using namespace rctrack;

/// Random row-stochastic matrix; off-diagonal entries vanish with
/// probability `zero_prob`, the diagonal is always positive.
inline Matrix random_stochastic(Rng& rng, std::size_t n, double zero_prob = 0.0) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || uniform01(rng) >= zero_prob) a(i, j) = 0.05 + uniform01(rng);
        }
        a.row(static_cast<Eigen::Index>(i)) /= a.row(static_cast<Eigen::Index>(i)).sum();
    }
    return a;
}

/// Random joint endpoint law supported where `reach` is positive.
inline Matrix random_endpoints(Rng& rng, const Matrix& reach) {
    Matrix pi = Matrix::Zero(reach.rows(), reach.cols());
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
        for (Eigen::Index k = 0; k < pi.cols(); ++k) {
            if (reach(i, k) > 0.0) pi(i, k) = uniform01(rng) + 0.01;
        }
    }
    return pi / pi.sum();
}

/// Visits every path of length len + 1 over n states.
inline void for_each_path(std::size_t n, std::size_t len, const std::function<void(const std::vector<State>&)>& fn) {
    std::vector<State> x(len + 1, 0);
    while (true) {
        fn(x);
        std::size_t pos = x.size();
        while (pos > 0) {
            --pos;
            if (++x[pos] < n) break;
            x[pos] = 0;
            if (pos == 0) return;
        }
    }
}

inline double path_product(const Matrix& a, const std::vector<State>& x) {
    double p = 1.0;
    for (std::size_t t = 0; t + 1 < x.size(); ++t) p *= a(x[t], x[t + 1]);
    return p;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// True when `count` successes out of `trials` is within 3 sigma of p.
inline bool within_3_sigma(double count, double trials, double p) {
    const double sd = std::sqrt(trials * p * (1.0 - p));
    return std::abs(count - trials * p) <= 3.0 * sd + 1e-12;
}

} // namespace rctest
