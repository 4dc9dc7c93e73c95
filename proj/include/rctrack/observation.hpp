#pragma once

#include "rctrack/gridworld.hpp"
#include "rctrack/rng.hpp"
#include "rctrack/types.hpp"

#include <span>
#include <vector>

namespace rctrack {

/// Isotropic Gaussian position noise about the cell centre; sigma2 = 0 is
/// the noiseless case, evaluated as an exact-match indicator.
struct NoiseModel {
    double sigma2 = 1.0;
};

/// Law of the temporally independent clutter process U_t over states.
struct ClutterModel {
    Vector probs;

    static ClutterModel uniform(std::size_t n);
};

struct SingleObsModel {
    double epsilon = 0.5;  // Pr{detection is clutter}
    NoiseModel noise;
    ClutterModel clutter;

    void validate(std::size_t n) const;
};

struct MultiObsModel {
    std::size_t m = 1;
    double lambda0 = 0.0;        // Pr{no slot holds the target}
    std::vector<double> lambda;  // per-slot association priors
    NoiseModel noise;
    ClutterModel clutter;

    /// Remaining mass split equally across slots: lambda_l = (1 - lambda0) / M.
    static MultiObsModel exchangeable(std::size_t m, double lambda0, NoiseModel noise, ClutterModel clutter);
    void validate(std::size_t n) const;
};

struct ObservationRecord {
    std::size_t epoch = 0;
    std::vector<Point2> points;
};

using ObservationSequence = std::vector<ObservationRecord>;

/// Rows are epochs, columns states: entry (t, i) = C_i(t).
using LikelihoodTable = Matrix;

[[nodiscard]] double point_likelihood(Point2 y, State i, const NoiseModel& noise, const GridSpec& grid);
[[nodiscard]] double clutter_point_likelihood(Point2 y, const NoiseModel& noise, const ClutterModel& clutter,
                                              const GridSpec& grid);
[[nodiscard]] double single_obs_likelihood(Point2 y, State i, const SingleObsModel& model, const GridSpec& grid);
[[nodiscard]] double multi_obs_likelihood(std::span<const Point2> ys, State i, const MultiObsModel& model,
                                          const GridSpec& grid);

/// c_j(y) for every state j.
[[nodiscard]] Vector point_likelihood_row(Point2 y, const NoiseModel& noise, const GridSpec& grid);
[[nodiscard]] Vector single_obs_row(Point2 y, const SingleObsModel& model, const GridSpec& grid);
/// All N association-mixture likelihoods for one epoch in O(MN).
[[nodiscard]] Vector multi_obs_row(std::span<const Point2> ys, const MultiObsModel& model, const GridSpec& grid,
                                   KernelStats* stats = nullptr);
/// Direct evaluation of the association sum, recomputing every clutter
/// term: O(M^2 N^2) per epoch.
[[nodiscard]] Vector multi_obs_row_naive(std::span<const Point2> ys, const MultiObsModel& model,
                                         const GridSpec& grid, KernelStats* stats = nullptr);

[[nodiscard]] LikelihoodTable clutterless_table(const ObservationSequence& seq, const NoiseModel& noise,
                                                const GridSpec& grid);
[[nodiscard]] LikelihoodTable single_obs_table(const ObservationSequence& seq, const SingleObsModel& model,
                                               const GridSpec& grid);
[[nodiscard]] LikelihoodTable multi_obs_table(const ObservationSequence& seq, const MultiObsModel& model,
                                              const GridSpec& grid);

[[nodiscard]] ObservationRecord generate_single(State x, std::size_t epoch, const SingleObsModel& model,
                                                const GridSpec& grid, Rng& rng);
[[nodiscard]] ObservationRecord generate_multi(State x, std::size_t epoch, const MultiObsModel& model,
                                               const GridSpec& grid, Rng& rng);
[[nodiscard]] ObservationSequence generate_sequence(const std::vector<State>& path, const SingleObsModel& model,
                                                    const GridSpec& grid, Rng& rng);
[[nodiscard]] ObservationSequence generate_sequence(const std::vector<State>& path, const MultiObsModel& model,
                                                    const GridSpec& grid, Rng& rng);

} // namespace rctrack
