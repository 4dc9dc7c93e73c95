#include "support.hpp"

#include "rctrack/observation.hpp"

#include <array>
#include <map>
#include <numbers>

using namespace rctrack;

namespace {

double gauss(Point2 y, Point2 c, double s2) {
    const double d2 = (y.x - c.x) * (y.x - c.x) + (y.y - c.y) * (y.y - c.y);
    return std::exp(-d2 / (2.0 * s2)) / (2.0 * std::numbers::pi * s2);
}

State nearest_cell(Point2 p, const GridSpec& grid) {
    State best = 0;
    double best_d = 1e300;
    for (State s = 0; s < grid.size(); ++s) {
        const Point2 c = grid.center(s);
        const double d = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
        if (d < best_d) {
            best_d = d;
            best = s;
        }
    }
    return best;
}

SingleObsModel single(double eps, double s2, std::size_t n) {
    return SingleObsModel{eps, NoiseModel{s2}, ClutterModel::uniform(n)};
}

} // namespace

TEST_CASE("point likelihood") {
    const GridSpec grid;
    const State s = grid.state(3, 4);
    CHECK(point_likelihood({3.0, 4.0}, s, NoiseModel{1.0}, grid) == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(point_likelihood({4.0, 4.0}, s, NoiseModel{1.0}, grid) ==
          doctest::Approx(std::exp(-0.5) / (2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(point_likelihood({3.0, 4.0}, s, NoiseModel{0.0}, grid) == 1.0);
    CHECK(point_likelihood({3.0, 4.000001}, s, NoiseModel{0.0}, grid) == 0.0);
    CHECK(point_likelihood({2.5, 5.1}, s, NoiseModel{0.7}, grid) == doctest::Approx(gauss({2.5, 5.1}, {3, 4}, 0.7)).epsilon(1e-14));
}

TEST_CASE("clutter point likelihood") {
    const GridSpec grid{4, 3};
    const Point2 y{2.3, 1.6};
    double expect = 0.0;
    for (State j = 0; j < grid.size(); ++j) expect += gauss(y, grid.center(j), 1.0) / 12.0;
    CHECK(clutter_point_likelihood(y, NoiseModel{1.0}, ClutterModel::uniform(12), grid) == doctest::Approx(expect).epsilon(1e-14));

    const GridSpec one{1, 1};
    CHECK(clutter_point_likelihood(y, NoiseModel{1.0}, ClutterModel::uniform(1), one) ==
          point_likelihood(y, 0, NoiseModel{1.0}, one));

    // Relabelling cells under uniform clutter leaves the value unchanged:
    // mirror the grid and the point together.
    const Point2 mirrored{5.0 - y.x, 4.0 - y.y};
    CHECK(clutter_point_likelihood(mirrored, NoiseModel{1.0}, ClutterModel::uniform(12), grid) ==
          doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("single observation likelihood") {
    const GridSpec grid{2, 1};
    const Point2 y{1.2, 0.9};
    const auto m0 = single(0.0, 1.0, 2);
    const auto m1 = single(1.0, 1.0, 2);
    const auto mh = single(0.5, 1.0, 2);
    const double bg = clutter_point_likelihood(y, NoiseModel{1.0}, ClutterModel::uniform(2), grid);
    for (State i = 0; i < 2; ++i) {
        const double c = point_likelihood(y, i, NoiseModel{1.0}, grid);
        CHECK(single_obs_likelihood(y, i, m0, grid) == c);
        CHECK(single_obs_likelihood(y, i, m1, grid) == doctest::Approx(bg).epsilon(1e-15));
        const double v = single_obs_likelihood(y, i, mh, grid);
        CHECK(v == doctest::Approx(0.5 * c + 0.5 * bg).epsilon(1e-15));
        CHECK(v <= std::max(c, bg));
        CHECK(v >= 0.0);
    }
    CHECK(single_obs_row(y, mh, grid)(1) == doctest::Approx(single_obs_likelihood(y, 1, mh, grid)).epsilon(1e-15));
}

TEST_CASE("multi observation likelihood") {
    const GridSpec grid{3, 3};
    const auto clutter = ClutterModel::uniform(9);
    SUBCASE("M = 1 nests the single model") {
        Rng rng(4);
        for (int c = 0; c < 50; ++c) {
            const double eps = uniform01(rng);
            const double s2 = 0.2 + uniform01(rng);
            const Point2 y{0.5 + 3.0 * uniform01(rng), 0.5 + 3.0 * uniform01(rng)};
            const auto mm = MultiObsModel::exchangeable(1, eps, NoiseModel{s2}, clutter);
            const auto sm = single(eps, s2, 9);
            const std::array<Point2, 1> ys{y};
            for (State i = 0; i < 9; ++i) {
                CHECK(std::abs(multi_obs_likelihood(ys, i, mm, grid) - single_obs_likelihood(y, i, sm, grid)) <= 1e-15);
            }
        }
    }
    SUBCASE("lambda0 = 1 is the clutter product") {
        const auto mm = MultiObsModel::exchangeable(3, 1.0, NoiseModel{1.0}, clutter);
        const std::array<Point2, 3> ys{Point2{1.1, 2.0}, Point2{3.3, 0.2}, Point2{2.0, 2.0}};
        double prod = 1.0;
        for (const auto& y : ys) prod *= clutter_point_likelihood(y, NoiseModel{1.0}, clutter, grid);
        for (State i = 0; i < 9; ++i) CHECK(multi_obs_likelihood(ys, i, mm, grid) == doctest::Approx(prod).epsilon(1e-14));
    }
    SUBCASE("noiseless pair of detections") {
        const auto mm = MultiObsModel::exchangeable(2, 0.2, NoiseModel{0.0}, clutter);
        const State i = 4, j = 7;
        const std::array<Point2, 2> ys{grid.center(i), grid.center(j)};
        // Events: no target (0.2/81), target in slot 1 (0.4/9), target in slot 2.
        CHECK(multi_obs_likelihood(ys, i, mm, grid) == doctest::Approx(0.2 / 81 + 0.4 / 9).epsilon(1e-14));
        CHECK(multi_obs_likelihood(ys, j, mm, grid) == doctest::Approx(0.2 / 81 + 0.4 / 9).epsilon(1e-14));
        CHECK(multi_obs_likelihood(ys, 0, mm, grid) == doctest::Approx(0.2 / 81).epsilon(1e-14));
    }
    SUBCASE("fast row matches the direct association sum") {
        Rng rng(6);
        for (std::size_t m = 1; m <= 4; ++m) {
            auto mm = MultiObsModel::exchangeable(m, 0.3, NoiseModel{0.8}, clutter);
            for (std::size_t l = 0; l < m; ++l) mm.lambda[l] = 0.7 * double(l + 1) / double(m * (m + 1) / 2);
            std::vector<Point2> ys(m);
            for (auto& y : ys) y = {0.5 + 3.0 * uniform01(rng), 0.5 + 3.0 * uniform01(rng)};
            const Vector fast = multi_obs_row(ys, mm, grid);
            const Vector naive = multi_obs_row_naive(ys, mm, grid);
            CHECK((fast - naive).cwiseAbs().maxCoeff() <= 1e-14 * naive.cwiseAbs().maxCoeff());
        }
    }
    SUBCASE("wrong detection count is rejected") {
        const auto mm = MultiObsModel::exchangeable(2, 0.0, NoiseModel{1.0}, clutter);
        const std::array<Point2, 1> ys{Point2{1, 1}};
        CHECK_THROWS_AS((void)multi_obs_likelihood(ys, 0, mm, grid), ModelError);
    }
    SUBCASE("operation counts scale as M N versus M^2 N^2") {
        for (std::size_t m : {2u, 4u}) {
            const GridSpec g{4, 4};
            const auto mm = MultiObsModel::exchangeable(m, 0.1, NoiseModel{1.0}, ClutterModel::uniform(16));
            const std::vector<Point2> ys(m, Point2{2.0, 2.0});
            KernelStats fast, naive;
            (void)multi_obs_row(ys, mm, g, &fast);
            (void)multi_obs_row_naive(ys, mm, g, &naive);
            CHECK(fast.likelihood_mults <= 3 * m * 16);
            CHECK(naive.likelihood_mults >= m * m * 16 * 16);
        }
    }
    SUBCASE("model validation") {
        auto mm = MultiObsModel::exchangeable(2, 0.2, NoiseModel{1.0}, clutter);
        CHECK_NOTHROW(mm.validate(9));
        mm.lambda[0] += 0.1;
        CHECK_THROWS_AS(mm.validate(9), ModelError);
        CHECK_THROWS_AS(single(1.2, 1.0, 9).validate(9), ModelError);
        CHECK_THROWS_AS(single(0.2, -1.0, 9).validate(9), ModelError);
        CHECK_THROWS_AS(single(0.2, 1.0, 4).validate(9), ModelError);
    }
}

TEST_CASE("single observation generation") {
    const GridSpec grid;
    SUBCASE("clutter-free noiseless records sit on the target") {
        Rng rng(1);
        for (State x = 0; x < 64; ++x) {
            const auto rec = generate_single(x, 3, single(0.0, 0.0, 64), grid, rng);
            CHECK(rec.epoch == 3);
            REQUIRE(rec.points.size() == 1);
            CHECK(rec.points[0] == grid.center(x));
        }
    }
    SUBCASE("pure clutter is uniform over cells") {
        Rng rng(2);
        std::vector<double> counts(64, 0.0);
        const int draws = 10000;
        for (int d = 0; d < draws; ++d) counts[nearest_cell(generate_single(5, 0, single(1.0, 0.0, 64), grid, rng).points[0], grid)] += 1.0;
        for (double c : counts) CHECK(rctest::within_3_sigma(c, draws, 1.0 / 64));
    }
    SUBCASE("epsilon = 0.25 gives about 75 percent target records") {
        Rng rng(3);
        const State x = grid.state(2, 6);
        double hits = 0.0;
        const int draws = 10000;
        for (int d = 0; d < draws; ++d) hits += generate_single(x, 0, single(0.25, 0.0, 64), grid, rng).points[0] == grid.center(x);
        CHECK(rctest::within_3_sigma(hits, draws, 0.75 + 0.25 / 64));
    }
}

TEST_CASE("multi observation generation") {
    const GridSpec grid;
    const auto clutter = ClutterModel::uniform(64);
    SUBCASE("lambda0 = 1 fills every slot with clutter") {
        Rng rng(4);
        const auto mm = MultiObsModel::exchangeable(3, 1.0, NoiseModel{0.0}, clutter);
        double on_target = 0.0;
        const int draws = 5000;
        for (int d = 0; d < draws; ++d) {
            const auto rec = generate_multi(9, 0, mm, grid, rng);
            REQUIRE(rec.points.size() == 3);
            for (const auto& p : rec.points) on_target += p == grid.center(9);
        }
        CHECK(rctest::within_3_sigma(on_target, 3.0 * draws, 1.0 / 64));
    }
    SUBCASE("target slot is uniform for exchangeable priors") {
        Rng rng(5);
        const auto mm = MultiObsModel::exchangeable(2, 0.0, NoiseModel{0.0}, clutter);
        const State x = grid.state(4, 4);
        double first = 0.0;
        int decided = 0;
        for (int d = 0; d < 10000; ++d) {
            const auto rec = generate_multi(x, 0, mm, grid, rng);
            const bool a = rec.points[0] == grid.center(x);
            const bool b = rec.points[1] == grid.center(x);
            if (a == b) continue;  // both slots on the target cell, ambiguous
            ++decided;
            first += a;
        }
        CHECK(rctest::within_3_sigma(first, decided, 0.5));
    }
}

TEST_CASE("generated records follow the likelihood on a finite alphabet") {
    const GridSpec grid{2, 2};
    const auto clutter = ClutterModel::uniform(4);
    const int draws = 20000;
    SUBCASE("single model") {
        const auto model = single(0.4, 0.0, 4);
        for (State x = 0; x < 4; ++x) {
            Rng rng(100 + x);
            std::vector<double> counts(4, 0.0);
            for (int d = 0; d < draws; ++d) counts[nearest_cell(generate_single(x, 0, model, grid, rng).points[0], grid)] += 1.0;
            double total = 0.0;
            for (State j = 0; j < 4; ++j) {
                const double p = single_obs_likelihood(grid.center(j), x, model, grid);
                total += p;
                CHECK(rctest::within_3_sigma(counts[j], draws, p));
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
    SUBCASE("multi model") {
        auto model = MultiObsModel::exchangeable(2, 0.3, NoiseModel{0.0}, clutter);
        model.lambda = {0.5, 0.2};
        for (State x = 0; x < 4; ++x) {
            Rng rng(200 + x);
            std::map<std::pair<State, State>, double> counts;
            for (int d = 0; d < draws; ++d) {
                const auto rec = generate_multi(x, 0, model, grid, rng);
                counts[{nearest_cell(rec.points[0], grid), nearest_cell(rec.points[1], grid)}] += 1.0;
            }
            double total = 0.0;
            for (State a = 0; a < 4; ++a) {
                for (State b = 0; b < 4; ++b) {
                    const std::array<Point2, 2> ys{grid.center(a), grid.center(b)};
                    const double p = multi_obs_likelihood(ys, x, model, grid);
                    total += p;
                    CHECK(rctest::within_3_sigma(counts[{a, b}], draws, p));
                }
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    SUBCASE("M = 1 generation nests the single model") {
        const auto mm = MultiObsModel::exchangeable(1, 0.4, NoiseModel{0.0}, clutter);
        Rng rng(7);
        std::vector<double> counts(4, 0.0);
        for (int d = 0; d < draws; ++d) counts[nearest_cell(generate_multi(2, 0, mm, grid, rng).points[0], grid)] += 1.0;
        for (State j = 0; j < 4; ++j) CHECK(rctest::within_3_sigma(counts[j], draws, single_obs_likelihood(grid.center(j), 2, single(0.4, 0.0, 4), grid)));
    }
}

TEST_CASE("likelihood tables") {
    const GridSpec grid{3, 2};
    ObservationSequence seq{{0, {{1.0, 1.0}}}, {1, {{2.2, 1.7}}}};
    const auto sm = single(0.3, 0.5, 6);
    const auto table = single_obs_table(seq, sm, grid);
    REQUIRE(table.rows() == 2);
    for (State i = 0; i < 6; ++i) CHECK(table(1, Eigen::Index(i)) == doctest::Approx(single_obs_likelihood({2.2, 1.7}, i, sm, grid)).epsilon(1e-15));
    const auto cl = clutterless_table(seq, NoiseModel{0.5}, grid);
    CHECK(cl(0, 0) == point_likelihood({1.0, 1.0}, 0, NoiseModel{0.5}, grid));
    ObservationSequence two{{0, {{1.0, 1.0}, {2.0, 2.0}}}};
    CHECK_THROWS_AS((void)single_obs_table(two, sm, grid), ModelError);
}
