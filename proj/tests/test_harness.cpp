#include "support.hpp"

#include "rctrack/harness.hpp"
#include "rctrack/oracle.hpp"

using namespace rctrack;

namespace {

ExperimentConfig small_detection() {
    ExperimentConfig cfg;
    cfg.grid = {4, 4};
    cfg.horizon = 6;
    cfg.endpoints.alpha = 1.0;
    cfg.observation.epsilon = 0.5;
    cfg.trials = 60;
    cfg.seed = 42;
    return cfg;
}

ExperimentConfig small_filtering() {
    ExperimentConfig cfg = small_detection();
    cfg.kind = ExperimentKind::filtering;
    cfg.observation.epsilon = 0.25;
    return cfg;
}

void check_same(const MetricsReport& a, const MetricsReport& b) {
    REQUIRE(a.detectors.size() == b.detectors.size());
    for (std::size_t d = 0; d < a.detectors.size(); ++d) {
        CHECK(a.detectors[d].h1_scores == b.detectors[d].h1_scores);
        CHECK(a.detectors[d].h0_scores == b.detectors[d].h0_scores);
        CHECK(a.detectors[d].auc == b.detectors[d].auc);
        CHECK(a.detectors[d].auc_se == b.detectors[d].auc_se);
    }
    CHECK(a.delta_auc == b.delta_auc);
    REQUIRE(a.trackers.size() == b.trackers.size());
    for (std::size_t t = 0; t < a.trackers.size(); ++t) {
        CHECK(a.trackers[t].rmse_cm == b.trackers[t].rmse_cm);
        CHECK(a.trackers[t].aps_per_trial == b.trackers[t].aps_per_trial);
        CHECK(a.trackers[t].rmse_aps == b.trackers[t].rmse_aps);
    }
}

} // namespace

TEST_CASE("config validation names the field") {
    auto expect_field = [](ExperimentConfig cfg, const std::string& field) {
        try {
            cfg.validate();
            FAIL("expected ConfigError for " << field);
        } catch (const ConfigError& e) {
            CHECK(e.field() == field);
        }
    };
    CHECK_NOTHROW(small_detection().validate());
    auto cfg = small_detection();
    cfg.endpoints.alpha = 1.5;
    expect_field(cfg, "endpoints.alpha");
    cfg = small_detection();
    cfg.p_stay = 1.0;
    expect_field(cfg, "p_R");
    cfg = small_detection();
    cfg.horizon = 1;
    expect_field(cfg, "T");
    cfg = small_detection();
    cfg.trials = 7;
    expect_field(cfg, "trials");
    cfg = small_detection();
    cfg.observation.epsilon = -0.1;
    expect_field(cfg, "observation.epsilon");
    cfg = small_detection();
    cfg.observation.multi = true;
    cfg.observation.m = 0;
    expect_field(cfg, "observation.M");
    cfg = small_detection();
    cfg.sigma2 = -1.0;
    expect_field(cfg, "sigma2");
    cfg = small_detection();
    cfg.models.clear();
    expect_field(cfg, "models");
    cfg = small_detection();
    cfg.sweep = SweepSpec{SweepAxis::alpha, {0.0, 2.0}};
    expect_field(cfg, "sweep.values");
}

TEST_CASE("sweep axis substitution") {
    const auto cfg = small_detection();
    CHECK(with_axis(cfg, SweepAxis::alpha, 0.25).endpoints.alpha == 0.25);
    CHECK(with_axis(cfg, SweepAxis::horizon, 9).horizon == 9);
    CHECK(with_axis(cfg, SweepAxis::p_stay, 0.8).p_stay == 0.8);
    CHECK(with_axis(cfg, SweepAxis::epsilon, 0.3).observation.epsilon == 0.3);
    CHECK(with_axis(cfg, SweepAxis::sigma2, 2.0).sigma2 == 2.0);
    CHECK_THROWS_AS((void)with_axis(cfg, SweepAxis::horizon, 7.5), ConfigError);
    CHECK_THROWS_AS((void)with_axis(cfg, SweepAxis::m, 2), ConfigError);
    auto multi = cfg;
    multi.observation.multi = true;
    multi.observation.m = 2;
    CHECK(with_axis(multi, SweepAxis::m, 4).observation.m == 4);
    CHECK(with_axis(multi, SweepAxis::epsilon, 0.2).observation.lambda0 == 0.2);
    for (auto axis : {SweepAxis::alpha, SweepAxis::horizon, SweepAxis::p_stay, SweepAxis::m, SweepAxis::epsilon, SweepAxis::sigma2}) {
        CHECK_FALSE(to_string(axis).empty());
    }
}

TEST_CASE("trial data depends only on seed and index") {
    const auto cfg = small_detection();
    const auto models = build_models(cfg);
    const auto a = simulate_target_trial(cfg, models, 5);
    auto bigger = cfg;
    bigger.trials = 600;
    const auto b = simulate_target_trial(bigger, models, 5);
    CHECK(a.path == b.path);
    REQUIRE(a.observations.size() == b.observations.size());
    for (std::size_t t = 0; t < a.observations.size(); ++t) CHECK(a.observations[t].points == b.observations[t].points);
    const auto other = simulate_target_trial(cfg, models, 6);
    CHECK_FALSE(other.observations[0].points == a.observations[0].points);
    const auto null = simulate_null_trial(cfg, models, 5);
    CHECK(null.path.empty());
    CHECK(null.observations.size() == cfg.horizon + 1);

    const auto small = run_detection_experiment(cfg);
    const auto large = run_detection_experiment(bigger);
    for (std::size_t i = 0; i < cfg.trials / 2; ++i) {
        CHECK(small.detectors[0].h1_scores[i] == large.detectors[0].h1_scores[i]);
        CHECK(small.detectors[0].h0_scores[i] == large.detectors[0].h0_scores[i]);
    }
}

TEST_CASE("reports are reproducible under any worker count") {
    const auto det = small_detection();
    check_same(run_detection_experiment(det, 1), run_detection_experiment(det, 3));
    check_same(run_detection_experiment(det, 1), run_detection_experiment(det, 1));
    const auto fil = small_filtering();
    check_same(run_filtering_experiment(fil, 1), run_filtering_experiment(fil, 2));
}

TEST_CASE("detection report contents") {
    const auto cfg = small_detection();
    const auto r = run_detection_experiment(cfg);
    CHECK(r.beta == doctest::Approx(benefit_indicator(endpoints_mixture(cfg.grid, 1.0), cfg.horizon, cfg.grid)));
    REQUIRE(r.detectors.size() == 3);
    for (const auto& d : r.detectors) {
        CHECK(d.h1_scores.size() == cfg.trials / 2);
        CHECK(d.h0_scores.size() == cfg.trials / 2);
        CHECK(d.auc == doctest::Approx(auc(roc_from_scores(d.h1_scores, d.h0_scores))));
        CHECK(d.auc_se > 0.0);
    }
    REQUIRE(r.delta_auc);
    CHECK(*r.delta_auc == doctest::Approx(r.detector(TargetModel::hrc).auc - r.detector(TargetModel::hmc).auc));

    // Scores are the log-likelihood ratio of the stored trial data.
    const auto models = build_models(cfg);
    const auto trial = simulate_target_trial(cfg, models, 3);
    const double llr = log_likelihood_ratio(trial.observations, DetectorSpec{TargetModel::hmc, make_regime(cfg)}, models);
    CHECK(r.detector(TargetModel::hmc).h1_scores[3] == doctest::Approx(llr).epsilon(1e-14));
}

TEST_CASE("indistinguishable hypotheses give chance-level AUC") {
    auto cfg = small_detection();
    cfg.observation.epsilon = 1.0;
    cfg.trials = 400;
    const auto r = run_detection_experiment(cfg);
    const double m = double(cfg.trials / 2);
    const double sd = std::sqrt((2.0 * m + 1.0) / (12.0 * m * m));
    for (const auto& d : r.detectors) {
        // The LLR vanishes up to rounding, so the AUC is a chance-level U statistic.
        for (double s : d.h1_scores) CHECK(std::abs(s) < 1e-9);
        for (double s : d.h0_scores) CHECK(std::abs(s) < 1e-9);
        CHECK(std::abs(d.auc - 0.5) < 3.0 * sd);
    }
}

TEST_CASE("filtering metrics follow their definitions") {
    const auto cfg = small_filtering();
    const auto r = run_filtering_experiment(cfg);
    const auto models = build_models(cfg);
    const auto regime = make_regime(cfg);
    for (const auto& tr : r.trackers) {
        std::vector<double> cm(cfg.horizon + 1, 0.0);
        double aps = 0.0;
        for (std::size_t i = 0; i < cfg.trials; ++i) {
            const auto trial = simulate_target_trial(cfg, models, i);
            const auto out = run_filter(likelihood_table(trial.observations, regime, models.grid), tr.model, models);
            double seq = 0.0;
            for (std::size_t t = 0; t <= cfg.horizon; ++t) {
                const Point2 est = conditional_mean(out.posterior(t), models.grid);
                const Point2 truth = models.grid.center(trial.path[t]);
                const double e2 = (est.x - truth.x) * (est.x - truth.x) + (est.y - truth.y) * (est.y - truth.y);
                cm[t] += e2;
                if (t > 0) seq += e2;
            }
            aps += std::sqrt(seq / double(cfg.horizon));
        }
        for (std::size_t t = 0; t <= cfg.horizon; ++t) {
            CHECK(tr.rmse_cm[t] == doctest::Approx(std::sqrt(cm[t] / double(cfg.trials))).epsilon(1e-12));
            CHECK(tr.rmse_cm[t] >= 0.0);
        }
        CHECK(tr.rmse_aps == doctest::Approx(aps / double(cfg.trials)).epsilon(1e-12));
    }
}

TEST_CASE("deterministic crossing gives zero tracking error") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::filtering;
    cfg.grid = {8, 8};
    cfg.horizon = 7;
    cfg.endpoints.kind = EndpointKind::pair;
    cfg.endpoints.source = cfg.grid.state(1, 1);
    cfg.endpoints.destination = cfg.grid.state(8, 8);
    cfg.observation.epsilon = 0.0;
    cfg.sigma2 = 0.0;
    cfg.trials = 10;
    cfg.models = {TargetModel::hrc};
    const auto r = run_filtering_experiment(cfg);
    for (double v : r.tracker(TargetModel::hrc).rmse_cm) CHECK(v == 0.0);
    CHECK(r.beta == 1.0);
}

TEST_CASE("sweeps echo beta and use derived seeds") {
    auto cfg = small_detection();
    cfg.trials = 20;
    const std::vector<double> alphas{0.0, 0.5, 1.0};
    const auto reports = sweep(cfg, SweepAxis::alpha, alphas);
    REQUIRE(reports.size() == 3);
    for (std::size_t v = 0; v < 3; ++v) {
        CHECK(reports[v].config.endpoints.alpha == alphas[v]);
        CHECK(reports[v].beta == doctest::Approx(benefit_indicator(endpoints_mixture(cfg.grid, alphas[v]), cfg.horizon, cfg.grid)));
        CHECK(reports[v].config.seed == derive_seed(cfg.seed, 100, v));
    }
    CHECK(reports[0].config.seed != reports[1].config.seed);
    const auto again = sweep(cfg, SweepAxis::alpha, {1.0});
    CHECK(again[0].config.seed == reports[0].config.seed);
}

TEST_CASE("paired difference") {
    const auto d = paired_difference({3.0, 5.0, 4.0}, {1.0, 2.0, 3.0});
    CHECK(d.mean == doctest::Approx(2.0));
    CHECK(d.se == doctest::Approx(std::sqrt(1.0 / 3.0)));
    CHECK_THROWS_AS((void)paired_difference({1.0}, {1.0}), Error);
}

TEST_CASE("library oracle agrees with the filters") {
    OracleCheckOptions opts;
    opts.instances = 6;
    opts.seed = 3;
    for (const auto& r : run_oracle_suites(opts)) {
        CHECK(r.passed);
        CHECK(r.cases > 0);
        CHECK(r.max_loglik_deviation < 1e-8);
        CHECK(r.max_marginal_deviation < 1e-8);
    }
    opts.perturb_bridge = true;
    opts.suites = {"bridges"};
    CHECK_FALSE(run_oracle_suites(opts).front().passed);
    opts.suites.clear();
    CHECK_THROWS_AS((void)run_oracle_suites(opts), ConfigError);
    opts.suites = {"nonsense"};
    CHECK_THROWS_AS((void)run_oracle_suites(opts), ConfigError);
}

TEST_CASE("oracle path laws and enumeration") {
    Rng rng(2);
    const auto inst = random_oracle_instance(rng, 3, 3);
    const auto law = hrc_path_law(inst.base, inst.endpoints, inst.horizon);
    double total = 0.0;
    rctest::for_each_path(3, 3, [&](const std::vector<State>& x) { total += law.probability(x); });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // A single-path model: the total probability is the likelihood product along it.
    const GridSpec grid{3, 1};
    const TransitionMatrix id(Matrix::Identity(3, 3));
    Vector pi0 = Vector::Zero(3);
    pi0(1) = 1.0;
    const auto frozen = hmc_path_law(id, pi0, 2);
    const ObservationSequence seq{{0, {{1.5, 1.0}}}, {1, {{2.0, 1.2}}}, {2, {{2.4, 0.8}}}};
    const ClutterlessObsModel obs{NoiseModel{0.5}};
    double prod = 1.0;
    for (const auto& rec : seq) prod *= point_likelihood(rec.points[0], 1, obs.noise, grid);
    CHECK(brute_force_sequence_likelihood(frozen, seq, obs, grid) == doctest::Approx(prod).epsilon(1e-14));
    const Vector post = brute_force_posterior(frozen, seq, obs, grid, 2);
    CHECK(post(1) == doctest::Approx(1.0));
}
