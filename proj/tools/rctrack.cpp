#include "rctrack/io.hpp"
#include "rctrack/oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::size_t threads = 1;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "Experiment config (JSON)")->required();
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_option("--seed", args.seed, "Master seed override");
    cmd->add_option("--trials", args.trials, "Trial count override");
    cmd->add_option("--threads", args.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose", args.verbose, "Progress on stderr; full marginals in filter output");
}

rctrack::ExperimentConfig resolve_config(const CommonArgs& args) {
    rctrack::ExperimentConfig cfg = rctrack::load_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    if (args.trials) cfg.trials = *args.trials;
    cfg.validate();
    return cfg;
}

std::filesystem::path prepare_out(const CommonArgs& args) {
    std::filesystem::create_directories(args.out);
    return args.out;
}

void log(const CommonArgs& args, const std::string& msg) {
    if (args.verbose) std::cerr << msg << '\n';
}

int cmd_model(const CommonArgs& args) {
    const auto cfg = resolve_config(args);
    const auto models = rctrack::build_models(cfg);
    rctrack::Json j = rctrack::model_to_json(cfg.grid, models.base, models.endpoints, cfg.horizon);
    j["beta"] = rctrack::benefit_indicator(models.endpoints, cfg.horizon, cfg.grid);
    j["config_hash"] = rctrack::config_hash(cfg);
    rctrack::write_json(prepare_out(args) / "model.json", j);
    log(args, "wrote model.json");
    return kExitOk;
}

int cmd_simulate(const CommonArgs& args, std::size_t index, bool null_hypothesis) {
    const auto cfg = resolve_config(args);
    const auto models = rctrack::build_models(cfg);
    const rctrack::Trial trial = null_hypothesis ? rctrack::simulate_null_trial(cfg, models, index)
                                                 : rctrack::simulate_target_trial(cfg, models, index);
    rctrack::Json j = rctrack::sequence_to_json(trial.observations, trial.path);
    j["hypothesis"] = null_hypothesis ? "H0" : "H1";
    j["trial"] = index;
    j["config_hash"] = rctrack::config_hash(cfg);
    j["seed"] = cfg.seed;
    rctrack::write_json(prepare_out(args) / "observations.json", j);
    log(args, "wrote observations.json");
    return kExitOk;
}

int cmd_filter(const CommonArgs& args, const std::string& input) {
    const auto cfg = resolve_config(args);
    const auto models = rctrack::build_models(cfg);
    const auto seq = rctrack::sequence_from_json(rctrack::read_json(input));
    const auto table = rctrack::likelihood_table(seq, rctrack::make_regime(cfg), cfg.grid);
    rctrack::Json j = rctrack::Json::object();
    for (auto m : cfg.models) {
        j[rctrack::to_string(m)] = rctrack::filter_output_to_json(rctrack::run_filter(table, m, models), cfg.grid, args.verbose);
    }
    rctrack::write_json(prepare_out(args) / "filter.json", j);
    return kExitOk;
}

int cmd_detect(const CommonArgs& args, const std::string& input) {
    const auto cfg = resolve_config(args);
    const auto models = rctrack::build_models(cfg);
    const auto seq = rctrack::sequence_from_json(rctrack::read_json(input));
    const auto regime = rctrack::make_regime(cfg);
    rctrack::Json j = rctrack::Json::object();
    for (auto m : cfg.models) {
        const double llr = rctrack::log_likelihood_ratio(seq, rctrack::DetectorSpec{m, regime}, models);
        j[rctrack::to_string(m)] = {{"llr", llr}, {"decision", llr > 0.0 ? "target" : "no target"}};
        std::cout << rctrack::to_string(m) << " llr=" << rctrack::format_double(llr) << '\n';
    }
    rctrack::write_json(prepare_out(args) / "detect.json", j);
    return kExitOk;
}

int run_sweep(const CommonArgs& args, const rctrack::ExperimentConfig& cfg) {
    const auto reports = rctrack::sweep(cfg, cfg.sweep->axis, cfg.sweep->values, args.threads);
    rctrack::write_sweep(cfg, cfg.sweep->axis, reports, prepare_out(args));
    for (std::size_t v = 0; v < reports.size(); ++v) {
        std::ostringstream os;
        os << rctrack::to_string(cfg.sweep->axis) << '=' << cfg.sweep->values[v] << " beta=" << reports[v].beta;
        if (reports[v].delta_auc) os << " delta_auc=" << *reports[v].delta_auc;
        for (const auto& d : reports[v].detectors) os << " auc_" << rctrack::to_string(d.model) << '=' << d.auc;
        for (const auto& t : reports[v].trackers) os << " aps_" << rctrack::to_string(t.model) << '=' << t.rmse_aps;
        std::cout << os.str() << '\n';
    }
    return kExitOk;
}

int cmd_experiment(const CommonArgs& args) {
    const auto cfg = resolve_config(args);
    if (cfg.sweep) return run_sweep(args, cfg);
    const auto report = rctrack::run_experiment(cfg, args.threads);
    rctrack::write_report(report, prepare_out(args));
    for (const auto& d : report.detectors) std::cout << "auc_" << rctrack::to_string(d.model) << '=' << d.auc << '\n';
    for (const auto& t : report.trackers) std::cout << "rmse_aps_" << rctrack::to_string(t.model) << '=' << t.rmse_aps << '\n';
    log(args, "runtime " + std::to_string(report.runtime_seconds) + " s");
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& axis, const std::vector<double>& values) {
    auto cfg = resolve_config(args);
    if (!axis.empty() || !values.empty()) {
        rctrack::SweepSpec spec = cfg.sweep.value_or(rctrack::SweepSpec{});
        if (!axis.empty()) spec.axis = rctrack::sweep_axis_from_string(axis);
        if (!values.empty()) spec.values = values;
        cfg.sweep = spec;
        cfg.validate();
    }
    if (!cfg.sweep) throw rctrack::ConfigError("sweep", "no sweep in config and no --axis/--values given");
    return run_sweep(args, cfg);
}

int cmd_oracle_check(const std::string& suites, std::size_t instances, std::uint64_t seed, bool perturb) {
    rctrack::OracleCheckOptions opts;
    opts.suites.clear();
    std::stringstream ss(suites);
    for (std::string name; std::getline(ss, name, ',');) {
        if (!name.empty()) opts.suites.push_back(name);
    }
    opts.instances = instances;
    opts.seed = seed;
    opts.perturb_bridge = perturb;
    bool ok = true;
    for (const auto& r : rctrack::run_oracle_suites(opts)) {
        std::printf("%-12s cases=%zu hsc_cases=%zu max_loglik_rel_dev=%.3e max_prob_dev=%.3e %s\n", r.name.c_str(),
                    r.cases, r.hsc_cases,
                    r.max_loglik_deviation, r.max_marginal_deviation, r.passed ? "PASS" : "FAIL");
        ok = ok && r.passed;
    }
    return ok ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reciprocal-chain target models: filters, detectors and Monte Carlo experiments"};
    app.require_subcommand(1);

    CommonArgs common;
    auto* model = app.add_subcommand("model", "Build the base chain and endpoint law; write model.json");
    add_common(model, common);

    auto* simulate = app.add_subcommand("simulate", "Generate one trial; write observations.json");
    add_common(simulate, common);
    std::size_t index = 0;
    bool null_hypothesis = false;
    simulate->add_option("--index", index, "Trial index");
    simulate->add_flag("--null", null_hypothesis, "Clutter-only trial");

    std::string input;
    auto* filter = app.add_subcommand("filter", "Run the configured filters on an observation file");
    add_common(filter, common);
    filter->add_option("--input", input, "observations.json")->required();

    auto* detect = app.add_subcommand("detect", "Log-likelihood ratios for an observation file");
    add_common(detect, common);
    detect->add_option("--input", input, "observations.json")->required();

    auto* experiment = app.add_subcommand("experiment", "Run the configured experiment (or its sweep)");
    add_common(experiment, common);

    std::string axis;
    std::vector<double> values;
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep, common);
    sweep->add_option("--axis", axis, "alpha, T, p_R, M, epsilon or sigma2");
    sweep->add_option("--values", values, "Axis values")->delimiter(',');

    std::string suites = "bridges,likelihoods,filters";
    std::size_t instances = 50;
    std::uint64_t oracle_seed = 1;
    bool perturb = false;
    auto* oracle = app.add_subcommand("oracle-check", "Compare filters, bridges and likelihoods against enumeration");
    oracle->add_option("--suite", suites, "Comma-separated suites");
    oracle->add_option("--instances", instances, "Random instances per suite");
    oracle->add_option("--seed", oracle_seed, "Instance seed");
    oracle->add_flag("--perturb", perturb, "Test hook: perturb one bridge entry by 1e-3");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*model) return cmd_model(common);
        if (*simulate) return cmd_simulate(common, index, null_hypothesis);
        if (*filter) return cmd_filter(common, input);
        if (*detect) return cmd_detect(common, input);
        if (*experiment) return cmd_experiment(common);
        if (*sweep) return cmd_sweep(common, axis, values);
        if (*oracle) return cmd_oracle_check(suites, instances, oracle_seed, perturb);
    } catch (const rctrack::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
