#include "rctrack/io.hpp"
#include "rctrack/oracle.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rctrack;

namespace {

ExperimentConfig parse_config(const std::string& text) { return config_from_json(Json::parse(text)); }

/// Bridges as a list over destinations of lists over t of dense matrices.
std::vector<std::vector<Matrix>> bridge_list(const BridgeFamily& b) {
    std::vector<std::vector<Matrix>> out(b.size());
    for (State k = 0; k < b.size(); ++k) {
        for (std::size_t t = 0; t + 1 < b.horizon(); ++t) out[k].push_back(b.dense(k, t));
    }
    return out;
}

py::dict filter_dict(const FilterOutput& out) {
    py::dict d;
    d["marginals"] = out.marginals;
    d["h"] = out.h;
    d["loglik"] = out.loglik;
    return d;
}

} // namespace

PYBIND11_MODULE(_rctrack, m) {
    m.doc() = "Reciprocal-chain target models, filters and detectors";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ZeroEvidenceError>(m, "ZeroEvidenceError", PyExc_RuntimeError);
    py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);

    m.def("random_walk", [](std::size_t width, std::size_t height, double p_stay) {
        return build_random_walk(GridSpec{width, height}, p_stay).dense();
    }, py::arg("width"), py::arg("height"), py::arg("p_R"), "8-connected random-walk transition matrix");

    m.def("mixture_endpoints", [](std::size_t width, std::size_t height, double alpha) {
        return endpoints_mixture(GridSpec{width, height}, alpha).matrix();
    }, py::arg("width"), py::arg("height"), py::arg("alpha"));

    m.def("benefit_indicator", [](const Matrix& pi, std::size_t horizon, std::size_t width, std::size_t height) {
        return benefit_indicator(EndpointDistribution(pi), horizon, GridSpec{width, height});
    }, py::arg("pi"), py::arg("T"), py::arg("width"), py::arg("height"));

    m.def("bridges_closed_form", [](const Matrix& a, const Matrix& pi, std::size_t horizon) {
        return bridge_list(bridges_from_base_closed_form(TransitionMatrix(a), EndpointDistribution(pi), horizon));
    }, py::arg("A"), py::arg("pi"), py::arg("T"), "B[k][t] for t = 0..T-2");

    m.def("bridges_recursive", [](const Matrix& a, const Matrix& pi, std::size_t horizon) {
        const TransitionMatrix tm(a);
        return bridge_list(bridges_from_kernel(three_point_from_base(tm, horizon), EndpointDistribution(pi)));
    }, py::arg("A"), py::arg("pi"), py::arg("T"));

    m.def("schrodinger", [](const Matrix& a, const Vector& pi0, const Vector& piT, std::size_t horizon) {
        const auto sb = solve_schrodinger(TransitionMatrix(a), pi0, piT, horizon);
        std::vector<Matrix> steps;
        for (std::size_t t = 0; t < sb.horizon(); ++t) steps.push_back(sb.dense(t));
        return steps;
    }, py::arg("A"), py::arg("pi0"), py::arg("piT"), py::arg("T"));

    m.def("hrc_filter", [](const Matrix& table, const Matrix& a, const Matrix& pi) {
        const std::size_t horizon = static_cast<std::size_t>(table.rows()) - 1;
        const EndpointDistribution endpoints(pi);
        return filter_dict(hrc_filter(table, bridges_from_base_closed_form(TransitionMatrix(a), endpoints, horizon), endpoints));
    }, py::arg("likelihood"), py::arg("A"), py::arg("pi"), "rows of `likelihood` are epochs 0..T");

    m.def("hmc_filter", [](const Matrix& table, const Matrix& a, const Vector& pi0) {
        return filter_dict(hmc_filter(table, TransitionMatrix(a), pi0));
    }, py::arg("likelihood"), py::arg("A"), py::arg("pi0"));

    m.def("validate_config", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); },
          py::arg("config_json"), "Validated, normalised config as JSON text");

    m.def("run_experiment", [](const std::string& text, std::size_t threads) {
        const ExperimentConfig cfg = parse_config(text);
        MetricsReport report;
        {
            py::gil_scoped_release release;
            report = run_experiment(cfg, threads);
        }
        py::dict d;
        d["summary"] = report_summary(report).dump();
        py::dict scores;
        for (const auto& det : report.detectors) {
            scores[py::str(to_string(det.model))] = py::make_tuple(det.h1_scores, det.h0_scores);
        }
        d["scores"] = scores;
        py::dict rmse;
        for (const auto& tr : report.trackers) rmse[py::str(to_string(tr.model))] = tr.rmse_cm;
        d["rmse_cm"] = rmse;
        return d;
    }, py::arg("config_json"), py::arg("threads") = 1, "Runs one experiment; summary is JSON text");

    m.def("oracle_check", [](std::size_t instances, std::uint64_t seed) {
        OracleCheckOptions opts;
        opts.instances = instances;
        opts.seed = seed;
        py::list out;
        for (const auto& r : run_oracle_suites(opts)) {
            py::dict d;
            d["name"] = r.name;
            d["cases"] = r.cases;
            d["max_loglik_deviation"] = r.max_loglik_deviation;
            d["max_marginal_deviation"] = r.max_marginal_deviation;
            d["passed"] = r.passed;
            out.append(d);
        }
        return out;
    }, py::arg("instances") = 50, py::arg("seed") = 1);
}
