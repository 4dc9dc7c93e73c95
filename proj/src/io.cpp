#include "rctrack/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rctrack {

namespace {

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void reject_unknown(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown field");
    }
}

const Json& require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
    return j;
}

double get_number(const Json& j, const std::string& key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
    return v.get<double>();
}

std::uint64_t get_unsigned(const Json& j, const std::string& key, const std::string& path, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(join(path, key), "expected a nonnegative integer");
}

std::string get_string(const Json& j, const std::string& key, const std::string& path, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_numbers(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(path, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Matrix get_matrix(const Json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Matrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::vector<double> row = get_numbers(v[static_cast<std::size_t>(r)], path);
        if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) throw ConfigError(path, "ragged matrix");
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

Json matrix_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

State get_cell(const Json& j, const std::string& key, const std::string& path, const GridSpec& grid) {
    const std::string field = join(path, key);
    if (!j.contains(key)) throw ConfigError(field, "missing");
    const std::vector<double> xy = get_numbers(j.at(key), field);
    if (xy.size() != 2) throw ConfigError(field, "expected [x, y]");
    const double x = xy[0];
    const double y = xy[1];
    if (x < 1 || y < 1 || x > static_cast<double>(grid.width) || y > static_cast<double>(grid.height) ||
        x != std::floor(x) || y != std::floor(y)) {
        throw ConfigError(field, "cell outside the grid");
    }
    return grid.state(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
}

EndpointSpec parse_endpoints(const Json& j, const GridSpec& grid) {
    const std::string path = "endpoints";
    require_object(j, path);
    EndpointSpec spec;
    const std::string kind = get_string(j, "kind", path, "mixture");
    if (kind == "mixture") {
        reject_unknown(j, path, {"kind", "alpha"});
        spec.kind = EndpointKind::mixture;
        spec.alpha = get_number(j, "alpha", path, 1.0);
    } else if (kind == "crossing") {
        reject_unknown(j, path, {"kind"});
        spec.kind = EndpointKind::crossing;
    } else if (kind == "loitering") {
        reject_unknown(j, path, {"kind", "weights"});
        spec.kind = EndpointKind::loitering;
        if (j.contains("weights")) spec.loiter_weights = get_numbers(j.at("weights"), join(path, "weights"));
    } else if (kind == "pair") {
        reject_unknown(j, path, {"kind", "source", "destination"});
        spec.kind = EndpointKind::pair;
        spec.source = get_cell(j, "source", path, grid);
        spec.destination = get_cell(j, "destination", path, grid);
    } else if (kind == "explicit") {
        reject_unknown(j, path, {"kind", "pi"});
        spec.kind = EndpointKind::explicit_matrix;
        if (!j.contains("pi")) throw ConfigError(join(path, "pi"), "missing");
        spec.pi = get_matrix(j.at("pi"), join(path, "pi"));
        if (static_cast<std::size_t>(spec.pi.rows()) != grid.size() || spec.pi.rows() != spec.pi.cols()) {
            throw ConfigError(join(path, "pi"), "must be N x N for the grid");
        }
        try {
            (void)EndpointDistribution(spec.pi);
        } catch (const ModelError& e) {
            throw ConfigError(join(path, "pi"), e.what());
        }
    } else {
        throw ConfigError(join(path, "kind"), "expected mixture, crossing, loitering, pair or explicit");
    }
    return spec;
}

ObservationConfig parse_observation(const Json& j) {
    const std::string path = "observation";
    require_object(j, path);
    ObservationConfig obs;
    const std::string model = get_string(j, "model", path, "single");
    if (model == "single") {
        reject_unknown(j, path, {"model", "epsilon"});
        obs.multi = false;
        obs.epsilon = get_number(j, "epsilon", path, 0.5);
    } else if (model == "multi") {
        reject_unknown(j, path, {"model", "M", "lambda0"});
        obs.multi = true;
        obs.m = static_cast<std::size_t>(get_unsigned(j, "M", path, 1));
        obs.lambda0 = get_number(j, "lambda0", path, 0.0);
    } else {
        throw ConfigError(join(path, "model"), "expected single or multi");
    }
    return obs;
}

Json endpoints_json(const EndpointSpec& spec, const GridSpec& grid) {
    auto cell = [&](State s) {
        const auto [x, y] = grid.cell(s);
        return Json::array({x, y});
    };
    switch (spec.kind) {
    case EndpointKind::mixture: return {{"kind", "mixture"}, {"alpha", spec.alpha}};
    case EndpointKind::crossing: return {{"kind", "crossing"}};
    case EndpointKind::loitering: {
        Json j = {{"kind", "loitering"}};
        if (!spec.loiter_weights.empty()) j["weights"] = spec.loiter_weights;
        return j;
    }
    case EndpointKind::pair:
        return {{"kind", "pair"}, {"source", cell(spec.source)}, {"destination", cell(spec.destination)}};
    case EndpointKind::explicit_matrix: return {{"kind", "explicit"}, {"pi", matrix_json(spec.pi)}};
    }
    return {};
}

std::string column_suffix(TargetModel m) { return to_string(m); }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

} // namespace

SweepAxis sweep_axis_from_string(const std::string& s) {
    for (SweepAxis a : {SweepAxis::alpha, SweepAxis::horizon, SweepAxis::p_stay, SweepAxis::m, SweepAxis::epsilon,
                        SweepAxis::sigma2}) {
        if (to_string(a) == s) return a;
    }
    throw ConfigError("sweep.axis", "expected one of alpha, T, p_R, M, epsilon, sigma2");
}

ExperimentConfig config_from_json(const Json& j) {
    require_object(j, "");
    reject_unknown(j, "", {"name", "kind", "grid", "p_R", "T", "endpoints", "observation", "sigma2", "trials", "seed",
                           "models", "sweep"});
    ExperimentConfig cfg;
    cfg.name = get_string(j, "name", "", cfg.name);
    const std::string kind = get_string(j, "kind", "", "detection");
    if (kind == "detection") {
        cfg.kind = ExperimentKind::detection;
    } else if (kind == "filtering") {
        cfg.kind = ExperimentKind::filtering;
    } else {
        throw ConfigError("kind", "expected detection or filtering");
    }
    if (j.contains("grid")) {
        const Json& g = require_object(j.at("grid"), "grid");
        reject_unknown(g, "grid", {"width", "height"});
        cfg.grid.width = static_cast<std::size_t>(get_unsigned(g, "width", "grid", 8));
        cfg.grid.height = static_cast<std::size_t>(get_unsigned(g, "height", "grid", 8));
    }
    cfg.p_stay = get_number(j, "p_R", "", cfg.p_stay);
    cfg.horizon = static_cast<std::size_t>(get_unsigned(j, "T", "", cfg.horizon));
    if (j.contains("endpoints")) cfg.endpoints = parse_endpoints(j.at("endpoints"), cfg.grid);
    if (j.contains("observation")) cfg.observation = parse_observation(j.at("observation"));
    cfg.sigma2 = get_number(j, "sigma2", "", cfg.sigma2);
    cfg.trials = static_cast<std::size_t>(get_unsigned(j, "trials", "", cfg.trials));
    cfg.seed = get_unsigned(j, "seed", "", cfg.seed);
    if (j.contains("models")) {
        const Json& ms = j.at("models");
        if (!ms.is_array()) throw ConfigError("models", "expected an array of model names");
        cfg.models.clear();
        for (const auto& m : ms) {
            if (!m.is_string()) throw ConfigError("models", "expected model names");
            try {
                const TargetModel tm = target_model_from_string(m.get<std::string>());
                if (cfg.uses(tm)) throw ConfigError("models", "duplicate model " + m.get<std::string>());
                cfg.models.push_back(tm);
            } catch (const ModelError& e) {
                throw ConfigError("models", e.what());
            }
        }
    }
    if (j.contains("sweep")) {
        const Json& s = require_object(j.at("sweep"), "sweep");
        reject_unknown(s, "sweep", {"axis", "values"});
        SweepSpec spec;
        spec.axis = sweep_axis_from_string(get_string(s, "axis", "sweep", ""));
        if (!s.contains("values")) throw ConfigError("sweep.values", "missing");
        spec.values = get_numbers(s.at("values"), "sweep.values");
        cfg.sweep = std::move(spec);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    Json j;
    try {
        j = read_json(path);
    } catch (const Json::exception& e) {
        throw ConfigError("/", std::string("malformed JSON: ") + e.what());
    }
    return config_from_json(j);
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    j["kind"] = to_string(cfg.kind);
    j["grid"] = {{"width", cfg.grid.width}, {"height", cfg.grid.height}};
    j["p_R"] = cfg.p_stay;
    j["T"] = cfg.horizon;
    j["endpoints"] = endpoints_json(cfg.endpoints, cfg.grid);
    if (cfg.observation.multi) {
        j["observation"] = {{"model", "multi"}, {"M", cfg.observation.m}, {"lambda0", cfg.observation.lambda0}};
    } else {
        j["observation"] = {{"model", "single"}, {"epsilon", cfg.observation.epsilon}};
    }
    j["sigma2"] = cfg.sigma2;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    Json models = Json::array();
    for (TargetModel m : cfg.models) models.push_back(to_string(m));
    j["models"] = models;
    if (cfg.sweep) j["sweep"] = {{"axis", to_string(cfg.sweep->axis)}, {"values", cfg.sweep->values}};
    return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json model_to_json(const GridSpec& grid, const TransitionMatrix& a, const EndpointDistribution& pi,
                   std::size_t horizon) {
    return {{"n", a.size()},
            {"T", horizon},
            {"grid", {{"width", grid.width}, {"height", grid.height}}},
            {"A", matrix_json(a.dense())},
            {"Pi", matrix_json(pi.matrix())}};
}

ModelDocument model_from_json(const Json& j) {
    try {
        const std::size_t n = j.at("n").get<std::size_t>();
        GridSpec grid{j.at("grid").at("width").get<std::size_t>(), j.at("grid").at("height").get<std::size_t>()};
        if (grid.size() != n) throw ModelError("grid size does not match n");
        Matrix a = get_matrix(j.at("A"), "A");
        Matrix pi = get_matrix(j.at("Pi"), "Pi");
        if (static_cast<std::size_t>(a.rows()) != n || static_cast<std::size_t>(pi.rows()) != n) {
            throw ModelError("matrix size does not match n");
        }
        return ModelDocument{grid, TransitionMatrix(std::move(a)), EndpointDistribution(std::move(pi)),
                             j.at("T").get<std::size_t>()};
    } catch (const Json::exception& e) {
        throw ModelError(std::string("malformed model document: ") + e.what());
    }
}

Json sequence_to_json(const ObservationSequence& seq, const std::vector<State>& path) {
    Json epochs = Json::array();
    for (const auto& rec : seq) {
        Json pts = Json::array();
        for (const auto& p : rec.points) pts.push_back({p.x, p.y});
        epochs.push_back({{"t", rec.epoch}, {"points", pts}});
    }
    Json j = {{"epochs", epochs}};
    if (!path.empty()) j["path"] = path;
    return j;
}

ObservationSequence sequence_from_json(const Json& j) {
    try {
        ObservationSequence seq;
        for (const auto& e : j.at("epochs")) {
            ObservationRecord rec{e.at("t").get<std::size_t>(), {}};
            for (const auto& p : e.at("points")) rec.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            seq.push_back(std::move(rec));
        }
        return seq;
    } catch (const Json::exception& e) {
        throw ModelError(std::string("malformed observation document: ") + e.what());
    }
}

Json filter_output_to_json(const FilterOutput& out, const GridSpec& grid, bool with_marginals) {
    const Estimates est = estimates(out, grid);
    Json means = Json::array();
    for (const auto& p : est.means) means.push_back({p.x, p.y});
    Json h = Json::array();
    for (Eigen::Index t = 0; t < out.h.size(); ++t) h.push_back(out.h(t));
    Json j = {{"loglik", out.loglik}, {"h", h}, {"means", means}, {"map", est.map}};
    if (with_marginals) j["marginals"] = matrix_json(out.marginals);
    return j;
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot open " + path.string());
    return Json::parse(in);
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_preamble(const ExperimentConfig& cfg) {
    return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed) + "\n";
}

Json report_summary(const MetricsReport& report) {
    Json j;
    j["config"] = config_to_json(report.config);
    j["config_hash"] = config_hash(report.config);
    j["seed"] = report.config.seed;
    j["beta"] = report.beta;
    Json dets = Json::object();
    for (const auto& d : report.detectors) dets[to_string(d.model)] = {{"auc", d.auc}, {"auc_se", d.auc_se}};
    if (!dets.empty()) j["auc"] = dets;
    if (report.delta_auc) j["delta_auc"] = {{"value", *report.delta_auc}, {"se", report.delta_auc_se.value_or(0.0)}};
    Json trk = Json::object();
    for (const auto& t : report.trackers) trk[to_string(t.model)] = {{"rmse_aps", t.rmse_aps}};
    if (!trk.empty()) j["rmse"] = trk;
    j["runtime_seconds"] = report.runtime_seconds;
    return j;
}

void write_report(const MetricsReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string pre = csv_preamble(report.config);
    if (!report.detectors.empty()) {
        for (const auto& d : report.detectors) {
            std::ostringstream os;
            os << pre << "threshold,p_fa,p_d\n";
            for (const auto& p : d.roc.points) {
                os << format_double(p.threshold) << ',' << format_double(p.p_fa) << ',' << format_double(p.p_d) << '\n';
            }
            write_text(dir / ("roc_" + to_string(d.model) + ".csv"), os.str());
        }
        std::ostringstream os;
        os << pre << "trial,hypothesis";
        for (const auto& d : report.detectors) os << ",score_" << column_suffix(d.model);
        os << '\n';
        const std::size_t half = report.detectors.front().h1_scores.size();
        for (std::size_t h = 0; h < 2; ++h) {
            for (std::size_t r = 0; r < half; ++r) {
                os << r << ',' << (h == 0 ? "H1" : "H0");
                for (const auto& d : report.detectors) os << ',' << format_double(h == 0 ? d.h1_scores[r] : d.h0_scores[r]);
                os << '\n';
            }
        }
        write_text(dir / "scores.csv", os.str());
    }
    if (!report.trackers.empty()) {
        std::ostringstream cm;
        cm << pre << 't';
        for (const auto& t : report.trackers) cm << ",rmse_" << column_suffix(t.model);
        cm << '\n';
        for (std::size_t e = 0; e < report.trackers.front().rmse_cm.size(); ++e) {
            cm << e;
            for (const auto& t : report.trackers) cm << ',' << format_double(t.rmse_cm[e]);
            cm << '\n';
        }
        write_text(dir / "rmse_cm.csv", cm.str());

        std::ostringstream aps;
        aps << pre << "model,rmse_aps,se\n";
        for (const auto& t : report.trackers) {
            double var = 0.0;
            const double n = static_cast<double>(t.aps_per_trial.size());
            for (double v : t.aps_per_trial) var += (v - t.rmse_aps) * (v - t.rmse_aps);
            const double se = n > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
            aps << to_string(t.model) << ',' << format_double(t.rmse_aps) << ',' << format_double(se) << '\n';
        }
        write_text(dir / "rmse_aps.csv", aps.str());
    }
    write_json(dir / "summary.json", report_summary(report));
}

void write_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<MetricsReport>& reports,
                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string pre = csv_preamble(cfg);
    const std::string axis_name = to_string(axis);
    std::ostringstream os;
    os << pre << axis_name << ",beta";
    for (TargetModel m : cfg.models) {
        os << (cfg.kind == ExperimentKind::detection ? ",auc_" : ",rmse_aps_") << to_string(m);
    }
    const bool with_delta = cfg.kind == ExperimentKind::detection && cfg.uses(TargetModel::hrc) && cfg.uses(TargetModel::hmc);
    if (with_delta) os << ",delta_auc,delta_auc_se";
    os << '\n';
    const auto& values = cfg.sweep ? cfg.sweep->values : std::vector<double>{};
    for (std::size_t v = 0; v < reports.size(); ++v) {
        const MetricsReport& r = reports[v];
        os << format_double(v < values.size() ? values[v] : 0.0) << ',' << format_double(r.beta);
        for (TargetModel m : cfg.models) {
            os << ',' << format_double(cfg.kind == ExperimentKind::detection ? r.detector(m).auc : r.tracker(m).rmse_aps);
        }
        if (with_delta) os << ',' << format_double(*r.delta_auc) << ',' << format_double(*r.delta_auc_se);
        os << '\n';
    }
    write_text(dir / "sweep.csv", os.str());

    if (cfg.kind == ExperimentKind::filtering) {
        std::ostringstream cm;
        cm << pre << axis_name << ",t";
        for (TargetModel m : cfg.models) cm << ",rmse_" << to_string(m);
        cm << '\n';
        for (std::size_t v = 0; v < reports.size(); ++v) {
            const MetricsReport& r = reports[v];
            for (std::size_t e = 0; e < r.trackers.front().rmse_cm.size(); ++e) {
                cm << format_double(values[v]) << ',' << e;
                for (TargetModel m : cfg.models) cm << ',' << format_double(r.tracker(m).rmse_cm[e]);
                cm << '\n';
            }
        }
        write_text(dir / "sweep_rmse_cm.csv", cm.str());
    }

    Json summary;
    summary["config"] = config_to_json(cfg);
    summary["config_hash"] = config_hash(cfg);
    summary["seed"] = cfg.seed;
    summary["axis"] = axis_name;
    Json points = Json::array();
    double runtime = 0.0;
    for (std::size_t v = 0; v < reports.size(); ++v) {
        Json p = report_summary(reports[v]);
        p.erase("config");
        p[axis_name] = values[v];
        runtime += reports[v].runtime_seconds;
        points.push_back(std::move(p));
    }
    summary["points"] = points;
    if (with_delta && reports.size() >= 2) {
        // Least-squares line delta_auc = slope * beta + intercept.
        double mb = 0.0, md = 0.0;
        for (const auto& r : reports) {
            mb += r.beta / static_cast<double>(reports.size());
            md += *r.delta_auc / static_cast<double>(reports.size());
        }
        double sbb = 0.0, sbd = 0.0;
        for (const auto& r : reports) {
            sbb += (r.beta - mb) * (r.beta - mb);
            sbd += (r.beta - mb) * (*r.delta_auc - md);
        }
        if (sbb > 0.0) summary["delta_auc_fit"] = {{"slope", sbd / sbb}, {"intercept", md - sbd / sbb * mb}};
    }
    summary["runtime_seconds"] = runtime;
    write_json(dir / "summary.json", summary);
}

} // namespace rctrack
