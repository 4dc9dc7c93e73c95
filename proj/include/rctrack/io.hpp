#pragma once

#include "rctrack/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace rctrack {

using Json = nlohmann::json;

/// Parses and validates an experiment config. Errors carry the field path.
[[nodiscard]] ExperimentConfig config_from_json(const Json& j);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
/// Axis names as used in configs and CSV headers: alpha, T, p_R, M, epsilon, sigma2.
[[nodiscard]] SweepAxis sweep_axis_from_string(const std::string& s);
[[nodiscard]] Json config_to_json(const ExperimentConfig& cfg);
/// FNV-1a over the canonical JSON dump, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);

/// Base chain and endpoint law: {"n", "T", "grid", "A", "Pi"}. Doubles are
/// written in shortest round-trip form, so a reload is exact.
[[nodiscard]] Json model_to_json(const GridSpec& grid, const TransitionMatrix& a, const EndpointDistribution& pi,
                                 std::size_t horizon);

struct ModelDocument {
    GridSpec grid;
    TransitionMatrix base;
    EndpointDistribution endpoints;
    std::size_t horizon;
};
[[nodiscard]] ModelDocument model_from_json(const Json& j);

[[nodiscard]] Json sequence_to_json(const ObservationSequence& seq, const std::vector<State>& path);
[[nodiscard]] ObservationSequence sequence_from_json(const Json& j);

/// h(t), loglik, conditional means and MAP states; marginals when requested.
[[nodiscard]] Json filter_output_to_json(const FilterOutput& out, const GridSpec& grid, bool with_marginals);

[[nodiscard]] Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Leading comment line of every CSV.
[[nodiscard]] std::string csv_preamble(const ExperimentConfig& cfg);
[[nodiscard]] std::string format_double(double v);

/// roc_<model>.csv, scores.csv or rmse_cm.csv, rmse_aps.csv, plus summary.json.
void write_report(const MetricsReport& report, const std::filesystem::path& dir);
/// sweep.csv (and sweep_rmse_cm.csv for filtering) plus summary.json.
void write_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<MetricsReport>& reports,
                 const std::filesystem::path& dir);

[[nodiscard]] Json report_summary(const MetricsReport& report);

} // namespace rctrack
