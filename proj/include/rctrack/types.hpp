#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rctrack {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// State indices are 0-based; grid cells carry 1-based (x, y) coordinates.
using State = std::size_t;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or infeasible model construction (non-stochastic matrix,
/// unreachable endpoints, inconsistent kernel).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Observation is impossible under the model at epoch `epoch` (h(t) = 0).
class ZeroEvidenceError : public Error {
public:
    explicit ZeroEvidenceError(std::size_t epoch)
        : Error("zero-likelihood evidence at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    [[nodiscard]] std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

/// Scaling iteration did not reach tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    [[nodiscard]] double residual() const { return residual_; }

private:
    double residual_;
};

/// Configuration failed validation; `field()` is a JSON-pointer-like path.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Optional operation counters for complexity checks on the hot kernels.
struct KernelStats {
    std::size_t transition_mults = 0;
    std::size_t likelihood_mults = 0;
};

} // namespace rctrack
