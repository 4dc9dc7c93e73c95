#pragma once

#include "rctrack/rng.hpp"
#include "rctrack/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace rctrack {

inline constexpr double kStochasticTol = 1e-12;

/// Row-stochastic N x N matrix of a time-homogeneous base chain.
class TransitionMatrix {
public:
    /// Throws ModelError unless N >= 2, entries lie in [0, 1] and every row
    /// sums to 1 within kStochasticTol.
    explicit TransitionMatrix(Matrix a);

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(dense_.rows()); }
    [[nodiscard]] const Matrix& dense() const { return dense_; }
    [[nodiscard]] const SparseRowMatrix& sparse() const { return sparse_; }
    [[nodiscard]] double operator()(State i, State j) const { return dense_(i, j); }

    /// A^n, n >= 0.
    [[nodiscard]] Matrix power(std::size_t n) const;

private:
    Matrix dense_;
    SparseRowMatrix sparse_;
};

/// Joint law of (X_0, X_T): entry (i, k) = Pr{X_0 = i, X_T = k}.
class EndpointDistribution {
public:
    explicit EndpointDistribution(Matrix pi);

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(pi_.rows()); }
    [[nodiscard]] const Matrix& matrix() const { return pi_; }
    [[nodiscard]] double operator()(State i, State k) const { return pi_(i, k); }

    [[nodiscard]] Vector source_marginal() const { return pi_.rowwise().sum(); }
    [[nodiscard]] Vector destination_marginal() const { return pi_.colwise().sum().transpose(); }

    /// Pi_{i,k} > 0 implies (A^T)_{i,k} > 0.
    [[nodiscard]] bool feasible(const TransitionMatrix& a, std::size_t horizon) const;

    /// Markov endpoint law Pi_{i,k} = pi0(i) (A^T)_{i,k}; the RC it induces is the base chain.
    static EndpointDistribution markov(const TransitionMatrix& a, const Vector& pi0, std::size_t horizon);

private:
    Matrix pi_;
};

/// Three-point transitions Q_{i,j,l}(t) = Pr{X_t = j | X_{t-1} = i, X_{t+1} = l}
/// for the interior epochs t = 1..T-1.
class ThreePointKernel {
public:
    class Slice {
    public:
        explicit Slice(std::size_t n);

        [[nodiscard]] std::size_t size() const { return n_; }
        [[nodiscard]] bool defined(State i, State l) const { return defined_[i * n_ + l] != 0; }
        [[nodiscard]] double operator()(State i, State j, State l) const { return q_[(i * n_ + l) * n_ + j]; }
        /// Middle states j with Q_{i,j,l} > 0, ascending.
        [[nodiscard]] const std::vector<State>& support(State i, State l) const { return support_[i * n_ + l]; }

        void set(State i, State l, const Vector& column);

    private:
        std::size_t n_;
        std::vector<double> q_;
        std::vector<char> defined_;
        std::vector<std::vector<State>> support_;
    };

    ThreePointKernel(std::size_t horizon, std::vector<std::shared_ptr<const Slice>> slices);

    [[nodiscard]] std::size_t size() const { return slices_.front()->size(); }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }
    /// Slice for interior epoch t in 1..T-1.
    [[nodiscard]] const Slice& at(std::size_t t) const;

private:
    std::size_t horizon_;
    std::vector<std::shared_ptr<const Slice>> slices_;
};

/// N Markov bridges. Bridge k carries B^k(t) for t = 0..T-2 and the initial
/// law pi^k; the step T-1 -> T is pinned to k and not stored. Rows from
/// which k cannot be reached are marked unreachable and stored empty.
class BridgeFamily {
public:
    BridgeFamily(std::size_t n, std::size_t horizon);

    [[nodiscard]] std::size_t size() const { return n_; }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }

    [[nodiscard]] const SparseRowMatrix& transition(State k, std::size_t t) const { return steps_[index(k, t)]; }
    [[nodiscard]] bool reachable(State k, std::size_t t, State i) const { return reachable_[index(k, t)][i] != 0; }
    [[nodiscard]] Matrix dense(State k, std::size_t t) const { return Matrix(transition(k, t)); }

    [[nodiscard]] const Vector& initial(State k) const { return initial_[k]; }
    /// False when the destination has zero probability under Pi.
    [[nodiscard]] bool has_initial(State k) const { return has_initial_[k] != 0; }

    void set_step(State k, std::size_t t, const Matrix& rows, const std::vector<char>& reachable);
    void set_initial(const EndpointDistribution& pi);

private:
    [[nodiscard]] std::size_t index(State k, std::size_t t) const { return k * (horizon_ - 1) + t; }

    std::size_t n_;
    std::size_t horizon_;
    std::vector<SparseRowMatrix> steps_;
    std::vector<std::vector<char>> reachable_;
    std::vector<Vector> initial_;
    std::vector<char> has_initial_;
};

/// Time-inhomogeneous chain attaining prescribed marginals with dynamics
/// closest to the base process.
struct SchrodingerBridge {
    std::vector<SparseRowMatrix> transitions;  // S(t), t = 0..T-1
    std::vector<std::vector<char>> reachable;  // per t, per row
    Vector lambda0;
    Vector lambdaT;
    std::vector<Vector> psi;                   // psi_t, t = 0..T
    std::size_t iterations = 0;
    double residual = 0.0;

    [[nodiscard]] std::size_t horizon() const { return transitions.size(); }
    [[nodiscard]] Matrix dense(std::size_t t) const { return Matrix(transitions[t]); }
};

struct SchrodingerOptions {
    double tol = 1e-10;
    std::size_t max_iterations = 10000;
};

[[nodiscard]] ThreePointKernel three_point_from_base(const TransitionMatrix& a, std::size_t horizon);

/// Backward recursion over the three-point kernel.
[[nodiscard]] BridgeFamily bridges_from_kernel(const ThreePointKernel& q, const EndpointDistribution& pi);

/// B^k_{i,j}(t) = A_{i,j} (A^{T-t-1})_{j,k} / (A^{T-t})_{i,k}.
[[nodiscard]] BridgeFamily bridges_from_base_closed_form(const TransitionMatrix& a,
                                                         const EndpointDistribution& pi,
                                                         std::size_t horizon);

/// One row of the backward recursion evaluated with a single pivot l against
/// the already-built B^k(t+1) in `family`. Empty if l is not a valid pivot or
/// does not cover the row's support.
[[nodiscard]] std::optional<Vector> bridge_row_via_pivot(const ThreePointKernel& q,
                                                         const BridgeFamily& family,
                                                         State k, std::size_t t, State i, State l);

[[nodiscard]] SchrodingerBridge solve_schrodinger(const TransitionMatrix& a, const Vector& pi0,
                                                  const Vector& piT, std::size_t horizon,
                                                  const SchrodingerOptions& options = {});

/// Path X_0..X_T: (X_0, X_T) drawn jointly from Pi, interior from B^{X_T}.
[[nodiscard]] std::vector<State> sample_rc_path(const BridgeFamily& bridges,
                                                const EndpointDistribution& pi, Rng& rng);

[[nodiscard]] std::vector<State> sample_markov_path(const TransitionMatrix& a, const Vector& pi0,
                                                    std::size_t horizon, Rng& rng);

/// Ancestral sampling through per-step matrices (e.g. the S(t) of a bridge).
[[nodiscard]] std::vector<State> sample_markov_path(const std::vector<SparseRowMatrix>& steps,
                                                    const Vector& pi0, Rng& rng);

} // namespace rctrack
