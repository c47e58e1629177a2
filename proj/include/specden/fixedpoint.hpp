#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "specden/linalg.hpp"
#include "specden/model.hpp"

namespace specden {

/// Evaluation point of the deterministic equivalent. Admissible: Im z > 0, or
/// z real and negative. The closed half-line [0, inf) is rejected.
class SpectralPoint {
public:
    explicit SpectralPoint(cplx z);
    SpectralPoint(double re, double im) : SpectralPoint(cplx(re, im)) {}

    cplx z() const { return z_; }
    bool on_negative_axis() const { return z_.imag() == 0.0; }

private:
    cplx z_;
};

struct WarmStart {
    VectorXcd delta;
    VectorXcd delta_tilde;
};

struct SolverOptions {
    /// Stop when the sup-norm of the fixed-point update, divided by
    /// max(1, sup-norm of the iterate), is at most tol.
    double tol = 1e-10;
    int max_iter = 5000;
    double damping = 0.5;  // weight of the proposed iterate
    /// Number of past updates used for Anderson mixing on top of the damped
    /// Picard step; 0 gives plain damped Picard.
    int anderson_depth = 6;
    std::optional<WarmStart> warm;
    /// When false only delta, delta_tilde, the diagonal of F~ and m_n are
    /// filled; theta, theta_tilde and f_mat stay empty. Grid sweeps use this.
    bool full_matrices = true;

    void check() const;
};

/// Solution of the 2n coupled equations
///   delta_i = Tr(Omega_i Theta)/n,  delta~_j = [Theta~]_jj
/// with F = [-z(I + sum_j Omega_j delta~_j/n)]^{-1}, F~ = diag(-1/(z(1+delta_i))),
/// Theta = (F^{-1} - z A F~ A^H)^{-1}, Theta~ = (F~^{-1} - z A^H F A)^{-1}.
struct Solution {
    cplx z;
    VectorXcd delta;
    VectorXcd delta_tilde;
    MatrixXcd theta;       // p x p
    MatrixXcd theta_tilde; // n x n
    MatrixXcd f_mat;       // p x p
    VectorXcd f_tilde_diag;
    cplx m_n;              // Tr(Theta)/p
    int iterations = 0;
    double residual = 0.0; // final scaled update, see SolverOptions::tol

    bool has_matrices() const { return theta.size() > 0; }
    WarmStart warm_start() const { return {delta, delta_tilde}; }
};

/// A model prepared for repeated solves: correlations rotated into their
/// shared eigenbasis where one exists, and the mean factored as A = L R^H
/// through its thin SVD so that every update costs O(np + (n+p) r^2) on
/// jointly diagonal models of mean rank r.
///
/// Holds a pointer to the model; the model must outlive the system.
class FixedPointSystem {
public:
    /// Imaginary part where continuation towards the real axis starts, and the
    /// floor it never goes below.
    static constexpr double kContinuationStart = 0.1;
    static constexpr double kContinuationFloor = 1e-6;

    /// Keeps its own copy of the model.
    explicit FixedPointSystem(const ModelSpec& model);
    ~FixedPointSystem();
    FixedPointSystem(FixedPointSystem&&) noexcept;
    FixedPointSystem& operator=(FixedPointSystem&&) noexcept;

    const ModelSpec& model() const { return *model_; }
    Index mean_rank() const;

    /// Damped Picard iteration. Without a warm start, points with
    /// 0 < Im z < kContinuationStart are reached by halving Im z from
    /// kContinuationStart, warm-starting each stage.
    Solution solve(const SpectralPoint& point, const SolverOptions& opts = {}) const;

    /// Values on the real axis at x, approximated at x + i*kContinuationFloor
    /// (negative x is solved exactly on the axis).
    Solution solve_real_axis(double x, const SolverOptions& opts = {}) const;

    /// Results are returned in input order. Points are swept in order of
    /// increasing Re z in fixed-size chunks, each point warm-started from its
    /// predecessor; chunks run concurrently. Chunking does not depend on the
    /// thread count, so results are reproducible.
    std::vector<Solution> solve_grid(std::span<const SpectralPoint> points, const SolverOptions& opts = {}) const;

    /// One undamped application of the fixed-point map; exposed for
    /// self-consistency checks.
    std::pair<VectorXcd, VectorXcd> apply_map(cplx z, const VectorXcd& delta, const VectorXcd& delta_tilde) const;

private:
    struct Impl;
    std::shared_ptr<const ModelSpec> model_;
    std::unique_ptr<Impl> impl_;
};

Solution solve(const ModelSpec& model, const SpectralPoint& point, const SolverOptions& opts = {});
std::vector<Solution> solve_grid(const ModelSpec& model, std::span<const SpectralPoint> points,
                                 const SolverOptions& opts = {});

/// (1/p) Tr(C Theta)
cplx trace_functional(const Solution& sol, const MatrixXcd& c);

/// u^H Theta v
cplx bilinear_functional(const Solution& sol, const VectorXcd& u, const VectorXcd& v);

} // namespace specden
