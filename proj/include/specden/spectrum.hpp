#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specden/fixedpoint.hpp"

namespace specden {

/// Densities recovered by Stieltjes inversion at height v above the real
/// axis: lsd(x) = Im m_n(x + iv)/pi, mu(j, x) = Im delta_j(x + iv)/pi,
/// mu_tilde(j, x) = Im delta~_j(x + iv)/pi.
///
/// A point mass at 0 is not a density on the positive axis; each measure's
/// mass at the origin is estimated separately and its Cauchy kernel is
/// removed from the sampled density, so the columns describe the measures
/// restricted to (0, inf).
struct DensityProfile {
    VectorXd grid;
    double v = 0.0;
    VectorXd lsd;
    std::optional<MatrixXd> mu;        // n x grid
    std::optional<MatrixXd> mu_tilde;  // n x grid
    double lsd_atom = 0.0;
    VectorXd mu_atom;                  // empty unless measures were requested
    VectorXd mu_tilde_atom;

    Index size() const { return grid.size(); }
    bool has_measures() const { return mu.has_value(); }
};

struct Interval {
    double a;
    double b;
};

struct SupportSet {
    std::vector<Interval> intervals;
    double right_endpoint = 0.0; // max b_k; 0 when empty
    double threshold = 0.0;
    double v = 0.0;

    bool empty() const { return intervals.empty(); }
    bool contains(double x, double inflate = 0.0) const;
    bool overlaps(const Interval& probe) const;
    /// Open gaps between consecutive intervals, plus (0, a_1) when a_1 > 0.
    std::vector<Interval> gaps() const;
};

/// Evenly spaced grid on [lo, hi] with `points` nodes.
VectorXd linear_grid(double lo, double hi, Index points);

DensityProfile density(const FixedPointSystem& system, std::span<const double> grid, double v,
                       bool include_measures, const SolverOptions& opts = {});
DensityProfile density(const ModelSpec& model, std::span<const double> grid, double v, bool include_measures,
                       const SolverOptions& opts = {});

/// Point masses at the origin of F^n, mu_j and mu~_j, estimated as
/// eps * m(-eps) for a tiny eps.
struct OriginMasses {
    double lsd;
    VectorXd mu;
    VectorXd mu_tilde;
};
OriginMasses origin_masses(const FixedPointSystem& system, const SolverOptions& opts = {});

/// Maximal runs of lsd > threshold with threshold crossings interpolated
/// linearly; gaps narrower than two grid steps are merged.
SupportSet detect_support(const DensityProfile& profile, double threshold = 1e-3);

/// Re-locates each threshold crossing on an 8x finer local grid at
/// v_refine (default 1e-5).
SupportSet refine_support_edges(const FixedPointSystem& system, const DensityProfile& profile,
                                const SupportSet& coarse, double v_refine = 1e-5, const SolverOptions& opts = {});

/// density + detect_support + refine_support_edges.
SupportSet compute_support(const FixedPointSystem& system, std::span<const double> grid, double v = 1e-4,
                           double threshold = 1e-3, const SolverOptions& opts = {});

/// Cumulative distribution of F^n on the profile grid (atom + trapezoid rule).
VectorXd lsd_cdf(const DensityProfile& profile);

/// F^n evaluated at x by linear interpolation of lsd_cdf (0 below the grid,
/// last value above it).
double interpolate_cdf(const DensityProfile& profile, const VectorXd& cdf, double x);

struct InclusionViolation {
    std::string measure; // "mu" or "mu_tilde"
    Index column;
    double x;
    double value;
};

struct InclusionReport {
    double threshold = 0.0;
    std::size_t checked = 0;
    std::vector<InclusionViolation> violations;

    bool ok() const { return violations.empty(); }
};

/// Every grid point where some mu_j or mu~_j exceeds the threshold must lie
/// in a support interval inflated by one grid step.
InclusionReport check_support_inclusion(const DensityProfile& profile, const SupportSet& support,
                                        double threshold = 1e-3);

struct EdgeGapReport {
    Interval interval{};
    Index points = 0;
    double min_abs_delta_tilde = 0.0;
    double min_abs_one_plus_delta = 0.0;
    double argmin_delta_tilde = 0.0;
    double argmin_one_plus_delta = 0.0;
    std::vector<double> inconclusive; // x values where continuation failed

    bool conclusive() const { return inconclusive.empty(); }
    double minimum() const { return std::min(min_abs_delta_tilde, min_abs_one_plus_delta); }
};

/// min_j |delta~_j(x)| and min_j |1 + delta_j(x)| over `points` nodes of
/// [a, b], real-axis values by continuation. The interval must avoid the
/// support and have a > 0.
EdgeGapReport edge_gap_condition(const FixedPointSystem& system, const Interval& interval, Index points,
                                 const SupportSet& support, const SolverOptions& opts = {});

/// Integral of f against F^n: atom * f(0) + trapezoid of f * lsd.
template <typename F>
double lsd_expectation(const DensityProfile& profile, F&& f) {
    double total = profile.lsd_atom * f(0.0);
    for (Index k = 0; k + 1 < profile.size(); ++k) {
        const double h = profile.grid(k + 1) - profile.grid(k);
        total += 0.5 * h * (profile.lsd(k) * f(profile.grid(k)) + profile.lsd(k + 1) * f(profile.grid(k + 1)));
    }
    return total;
}

} // namespace specden
