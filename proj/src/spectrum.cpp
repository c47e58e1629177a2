#include "specden/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "specden/error.hpp"

namespace specden {

namespace {

constexpr double kOriginEps = 1e-10;

double cauchy(double mass, double x, double v) { return mass * v / (std::numbers::pi * (x * x + v * v)); }

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw InvalidArgument("density grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!std::isfinite(grid[k])) throw InvalidArgument("density grid has a non-finite entry");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw InvalidArgument("density grid must be strictly increasing");
    }
}

double grid_step(const VectorXd& grid) {
    if (grid.size() < 2) return 0.0;
    return (grid(grid.size() - 1) - grid(0)) / static_cast<double>(grid.size() - 1);
}

double crossing(double x0, double y0, double x1, double y1, double level) {
    if (y1 == y0) return 0.5 * (x0 + x1);
    return x0 + (level - y0) / (y1 - y0) * (x1 - x0);
}

std::vector<SpectralPoint> points_at(std::span<const double> grid, double v) {
    std::vector<SpectralPoint> pts;
    pts.reserve(grid.size());
    for (double x : grid) pts.emplace_back(x, v);
    return pts;
}

std::vector<Interval> runs_above(const VectorXd& x, const VectorXd& y, double threshold) {
    std::vector<Interval> out;
    const Index m = x.size();
    Index k = 0;
    while (k < m) {
        if (!(y(k) > threshold)) {
            ++k;
            continue;
        }
        const Index start = k;
        while (k < m && y(k) > threshold) ++k;
        const Index stop = k - 1;
        const double a = start == 0 ? x(0) : crossing(x(start - 1), y(start - 1), x(start), y(start), threshold);
        const double b = stop == m - 1 ? x(m - 1) : crossing(x(stop), y(stop), x(stop + 1), y(stop + 1), threshold);
        out.push_back({a, b});
    }
    return out;
}

void merge_narrow_gaps(std::vector<Interval>& intervals, double width) {
    std::vector<Interval> merged;
    for (const auto& iv : intervals) {
        if (!merged.empty() && iv.a - merged.back().b < width)
            merged.back().b = std::max(merged.back().b, iv.b);
        else
            merged.push_back(iv);
    }
    intervals = std::move(merged);
}

SupportSet finish(std::vector<Interval> intervals, double threshold, double v) {
    SupportSet s;
    s.intervals = std::move(intervals);
    s.threshold = threshold;
    s.v = v;
    for (const auto& iv : s.intervals) s.right_endpoint = std::max(s.right_endpoint, iv.b);
    return s;
}

} // namespace

bool SupportSet::contains(double x, double inflate) const {
    return std::any_of(intervals.begin(), intervals.end(),
                       [&](const Interval& iv) { return x >= iv.a - inflate && x <= iv.b + inflate; });
}

bool SupportSet::overlaps(const Interval& probe) const {
    return std::any_of(intervals.begin(), intervals.end(),
                       [&](const Interval& iv) { return probe.a <= iv.b && probe.b >= iv.a; });
}

std::vector<Interval> SupportSet::gaps() const {
    std::vector<Interval> out;
    if (intervals.empty()) return out;
    if (intervals.front().a > 0.0) out.push_back({0.0, intervals.front().a});
    for (std::size_t k = 1; k < intervals.size(); ++k) out.push_back({intervals[k - 1].b, intervals[k].a});
    return out;
}

VectorXd linear_grid(double lo, double hi, Index points) {
    if (points < 2 || !(hi > lo)) throw InvalidArgument("linear_grid needs hi > lo and at least two points");
    return VectorXd::LinSpaced(points, lo, hi);
}

OriginMasses origin_masses(const FixedPointSystem& system, const SolverOptions& opts) {
    SolverOptions o = opts;
    o.full_matrices = false;
    o.warm.reset();
    const Solution s = system.solve(SpectralPoint(-kOriginEps, 0.0), o);
    // eps * m(-eps) -> nu({0}); clip the O(sqrt eps) leakage of an integrable
    // singularity to keep the masses in [0, total].
    OriginMasses out;
    out.lsd = std::clamp(kOriginEps * s.m_n.real(), 0.0, 1.0);
    out.mu = (kOriginEps * s.delta.real()).cwiseMax(0.0);
    out.mu_tilde = (kOriginEps * s.delta_tilde.real()).cwiseMax(0.0);
    return out;
}

DensityProfile density(const FixedPointSystem& system, std::span<const double> grid, double v,
                       bool include_measures, const SolverOptions& opts) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("density needs v > 0");
    check_grid(grid);
    SolverOptions o = opts;
    o.full_matrices = false;
    o.warm.reset();

    const auto pts = points_at(grid, v);
    const auto sols = system.solve_grid(pts, o);
    const OriginMasses origin = origin_masses(system, opts);

    const Index m = static_cast<Index>(grid.size());
    const Index n = system.model().n();
    DensityProfile prof;
    prof.grid = Eigen::Map<const VectorXd>(grid.data(), m);
    prof.v = v;
    prof.lsd_atom = origin.lsd;
    prof.lsd.resize(m);
    if (include_measures) {
        prof.mu = MatrixXd(n, m);
        prof.mu_tilde = MatrixXd(n, m);
        prof.mu_atom = origin.mu;
        prof.mu_tilde_atom = origin.mu_tilde;
    }
    for (Index k = 0; k < m; ++k) {
        const double x = grid[static_cast<std::size_t>(k)];
        const auto& s = sols[static_cast<std::size_t>(k)];
        prof.lsd(k) = std::max(0.0, s.m_n.imag() / std::numbers::pi - cauchy(origin.lsd, x, v));
        if (!include_measures) continue;
        for (Index j = 0; j < n; ++j) {
            (*prof.mu)(j, k) = std::max(0.0, s.delta(j).imag() / std::numbers::pi - cauchy(origin.mu(j), x, v));
            (*prof.mu_tilde)(j, k) =
                std::max(0.0, s.delta_tilde(j).imag() / std::numbers::pi - cauchy(origin.mu_tilde(j), x, v));
        }
    }
    return prof;
}

DensityProfile density(const ModelSpec& model, std::span<const double> grid, double v, bool include_measures,
                       const SolverOptions& opts) {
    FixedPointSystem system(model);
    return density(system, grid, v, include_measures, opts);
}

SupportSet detect_support(const DensityProfile& profile, double threshold) {
    if (!(threshold > 0.0)) throw InvalidArgument("support threshold must be positive");
    auto intervals = runs_above(profile.grid, profile.lsd, threshold);
    merge_narrow_gaps(intervals, 2.0 * grid_step(profile.grid));
    return finish(std::move(intervals), threshold, profile.v);
}

SupportSet refine_support_edges(const FixedPointSystem& system, const DensityProfile& profile,
                                const SupportSet& coarse, double v_refine, const SolverOptions& opts) {
    if (!(v_refine > 0.0)) throw InvalidArgument("refinement height must be positive");
    if (coarse.empty() || profile.size() < 2) return coarse;
    constexpr int kSub = 8;
    const VectorXd& x = profile.grid;
    const Index m = x.size();
    const double lo = x(0);
    const double hi = x(m - 1);
    const double h = grid_step(x);
    const double thr = coarse.threshold;

    SolverOptions o = opts;
    o.full_matrices = false;
    o.warm.reset();

    // Smaller v sharpens the density, so edges move towards the interior of
    // their interval: search two coarse cells outwards and up to sixteen
    // inwards, never past the interval midpoint. Keeps the coarse position
    // when no crossing of the right orientation exists.
    auto relocate = [&](double edge, double mid, bool rising) {
        if (edge <= lo || edge >= hi) return edge;
        const double w0 = std::max(lo, rising ? edge - 2.0 * h : std::max(mid, edge - 16.0 * h));
        const double w1 = std::min(hi, rising ? std::min(mid, edge + 16.0 * h) : edge + 2.0 * h);
        if (!(w1 > w0)) return edge;
        const VectorXd fine = VectorXd::LinSpaced(18 * kSub + 1, w0, w1);
        const auto pts = points_at(std::span<const double>(fine.data(), static_cast<std::size_t>(fine.size())), v_refine);
        const auto sols = system.solve_grid(pts, o);
        VectorXd y(fine.size());
        for (Index k = 0; k < fine.size(); ++k)
            y(k) = sols[static_cast<std::size_t>(k)].m_n.imag() / std::numbers::pi -
                   cauchy(profile.lsd_atom, fine(k), v_refine);
        double best = edge;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Index k = 0; k + 1 < fine.size(); ++k) {
            const bool up = y(k) <= thr && y(k + 1) > thr;
            const bool down = y(k) > thr && y(k + 1) <= thr;
            if ((rising && !up) || (!rising && !down)) continue;
            const double c = crossing(fine(k), y(k), fine(k + 1), y(k + 1), thr);
            if (std::abs(c - edge) < best_dist) {
                best = c;
                best_dist = std::abs(c - edge);
            }
        }
        return best;
    };

    std::vector<Interval> refined;
    refined.reserve(coarse.intervals.size());
    for (const auto& iv : coarse.intervals) {
        const double mid = 0.5 * (iv.a + iv.b);
        refined.push_back({relocate(iv.a, mid, true), relocate(iv.b, mid, false)});
    }
    for (auto& iv : refined)
        if (iv.b < iv.a) std::swap(iv.a, iv.b);
    std::sort(refined.begin(), refined.end(), [](const Interval& l, const Interval& r) { return l.a < r.a; });
    merge_narrow_gaps(refined, 0.0);
    return finish(std::move(refined), thr, v_refine);
}

SupportSet compute_support(const FixedPointSystem& system, std::span<const double> grid, double v, double threshold,
                           const SolverOptions& opts) {
    const auto prof = density(system, grid, v, false, opts);
    const auto coarse = detect_support(prof, threshold);
    return refine_support_edges(system, prof, coarse, 1e-5, opts);
}

VectorXd lsd_cdf(const DensityProfile& profile) {
    const Index m = profile.size();
    VectorXd cdf(m);
    double acc = profile.grid.size() > 0 && profile.grid(0) >= 0.0 ? profile.lsd_atom : 0.0;
    for (Index k = 0; k < m; ++k) {
        if (k > 0) {
            const double h = profile.grid(k) - profile.grid(k - 1);
            acc += 0.5 * h * (profile.lsd(k) + profile.lsd(k - 1));
            if (profile.grid(k - 1) < 0.0 && profile.grid(k) >= 0.0) acc += profile.lsd_atom;
        }
        cdf(k) = acc;
    }
    return cdf;
}

double interpolate_cdf(const DensityProfile& profile, const VectorXd& cdf, double x) {
    const VectorXd& g = profile.grid;
    const Index m = g.size();
    if (m == 0) return 0.0;
    if (x < g(0)) return 0.0;
    if (x >= g(m - 1)) return cdf(m - 1);
    const auto it = std::upper_bound(g.data(), g.data() + m, x);
    const Index k = static_cast<Index>(it - g.data());
    const double t = (x - g(k - 1)) / (g(k) - g(k - 1));
    return cdf(k - 1) + t * (cdf(k) - cdf(k - 1));
}

InclusionReport check_support_inclusion(const DensityProfile& profile, const SupportSet& support, double threshold) {
    if (!profile.has_measures()) throw PreconditionError("support inclusion needs a profile with per-measure densities");
    InclusionReport rep;
    rep.threshold = threshold;
    const VectorXd& x = profile.grid;
    const Index m = x.size();
    auto step_at = [&](Index k) {
        double s = 0.0;
        if (k > 0) s = std::max(s, x(k) - x(k - 1));
        if (k + 1 < m) s = std::max(s, x(k + 1) - x(k));
        return s;
    };
    auto scan = [&](const MatrixXd& dens, const char* name) {
        for (Index j = 0; j < dens.rows(); ++j) {
            for (Index k = 0; k < m; ++k) {
                if (!(dens(j, k) > threshold)) continue;
                ++rep.checked;
                if (!support.contains(x(k), step_at(k))) rep.violations.push_back({name, j, x(k), dens(j, k)});
            }
        }
    };
    scan(*profile.mu, "mu");
    scan(*profile.mu_tilde, "mu_tilde");
    return rep;
}

EdgeGapReport edge_gap_condition(const FixedPointSystem& system, const Interval& interval, Index points,
                                 const SupportSet& support, const SolverOptions& opts) {
    if (!(interval.a > 0.0) || !(interval.b > interval.a))
        throw PreconditionError("edge-gap interval needs 0 < a < b");
    if (points < 2) throw InvalidArgument("edge-gap check needs at least two points");
    if (support.overlaps(interval)) {
        std::ostringstream msg;
        msg << "interval [" << interval.a << ", " << interval.b << "] overlaps the detected support";
        throw PreconditionError(msg.str());
    }
    SolverOptions o = opts;
    o.full_matrices = false;

    EdgeGapReport rep;
    rep.interval = interval;
    rep.points = points;
    rep.min_abs_delta_tilde = std::numeric_limits<double>::infinity();
    rep.min_abs_one_plus_delta = std::numeric_limits<double>::infinity();
    std::optional<WarmStart> warm;
    for (Index k = 0; k < points; ++k) {
        const double x = interval.a + (interval.b - interval.a) * static_cast<double>(k) / static_cast<double>(points - 1);
        const SpectralPoint pt(x, FixedPointSystem::kContinuationFloor);
        std::optional<Solution> sol;
        if (warm) {
            o.warm = warm;
            try {
                sol = system.solve(pt, o);
            } catch (const NonConvergenceError&) {
            } catch (const NumericalDomainError&) {
            }
        }
        if (!sol) {
            o.warm.reset();
            try {
                sol = system.solve(pt, o);
            } catch (const NonConvergenceError&) {
            } catch (const NumericalDomainError&) {
            }
        }
        if (!sol) {
            rep.inconclusive.push_back(x);
            warm.reset();
            continue;
        }
        warm = sol->warm_start();
        const double dt = sol->delta_tilde.cwiseAbs().minCoeff();
        const double d1 = (sol->delta.array() + 1.0).abs().minCoeff();
        if (dt < rep.min_abs_delta_tilde) {
            rep.min_abs_delta_tilde = dt;
            rep.argmin_delta_tilde = x;
        }
        if (d1 < rep.min_abs_one_plus_delta) {
            rep.min_abs_one_plus_delta = d1;
            rep.argmin_one_plus_delta = x;
        }
    }
    return rep;
}

} // namespace specden
