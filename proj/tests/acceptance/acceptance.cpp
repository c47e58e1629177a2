// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "specden/error.hpp"
#include "specden/fixedpoint.hpp"
#include "specden/linalg.hpp"
#include "specden/mimo.hpp"
#include "specden/model_io.hpp"
#include "specden/montecarlo.hpp"
#include "specden/parallel.hpp"
#include "specden/spectrum.hpp"

using namespace specden;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Largest gap strictly between two support intervals.
std::optional<Interval> largest_inner_gap(const SupportSet& s) {
    std::optional<Interval> best;
    for (std::size_t k = 1; k < s.intervals.size(); ++k) {
        const Interval g{s.intervals[k - 1].b, s.intervals[k].a};
        if (!best || g.b - g.a > best->b - best->a) best = g;
    }
    return best;
}

double mp_stieltjes_negative(double c, double s) {
    // c z m^2 - (1 - c - z) m + 1 = 0 at z = -s, the root with m > 0
    const double z = -s;
    const double b = -(1.0 - c - z);
    const double disc = std::sqrt(b * b - 4.0 * c * z);
    return std::max((-b + disc) / (2.0 * c * z), (-b - disc) / (2.0 * c * z));
}

Outcome mp_degeneration() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec m = make_marchenko_pastur(200, 200);
    const Solution s = solve(m, SpectralPoint(-1.0, 0.0));
    const double secs = since(t0);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    const double err = std::abs(s.m_n - cplx(golden, 0.0));
    const double oracle_err = std::abs(mp_stieltjes_negative(1.0, 1.0) - golden);
    return {err <= 1e-6 && oracle_err <= 1e-12 && secs < 5.0,
            fmt("|m_n - (sqrt5-1)/2| = %.3g (tol 1e-6), %.2f s (limit 5 s)", err, secs)};
}

Outcome esd_vs_lsd() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec m = make_figure_setup(FigureSetup::Fig2, 1);
    const auto dist = ElementDistribution::complex_gaussian();
    const EnsembleSample first = sample(m, dist, 1);
    const auto grid = to_vec(linear_grid(0.0, 1.3 * first.eigenvalues(0), 4000));
    const DensityProfile prof = density(FixedPointSystem(m), grid, 1e-4, false);
    const VectorXd cdf = lsd_cdf(prof);
    const double one = ks_distance(first.eigenvalues, prof, cdf);
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) sum += ks_distance(sample(m, dist, seed).eigenvalues, prof, cdf);
    const double mean = sum / 20.0;
    const double secs = since(t0);
    return {one <= 0.05 && mean <= 0.04 && secs < 600.0,
            fmt("KS one draw %.4f (tol 0.05), mean over 20 seeds %.4f (tol 0.04), %.1f s (limit 600 s)", one, mean,
                secs)};
}

Outcome support_inclusion() {
    const auto t0 = std::chrono::steady_clock::now();
    const FixedPointSystem sys(make_figure_setup(FigureSetup::Fig3, 0));
    const auto grid = to_vec(linear_grid(0.0, 8.0, 1600));
    const DensityProfile prof = density(sys, grid, 1e-4, true);
    const SupportSet s = refine_support_edges(sys, prof, detect_support(prof, 1e-3));
    const InclusionReport r = check_support_inclusion(prof, s, 1e-3);
    const double secs = since(t0);
    return {r.ok() && r.checked > 0 && secs < 120.0,
            fmt("%zu violations over %zu points above 1e-3 (tol 0), %zu support intervals, %.1f s (limit 120 s)",
                r.violations.size(), r.checked, s.intervals.size(), secs)};
}

Outcome no_eigenvalues_outside_support() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec m = make_figure_setup(FigureSetup::Fig4, 0);
    const FixedPointSystem sys(m);
    const auto grid = to_vec(linear_grid(0.0, 8.0, 2000));
    const DensityProfile prof = density(sys, grid, 1e-4, false);
    const SupportSet s = refine_support_edges(sys, prof, detect_support(prof, 1e-3));
    const auto gap = largest_inner_gap(s);
    if (!gap) return {false, fmt("no gap between support intervals (%zu intervals)", s.intervals.size())};
    const double w = gap->b - gap->a;
    const Interval probe{gap->a + 0.1 * w, gap->b - 0.1 * w};
    const auto dist = ElementDistribution::uniform_real();

    auto widest = *std::max_element(s.intervals.begin(), s.intervals.end(),
                                    [](const Interval& x, const Interval& y) { return x.b - x.a < y.b - y.a; });
    const double bw = widest.b - widest.a;
    const Interval bulk{widest.a + 0.25 * bw, widest.b - 0.25 * bw};
    const TrialReport inside = count_escapes(m, dist, bulk, 100, 7);

    int escapes = -1;
    std::string note;
    try {
        const EdgeGapReport eg = edge_gap_condition(sys, probe, 100, s);
        const TrialReport r = no_eigenvalue_trial(m, dist, probe, 100, 7, s, eg);
        escapes = r.escapes;
        int total = std::accumulate(r.escape_counts.begin(), r.escape_counts.end(), 0);
        note = fmt(", %d eigenvalues in total, edge-gap min %.3g", total, eg.minimum());
    } catch (const PreconditionError& e) {
        note = std::string(", refused: ") + e.what();
    }
    const double secs = since(t0);
    return {escapes == 0 && inside.escapes == 100 && secs < 600.0,
            fmt("probe [%.4f, %.4f] escapes %d/100 (tol 0)%s; bulk [%.3f, %.3f] escapes %d/100 (want 100), %.1f s "
                "(limit 600 s)",
                probe.a, probe.b, escapes, note.c_str(), bulk.a, bulk.b, inside.escapes, secs)};
}

Outcome largest_eigenvalue() {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec m = make_figure_setup(FigureSetup::Fig2, 1);
    const FixedPointSystem sys(m);
    const double reach = 1.5 * sample(m, ElementDistribution::complex_gaussian(), 99).eigenvalues(0);
    const auto grid = to_vec(linear_grid(0.0, reach, 2000));
    const SupportSet s = compute_support(sys, grid);
    const LargestEigenvalueSummary r =
        largest_eigenvalue_stat(m, ElementDistribution::complex_gaussian(), 50, 5, s.right_endpoint);
    const double secs = since(t0);
    return {s.right_endpoint > 0.0 && r.max <= 1.05 * s.right_endpoint && secs < 600.0,
            fmt("max lambda_max %.4f vs 1.05 e+ = %.4f (e+ = %.4f), %.1f s (limit 600 s)", r.max,
                1.05 * s.right_endpoint, s.right_endpoint, secs)};
}

Outcome resolvent_equivalents() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::string detail;
    for (FigureSetup which : {FigureSetup::Fig2, FigureSetup::Fig4}) {
        const auto dist =
            which == FigureSetup::Fig4 ? ElementDistribution::uniform_real() : ElementDistribution::complex_gaussian();
        const FigureDims base = default_dims(which);
        double gaps[2][2];
        for (int scale = 0; scale < 2; ++scale) {
            const FigureDims d{base.p << scale, base.n << scale};
            const ModelSpec m = make_figure_setup(which, 1, d);
            VectorXcd e1 = VectorXcd::Zero(d.p);
            e1(0) = 1.0;
            const ResolventFunctional fs[2] = {ResolventFunctional::trace(MatrixXcd::Identity(d.p, d.p)),
                                               ResolventFunctional::bilinear(e1, e1)};
            for (int k = 0; k < 2; ++k) {
                const auto r = resolvent_convergence_trial(m, dist, SpectralPoint(-1.0, 0.0), fs[k], 200, 11);
                gaps[k][scale] = r.mean_abs_gap;
                if (scale == 0) {
                    pass = pass && r.z_score <= 3.0;
                    detail += fmt("%s %s z %.2f; ", figure_setup_name(which).c_str(), k ? "bilinear" : "trace",
                                  r.z_score);
                }
            }
        }
        for (int k = 0; k < 2; ++k) {
            pass = pass && gaps[k][1] < gaps[k][0];
            detail += fmt("%s %s gap %.3g -> %.3g at 2p; ", figure_setup_name(which).c_str(),
                          k ? "bilinear" : "trace", gaps[k][0], gaps[k][1]);
        }
    }
    return {pass, detail + fmt("(tol z <= 3, gap decreasing), %.1f s", since(t0))};
}

Outcome sinr_agreement() {
    const auto t0 = std::chrono::steady_clock::now();
    const RicianChannelSpec chan = make_fig5_channel();
    const std::vector<double> snr = {0.0, 4.0, 8.0, 12.0, 16.0, 20.0};
    const auto pts = sinr_sweep(chan, snr, 1000, 1);
    double worst = 0.0;
    bool monotone = true;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        worst = std::max(worst, std::abs(pts[k].asymptotic - pts[k].mc_mean) / pts[k].mc_se);
        // SNR increasing means sigma2 decreasing
        if (k > 0) monotone = monotone && pts[k].asymptotic > pts[k - 1].asymptotic;
    }
    const double secs = since(t0);
    return {worst <= 3.0 && monotone && secs < 1200.0,
            fmt("max |asym - MC|/SE %.2f over 6 SNR points (tol 3), monotone in sigma2: %s, SINR %.3f..%.3f, %.1f s "
                "(limit 1200 s)",
                worst, monotone ? "yes" : "no", pts.front().asymptotic, pts.back().asymptotic, secs)};
}

Outcome zf_floor() {
    RayleighChannelSpec chan;
    chan.p = 100;
    for (int j = 0; j < 200; ++j) chan.c.push_back(MatrixXcd::Identity(100, 100));
    const ZfReport r = zf_min_eig_check(chan, ElementDistribution::complex_gaussian(), 100, 1);
    const double floor = (1.0 - std::sqrt(0.5)) * (1.0 - std::sqrt(0.5));
    return {r.min_over_trials >= floor - 0.03 && r.min_over_trials > 0.0,
            fmt("min lambda_min %.4f vs (1-sqrt(0.5))^2 - 0.03 = %.4f, support left edge %.4f", r.min_over_trials,
                floor - 0.03, r.analytic_floor_estimate)};
}

// Checks every invariant on one model; returns the failures.
std::vector<std::string> invariants(const std::string& name, const ModelSpec& m) {
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(name + ": " + what);
    };
    const FixedPointSystem sys(m);
    const Index p = m.p();

    for (cplx z : {cplx(0.3, 0.05), cplx(1.0, 1e-3), cplx(3.0, 0.2), cplx(-2.0, 1.0)}) {
        const Solution s = sys.solve(SpectralPoint(z));
        expect(s.delta.imag().minCoeff() > 0.0, fmt("Im delta <= 0 at z = %g%+gi", z.real(), z.imag()));
        expect(s.delta_tilde.imag().minCoeff() > 0.0, fmt("Im delta_tilde <= 0 at z = %g%+gi", z.real(), z.imag()));
        const MatrixXcd im_theta = (s.theta - s.theta.adjoint()) / cplx(0.0, 2.0);
        const double lo = hermitian_eigenvalues(im_theta).minCoeff();
        expect(lo > -1e-10 * std::max(1.0, spectral_norm(im_theta)),
               fmt("Im Theta not PSD at z = %g%+gi (%.3g)", z.real(), z.imag(), lo));
        const auto [d, dt] = sys.apply_map(std::conj(z), s.delta.conjugate(), s.delta_tilde.conjugate());
        const double sym = std::max((d - s.delta.conjugate()).cwiseAbs().maxCoeff(),
                                    (dt - s.delta_tilde.conjugate()).cwiseAbs().maxCoeff());
        expect(sym < 1e-8, fmt("conjugate symmetry off by %.3g", sym));
    }

    double previous = std::numeric_limits<double>::infinity();
    for (double y : {1e3, 1e4, 1e5}) {
        const Solution s = sys.solve(SpectralPoint(0.0, y));
        const double r = spectral_norm(cplx(0.0, -y) * s.theta - MatrixXcd::Identity(p, p));
        expect(r <= 10.0 / y, fmt("normalization %.3g > 10/y at y = %g", r, y));
        expect(r < previous, fmt("normalization not decreasing at y = %g", y));
        previous = r;
    }

    {
        const double z = -1e6;
        const Solution s = sys.solve(SpectralPoint(z, 0.0));
        expect(std::abs(-z * s.m_n - 1.0) <= 1e-3, "lsd mass");
        double worst = 0.0;
        for (Index j = 0; j < m.n(); ++j) {
            const double mass = m.correlations().trace(j) / static_cast<double>(m.n());
            worst = std::max(worst, std::abs(-z * s.delta(j) - mass) / mass);
            worst = std::max(worst, std::abs(-z * s.delta_tilde(j) - 1.0));
        }
        expect(worst <= 1e-3, fmt("measure masses off by %.3g relative", worst));
    }

    {
        std::srand(5);
        const MatrixXcd u =
            Eigen::HouseholderQR<MatrixXcd>(MatrixXcd::Random(p, p)).householderQ() * MatrixXcd::Identity(p, p);
        const CorrelationSet& cs = m.correlations();
        std::optional<ModelSpec> rotated;
        if (cs.is_jointly_diagonal()) {
            const MatrixXcd basis = cs.basis() ? MatrixXcd(u * *cs.basis()) : u;
            rotated.emplace(u * m.mean(), CorrelationSet::jointly_diagonal(cs.spectra(), basis));
        } else {
            std::vector<MatrixXcd> mats;
            for (Index j = 0; j < m.n(); ++j) mats.push_back(u * cs.matrix(j) * u.adjoint());
            rotated.emplace(u * m.mean(), CorrelationSet::general(std::move(mats)));
        }
        SolverOptions tight;
        tight.tol = 1e-13;
        const double hi = 1.2 * hermitian_eigenvalues(m.mean() * m.mean().adjoint()).maxCoeff() + 8.0;
        const auto grid = to_vec(linear_grid(0.05, hi, 40));
        const DensityProfile a = density(sys, grid, 1e-3, false, tight);
        const DensityProfile b = density(*rotated, grid, 1e-3, false, tight);
        const double diff = (a.lsd - b.lsd).cwiseAbs().maxCoeff();
        expect(diff <= 1e-8, fmt("rotation changes the lsd by %.3g", diff));
    }

    {
        const double hi = 1.2 * hermitian_eigenvalues(m.mean() * m.mean().adjoint()).maxCoeff() + 8.0;
        const auto grid = to_vec(linear_grid(0.0, hi, 800));
        const DensityProfile prof = density(sys, grid, 1e-4, false);
        const double step = grid[1] - grid[0];
        SupportSet prev = detect_support(prof, 1e-4);
        for (double t : {1e-3, 1e-2, 5e-2, 1e-1}) {
            const SupportSet s = detect_support(prof, t);
            for (const auto& iv : s.intervals) {
                bool inside = false;
                for (const auto& ov : prev.intervals)
                    inside = inside || (iv.a >= ov.a - 2.0 * step && iv.b <= ov.b + 2.0 * step);
                expect(inside, fmt("support at threshold %g not nested", t));
            }
            prev = s;
        }
    }
    return bad;
}

Outcome invariant_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> bad;
    int models = 0;
    const std::vector<std::pair<std::string, std::map<std::string, double>>> presets = {
        {"marchenko-pastur", {{"p", 200}, {"n", 400}}}, {"fig2", {}}, {"fig3", {}}, {"fig4", {}}, {"fig5", {}}};
    for (const auto& [name, params] : presets) {
        try {
            const auto found = invariants(name, build_constructor(name, params, 1));
            bad.insert(bad.end(), found.begin(), found.end());
        } catch (const std::exception& e) {
            bad.push_back(name + ": " + e.what());
        }
        ++models;
    }
    std::string detail = fmt("%d presets, %zu failures, %.1f s", models, bad.size(), since(t0));
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 5); ++k) detail += "; " + bad[k];
    return {bad.empty(), detail};
}

} // namespace

// Optional arguments pick criteria by number; none runs all nine.
int main(int argc, char** argv) {
    set_thread_count(std::max(1u, std::thread::hardware_concurrency()));
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"MP degeneration", mp_degeneration},
        {"fig2 ESD vs LSD", esd_vs_lsd},
        {"fig3 support inclusion", support_inclusion},
        {"fig4 no eigenvalues outside the support", no_eigenvalues_outside_support},
        {"fig2 largest eigenvalue", largest_eigenvalue},
        {"resolvent equivalents", resolvent_equivalents},
        {"fig5 SINR agreement", sinr_agreement},
        {"ZF smallest eigenvalue", zf_floor},
        {"invariant suite", invariant_suite},
    };
    std::vector<std::size_t> picked;
    for (int a = 1; a < argc; ++a) {
        const long k = std::strtol(argv[a], nullptr, 10);
        if (k < 1 || k > static_cast<long>(criteria.size())) {
            std::fprintf(stderr, "unknown criterion '%s'\n", argv[a]);
            return 2;
        }
        picked.push_back(static_cast<std::size_t>(k - 1));
    }
    if (picked.empty())
        for (std::size_t k = 0; k < criteria.size(); ++k) picked.push_back(k);
    int failed = 0;
    for (const std::size_t k : picked) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(picked.size()) - failed, picked.size());
    return failed == 0 ? 0 : 1;
}
