#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "specden/error.hpp"
#include "specden/spectrum.hpp"

using namespace specden;

namespace {

double mp_density(double c, double x) {
    const double a = (1.0 - std::sqrt(c)) * (1.0 - std::sqrt(c));
    const double b = (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2.0 * std::numbers::pi * c * x);
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

DensityProfile synthetic(const std::vector<double>& x, const std::vector<double>& y) {
    DensityProfile p;
    p.grid = Eigen::Map<const VectorXd>(x.data(), static_cast<Index>(x.size()));
    p.lsd = Eigen::Map<const VectorXd>(y.data(), static_cast<Index>(y.size()));
    p.v = 1e-4;
    return p;
}

bool subset(const SupportSet& inner, const SupportSet& outer, double slack) {
    for (const auto& iv : inner.intervals) {
        bool found = false;
        for (const auto& ov : outer.intervals) found = found || (iv.a >= ov.a - slack && iv.b <= ov.b + slack);
        if (!found) return false;
    }
    return true;
}

} // namespace

TEST_CASE("MP density against the closed form") {
    const double c = 0.25;
    const ModelSpec m = make_marchenko_pastur(50, 200);
    const auto grid = to_vec(linear_grid(0.05, 3.0, 400));
    const DensityProfile prof = density(m, grid, 1e-4, false);
    double worst = 0.0;
    for (Index k = 0; k < prof.size(); ++k) {
        const double x = prof.grid(k);
        if (std::abs(x - 0.25) < 0.02 || std::abs(x - 2.25) < 0.02) continue;
        worst = std::max(worst, std::abs(prof.lsd(k) - mp_density(c, x)));
    }
    CHECK(worst < 0.02);
    CHECK(prof.lsd_atom < 1e-6);
    CHECK(lsd_cdf(prof)(prof.size() - 1) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(lsd_expectation(prof, [](double x) { return x; }) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("point masses at the origin") {
    const FixedPointSystem wide(make_marchenko_pastur(64, 32));
    const OriginMasses w = origin_masses(wide);
    CHECK(w.lsd == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(w.mu(0) == doctest::Approx(1.0).epsilon(1e-3));

    const FixedPointSystem tall(make_marchenko_pastur(32, 64));
    const OriginMasses t = origin_masses(tall);
    CHECK(t.lsd < 1e-3);
    CHECK(t.mu_tilde(0) == doctest::Approx(0.5).epsilon(1e-3));

    // the continuous part keeps mass 1 - atom
    const auto grid = to_vec(linear_grid(0.01, 6.5, 800));
    const DensityProfile prof = density(wide, grid, 1e-4, true);
    CHECK(prof.lsd_atom == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(lsd_cdf(prof)(prof.size() - 1) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("threshold crossings on a synthetic profile") {
    const DensityProfile p =
        synthetic({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 0.5, 1, 0.5, 0, 0, 0, 0, 0.4, 0.4, 0});
    const SupportSet s = detect_support(p, 0.25);
    REQUIRE(s.intervals.size() == 2);
    CHECK(s.intervals[0].a == doctest::Approx(0.5));
    CHECK(s.intervals[0].b == doctest::Approx(3.5));
    CHECK(s.intervals[1].a == doctest::Approx(7.625));
    CHECK(s.intervals[1].b == doctest::Approx(9.375));
    CHECK(s.right_endpoint == doctest::Approx(9.375));

    const SupportSet low = detect_support(p, 0.1);
    REQUIRE(low.intervals.size() == 2);
    CHECK(low.intervals[0].b == doctest::Approx(3.8));
    CHECK(low.intervals[1].a == doctest::Approx(7.25));

    // a one-sample dip narrower than two steps is merged away
    const DensityProfile dip = synthetic({0, 1, 2, 3, 4, 5, 6}, {0, 1, 1, 0, 1, 1, 0});
    CHECK(detect_support(dip, 0.5).intervals.size() == 1);
    CHECK_THROWS_AS(detect_support(p, 0.0), InvalidArgument);
}

TEST_CASE("support set geometry") {
    SupportSet s;
    s.intervals = {{1.0, 2.0}, {4.0, 5.0}};
    CHECK(s.contains(1.5));
    CHECK_FALSE(s.contains(3.0));
    CHECK(s.contains(2.05, 0.1));
    CHECK(s.overlaps({1.9, 3.0}));
    CHECK_FALSE(s.overlaps({2.1, 3.9}));
    const auto g = s.gaps();
    REQUIRE(g.size() == 2);
    CHECK(g[0].a == 0.0);
    CHECK(g[1].a == 2.0);
    CHECK(g[1].b == 4.0);
}

TEST_CASE("MP support edges after refinement") {
    const FixedPointSystem sys(make_marchenko_pastur(50, 200));
    const auto grid = to_vec(linear_grid(0.0, 3.0, 600));
    const DensityProfile prof = density(sys, grid, 1e-4, false);
    const SupportSet coarse = detect_support(prof);
    const SupportSet fine = refine_support_edges(sys, prof, coarse);
    REQUIRE(fine.intervals.size() == 1);
    CHECK(std::abs(fine.intervals[0].a - 0.25) < 0.005);
    CHECK(std::abs(fine.intervals[0].b - 2.25) < 0.005);
    CHECK(std::abs(fine.intervals[0].a - 0.25) <= std::abs(coarse.intervals[0].a - 0.25));
    CHECK(fine.v == doctest::Approx(1e-5));
}

TEST_CASE("support threshold monotonicity") {
    const FixedPointSystem sys(make_figure_setup(FigureSetup::Fig3, 0));
    const auto grid = to_vec(linear_grid(0.0, 8.0, 800));
    const DensityProfile prof = density(sys, grid, 1e-4, false);
    const double step = 8.0 / 799.0;
    SupportSet prev = detect_support(prof, 1e-4);
    for (double t : {1e-3, 1e-2, 5e-2, 1e-1}) {
        const SupportSet s = detect_support(prof, t);
        CHECK(subset(s, prev, 2.0 * step));
        prev = s;
    }
}

TEST_CASE("fig3 support and inclusion") {
    const FixedPointSystem sys(make_figure_setup(FigureSetup::Fig3, 0));
    const auto grid = to_vec(linear_grid(0.0, 8.0, 1600));
    const DensityProfile prof = density(sys, grid, 1e-4, true);
    const SupportSet s = refine_support_edges(sys, prof, detect_support(prof));
    CHECK(s.intervals.size() == 2);
    const InclusionReport r = check_support_inclusion(prof, s, 1e-3);
    CHECK(r.ok());
    CHECK(r.checked > 1000);

    // masses of the per-column measures: Tr(Omega_j)/n and 1
    const Index m = prof.size();
    for (Index j : {Index{0}, Index{10}, Index{19}}) {
        double mu = prof.mu_atom(j), mut = prof.mu_tilde_atom(j);
        for (Index k = 0; k + 1 < m; ++k) {
            const double h = prof.grid(k + 1) - prof.grid(k);
            mu += 0.5 * h * ((*prof.mu)(j, k) + (*prof.mu)(j, k + 1));
            mut += 0.5 * h * ((*prof.mu_tilde)(j, k) + (*prof.mu_tilde)(j, k + 1));
        }
        CHECK(mu == doctest::Approx(sys.model().correlations().trace(j) / 20.0).epsilon(0.02));
        CHECK(mut == doctest::Approx(1.0).epsilon(0.02));
    }

    DensityProfile corrupted = prof;
    const Index far = m - 5;
    REQUIRE_FALSE(s.contains(corrupted.grid(far), 0.1));
    (*corrupted.mu_tilde)(3, far) = 0.5;
    const InclusionReport bad = check_support_inclusion(corrupted, s, 1e-3);
    REQUIRE(bad.violations.size() == 1);
    CHECK(bad.violations[0].measure == "mu_tilde");
    CHECK(bad.violations[0].column == 3);

    DensityProfile bare = prof;
    bare.mu.reset();
    CHECK_THROWS_AS(check_support_inclusion(bare, s), PreconditionError);
}

TEST_CASE("rotation invariance of the lsd") {
    std::srand(17);
    const Index p = 8, n = 12;
    MatrixXd spectra = (MatrixXd::Random(p, n).array() + 1.2).matrix();
    const MatrixXcd mean = 0.6 * MatrixXcd::Random(p, n);
    const MatrixXcd u =
        Eigen::HouseholderQR<MatrixXcd>(MatrixXcd::Random(p, p)).householderQ() * MatrixXcd::Identity(p, p);
    const ModelSpec plain(mean, CorrelationSet::jointly_diagonal(spectra));
    std::vector<MatrixXcd> rotated_corr;
    for (Index j = 0; j < n; ++j) rotated_corr.push_back(u * plain.correlations().matrix(j) * u.adjoint());
    const ModelSpec rotated(u * mean, CorrelationSet::general(rotated_corr));
    const auto grid = to_vec(linear_grid(0.1, 6.0, 120));
    const DensityProfile a = density(plain, grid, 1e-3, false);
    const DensityProfile b = density(rotated, grid, 1e-3, false);
    CHECK((a.lsd - b.lsd).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cdf interpolation") {
    DensityProfile p = synthetic({0, 1, 2}, {0.5, 0.5, 0.5});
    p.lsd_atom = 0.0;
    const VectorXd cdf = lsd_cdf(p);
    CHECK(cdf(2) == doctest::Approx(1.0));
    CHECK(interpolate_cdf(p, cdf, -1.0) == 0.0);
    CHECK(interpolate_cdf(p, cdf, 1.5) == doctest::Approx(0.75));
    CHECK(interpolate_cdf(p, cdf, 9.0) == doctest::Approx(1.0));
}

TEST_CASE("edge-gap condition") {
    const FixedPointSystem sys(make_marchenko_pastur(50, 200));
    const auto grid = to_vec(linear_grid(0.0, 3.0, 600));
    const SupportSet s = compute_support(sys, grid);
    const EdgeGapReport r = edge_gap_condition(sys, {2.5, 4.0}, 50, s);
    CHECK(r.conclusive());
    CHECK(r.minimum() > 0.0);
    const EdgeGapReport left = edge_gap_condition(sys, {0.05, 0.2}, 20, s);
    CHECK(left.minimum() > 0.0);
    CHECK_THROWS_AS(edge_gap_condition(sys, {1.0, 4.0}, 10, s), PreconditionError);
    CHECK_THROWS_AS(edge_gap_condition(sys, {-1.0, 0.1}, 10, s), PreconditionError);
}

TEST_CASE("density input checks") {
    const ModelSpec m = make_marchenko_pastur(4, 8);
    const std::vector<double> bad = {0.0, 1.0, 0.5};
    CHECK_THROWS_AS(density(m, bad, 1e-3, false), InvalidArgument);
    const std::vector<double> ok = {0.5, 1.0};
    CHECK_THROWS_AS(density(m, ok, 0.0, false), InvalidArgument);
    CHECK_THROWS_AS(linear_grid(1.0, 1.0, 10), InvalidArgument);
}
