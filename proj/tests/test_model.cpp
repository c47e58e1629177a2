#include <doctest.h>

#include <cmath>
#include <numbers>

#include "specden/error.hpp"
#include "specden/linalg.hpp"
#include "specden/model.hpp"

using namespace specden;

namespace {

MatrixXcd random_unitary(Index p, unsigned seed) {
    std::srand(seed);
    const MatrixXcd g = MatrixXcd::Random(p, p);
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    return qr.householderQ() * MatrixXcd::Identity(p, p);
}

} // namespace

TEST_CASE("marchenko-pastur model") {
    const ModelSpec m = make_marchenko_pastur(2, 4);
    CHECK(m.p() == 2);
    CHECK(m.n() == 4);
    CHECK(m.mean().isZero());
    for (Index j = 0; j < 4; ++j) {
        CHECK(m.correlations().matrix(j).isApprox(MatrixXcd::Identity(2, 2)));
        CHECK(m.factor(j).isApprox(MatrixXcd::Identity(2, 2)));
        CHECK(m.inner_dim(j) == 2);
    }
    const AssumptionReport r = validate(make_marchenko_pastur(100, 400));
    CHECK(r.ok());
    CHECK(r.ratio_p_n == doctest::Approx(0.25));
    CHECK_THROWS_AS(make_marchenko_pastur(0, 3), InvalidArgument);
}

TEST_CASE("fig2 setup") {
    const ModelSpec m = make_figure_setup(FigureSetup::Fig2, 3);
    CHECK(m.p() == 200);
    CHECK(m.n() == 400);
    const cplx a22 = -2.0 * std::exp(cplx(0.0, -0.6 * std::numbers::pi));
    CHECK(std::abs(m.mean()(0, 0) - 2.0) < 1e-15);
    CHECK(std::abs(m.mean()(1, 1) - a22) < 1e-15);
    CHECK((m.mean().array() != cplx(0.0)).count() == 2);
    const MatrixXd& s = m.correlations().spectra();
    CHECK(s.topRows(100).isOnes());
    // 8 + (n + j)/(2n) z^2 >= 8 with the weight in (1/2, 1]
    CHECK(s.bottomRows(100).minCoeff() >= 8.0);
    CHECK(m.correlations().is_jointly_diagonal());

    const ModelSpec again = make_figure_setup(FigureSetup::Fig2, 3);
    const ModelSpec other = make_figure_setup(FigureSetup::Fig2, 4);
    CHECK(again.correlations().spectra() == s);
    CHECK(other.correlations().spectra() != s);
}

TEST_CASE("fig3 setup masks the outer columns") {
    const ModelSpec m = make_figure_setup(FigureSetup::Fig3, 0);
    CHECK(m.p() == 6);
    CHECK(m.n() == 20);
    const MatrixXd& s = m.correlations().spectra();
    for (Index j = 0; j < 5; ++j) {
        CHECK(s.col(j).tail(3).isZero());
        CHECK(s.col(j).head(3).minCoeff() > 1.0);
    }
    for (Index j = 15; j < 20; ++j) {
        CHECK(s.col(j).head(3).isZero());
        CHECK(s.col(j).tail(3).minCoeff() > 1.0);
    }
    // unmasked entries 1 + (i + j)/(p + n), 1-based
    CHECK(s(2, 9) == doctest::Approx(1.0 + 13.0 / 26.0));
    CHECK(std::abs(m.mean()(1, 1) - std::exp(cplx(0.0, 0.4 * std::numbers::pi))) < 1e-15);
}

TEST_CASE("fig4 setup") {
    const ModelSpec m = make_figure_setup(FigureSetup::Fig4, 0);
    CHECK((m.mean().array() != cplx(0.0)).count() == 2);
    CHECK(std::abs(m.mean()(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(m.mean()(1, 1) - 1.5 * std::exp(cplx(0.0, -0.2 * std::numbers::pi))) < 1e-15);
    CHECK(m.correlations().spectra()(0, 0) == doctest::Approx(1.0 + 2.0 / 600.0));
    CHECK_THROWS_AS(parse_figure_setup("fig9"), InvalidArgument);
}

TEST_CASE("figure setups scale to other dimensions") {
    const ModelSpec m = make_figure_setup(FigureSetup::Fig2, 1, FigureDims{20, 40});
    CHECK(m.p() == 20);
    CHECK(m.correlations().spectra().topRows(10).isOnes());
    CHECK_THROWS_AS(make_figure_setup(FigureSetup::Fig2, 1, FigureDims{21, 40}), InvalidArgument);
}

TEST_CASE("correlation sets enforce Hermitian PSD input") {
    MatrixXcd bad(2, 2);
    bad << 1.0, cplx(0.0, 1.0), 0.0, 1.0;
    CHECK_THROWS_AS(CorrelationSet::general({bad}), StructuralError);
    MatrixXcd neg(2, 2);
    neg << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(CorrelationSet::general({neg}), StructuralError);
    MatrixXd spectra(2, 1);
    spectra << 1.0, -0.5;
    CHECK_THROWS_AS(CorrelationSet::jointly_diagonal(spectra), StructuralError);
    CHECK_THROWS_AS(CorrelationSet::jointly_diagonal(MatrixXd::Ones(2, 1), MatrixXcd::Ones(2, 2)), StructuralError);
}

TEST_CASE("model structure is checked") {
    const auto ones = CorrelationSet::jointly_diagonal(MatrixXd::Ones(3, 2));
    CHECK_THROWS_AS(ModelSpec(MatrixXcd::Zero(3, 3), ones), StructuralError);
    CHECK_THROWS_AS(ModelSpec(MatrixXcd::Zero(2, 2), ones), StructuralError);
    MatrixXcd nan = MatrixXcd::Zero(3, 2);
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(ModelSpec(nan, ones), StructuralError);

    // factors must reproduce Omega_j; d_j may differ from p
    MatrixXcd b(3, 1);
    b << 1.0, 0.0, 0.0;
    MatrixXcd omega = b * b.adjoint();
    const ModelSpec ok(MatrixXcd::Zero(3, 1), CorrelationSet::general({omega}), std::vector<MatrixXcd>{b});
    CHECK(ok.inner_dim(0) == 1);
    CHECK_THROWS_AS(ModelSpec(MatrixXcd::Zero(3, 1), CorrelationSet::general({omega}),
                              std::vector<MatrixXcd>{2.0 * b}),
                    StructuralError);
}

TEST_CASE("derived factors are Hermitian square roots") {
    const MatrixXcd u = random_unitary(4, 7);
    VectorXd lam(4);
    lam << 3.0, 1.0, 0.5, 0.0;
    const MatrixXcd omega = u * lam.cast<cplx>().asDiagonal() * u.adjoint();
    const ModelSpec m(MatrixXcd::Zero(4, 1), CorrelationSet::general({omega}));
    const MatrixXcd b = m.factor(0);
    CHECK((b * b.adjoint() - omega).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(hermitian_defect(b) < 1e-12);
}

TEST_CASE("jointly diagonal and general storage agree") {
    const MatrixXcd u = random_unitary(3, 11);
    MatrixXd spectra(3, 2);
    spectra << 1.0, 2.0, 0.5, 1.0, 3.0, 0.1;
    const auto diag = CorrelationSet::jointly_diagonal(spectra, u);
    std::vector<MatrixXcd> mats;
    for (Index j = 0; j < 2; ++j) mats.push_back(u * spectra.col(j).cast<cplx>().asDiagonal() * u.adjoint());
    const auto gen = CorrelationSet::general(mats);
    for (Index j = 0; j < 2; ++j) {
        CHECK((diag.matrix(j) - gen.matrix(j)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(diag.trace(j) == doctest::Approx(gen.trace(j)));
        CHECK(diag.max_eigenvalue(j) == doctest::Approx(gen.max_eigenvalue(j)));
    }
}

TEST_CASE("validate reports breached ranges") {
    const ModelSpec m = make_marchenko_pastur(2, 400);
    const AssumptionReport r = validate(m);
    REQUIRE_FALSE(r.ok());
    CHECK(r.violations.front().assumption == 1);

    AdmissibleRanges tight;
    tight.max_mean_norm = 1.0;
    const AssumptionReport r4 = validate(make_figure_setup(FigureSetup::Fig4, 0), tight);
    REQUIRE(r4.violations.size() == 1);
    CHECK(r4.violations[0].assumption == 4);
    CHECK(r4.mean_norm == doctest::Approx(1.5));
}

TEST_CASE("variance profile") {
    const ModelSpec m = make_variance_profile([](double x, double y) { return 1.0 + x * y; },
                                              [](double x) { return x; }, 4, 3);
    CHECK(m.correlations().spectra()(3, 2) == doctest::Approx(2.0));
    CHECK(m.mean()(1, 1) == cplx(0.5));
    CHECK(m.mean()(3, 0) == cplx(0.0));
    CHECK_THROWS_AS(make_variance_profile([](double, double) { return 0.0; }, [](double) { return 0.0; }, 2, 2),
                    InvalidArgument);
}
