#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <json.hpp>

#include "specden/error.hpp"
#include "specden/fixedpoint.hpp"
#include "specden/model_io.hpp"
#include "specden/report_io.hpp"

using namespace specden;
using nlohmann::json;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_model(text);
    } catch (const StructuralError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("explicit model documents") {
    const ModelSpec m = parse_model(R"({
      "p": 2, "n": 2,
      "mean": [[[1, 0], [0, 0]], [[0, 0], [0, 2]]],
      "correlations": [[[[2, 0], [0, 1]], [[0, -1], [1, 0]]], [[[1, 0], 0], [0, 1]]]
    })");
    CHECK(m.p() == 2);
    CHECK(m.mean()(1, 1) == cplx(0.0, 2.0));
    CHECK(m.correlations().matrix(0)(0, 1) == cplx(0.0, 1.0));
    CHECK_FALSE(m.correlations().is_jointly_diagonal());

    const ModelSpec d = parse_model(R"({"p": 2, "n": 3, "correlations": {"diagonal": [[1, 2], [3, 4], [5, 6]]}})");
    CHECK(d.correlations().is_jointly_diagonal());
    CHECK(d.correlations().spectra()(1, 2) == 6.0);
}

TEST_CASE("parse errors name the offending place") {
    CHECK(error_of("{\"p\": 2,\n  \"n\": }").find("line 2, column 8") != std::string::npos);
    CHECK(error_of(R"({"p": 2, "n": 1, "correlations": [[[1, 0], [0, 1]]], "extra": 1})").find("extra") !=
          std::string::npos);
    CHECK(error_of(R"({"p": 2, "n": 1, "correlations": [[[1, 0], [0, "x"]]]})").find("correlations[0][1][1]") !=
          std::string::npos);
    CHECK(error_of(R"({"p": 2, "n": 2, "correlations": [[[1, 0], [0, 1]]]})").find("correlations") !=
          std::string::npos);
    CHECK(error_of(R"({"p": 2, "correlations": []})").find("n: missing") != std::string::npos);
    CHECK(error_of(R"({"constructor": {"name": "fig4", "params": {"q": 1}}})").find("unknown parameter 'q'") !=
          std::string::npos);
    CHECK(error_of(R"({"constructor": {"name": "fig7"}})").find("unknown constructor") != std::string::npos);
    CHECK(error_of(R"({"constructor": {"name": "marchenko-pastur", "params": {"p": 2.5, "n": 3}}})")
              .find("positive integer") != std::string::npos);
    CHECK(error_of(R"({"p": 2, "n": 1, "correlations": [[[1, 0], [5, 1]]]})").find("Hermitian") !=
          std::string::npos);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), StructuralError);
}

TEST_CASE("constructor documents rebuild the named model") {
    const ModelSpec m = parse_model(R"({"constructor": {"name": "fig2", "params": {"p": 20, "n": 40}}, "seed": 9})");
    const ModelSpec ref = make_figure_setup(FigureSetup::Fig2, 9, FigureDims{20, 40});
    CHECK(m.correlations().spectra() == ref.correlations().spectra());
    CHECK(m.mean() == ref.mean());

    const json doc = json::parse(model_to_json(m));
    CHECK(doc["constructor"]["name"] == "fig2");
    CHECK(doc["seed"] == 9);

    const ModelSpec f5 = build_constructor("fig5", {{"p", 8}, {"n", 4}}, std::nullopt);
    CHECK(f5.p() == 8);
    CHECK(f5.n() == 4);
    CHECK(json::parse(model_to_json(f5))["constructor"]["params"]["tau"] == 1);
}

TEST_CASE("explicit serialization round-trips exactly") {
    const ModelSpec m = make_figure_setup(FigureSetup::Fig3, 0);
    const ModelSpec back = parse_model(model_to_json(m, true));
    CHECK(back.mean() == m.mean());
    CHECK(back.correlations().spectra() == m.correlations().spectra());
    const Solution a = solve(m, SpectralPoint(1.0, 0.5));
    const Solution b = solve(back, SpectralPoint(1.0, 0.5));
    CHECK(a.m_n == b.m_n);

    MatrixXcd bf(2, 1);
    bf << cplx(1.0, 0.5), 0.3;
    const ModelSpec general(MatrixXcd::Zero(2, 1), CorrelationSet::general({bf * bf.adjoint()}),
                            std::vector<MatrixXcd>{bf});
    const ModelSpec gback = parse_model(model_to_json(general));
    REQUIRE(gback.factors());
    CHECK((*gback.factors())[0] == bf);
    CHECK(gback.inner_dim(0) == 1);
}

TEST_CASE("seventeen significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(std::numbers::pi)) == std::numbers::pi);
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("density csv layout") {
    DensityProfile prof;
    prof.grid = VectorXd::LinSpaced(3, 0.0, 1.0);
    prof.lsd = VectorXd::Constant(3, 0.25);
    prof.mu = MatrixXd::Constant(2, 3, 0.5);
    prof.mu_tilde = MatrixXd::Constant(2, 3, 0.75);
    const std::string csv = density_csv(prof, {1});
    CHECK(csv.substr(0, csv.find('\n')) == "x,lsd,mu_2,mu_tilde_2");
    CHECK(csv.find("0.5,0.25,0.5,0.75") != std::string::npos);
    CHECK_THROWS_AS(density_csv(prof, {2}), InvalidArgument);
    prof.mu.reset();
    CHECK_THROWS_AS(density_csv(prof, {0}), InvalidArgument);
    CHECK(density_csv(prof, {}).substr(0, 6) == "x,lsd\n");
}

TEST_CASE("reports are valid JSON with nulls for non-finite values") {
    ResolventTrialResult r;
    r.trials = 2;
    r.mc_se = std::numeric_limits<double>::infinity();
    r.z_score = std::nan("");
    const json doc = json::parse(resolvent_trial_json(r));
    CHECK(doc["mc_se"].is_null());
    CHECK(doc["z_score"].is_null());
    CHECK(doc["trials"] == 2);

    SupportSet s;
    s.intervals = {{1.0, 2.0}, {3.0, 4.0}};
    s.right_endpoint = 4.0;
    const json sj = json::parse(support_json(s));
    CHECK(sj["gaps"].size() == 2);
    CHECK(sj["gaps"][1][0] == 2.0);
}
