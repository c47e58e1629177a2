#include "specden/mimo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "specden/error.hpp"
#include "specden/parallel.hpp"
#include "specden/rng.hpp"

namespace specden {

namespace {

bool is_diagonal(const MatrixXcd& m) {
    for (Index c = 0; c < m.cols(); ++c)
        for (Index r = 0; r < m.rows(); ++r)
            if (r != c && m(r, c) != cplx(0.0)) return false;
    return true;
}

CorrelationSet correlation_set(std::vector<MatrixXcd> mats) {
    const bool diag = std::all_of(mats.begin(), mats.end(), [](const MatrixXcd& m) { return is_diagonal(m); });
    if (!diag || mats.empty()) return CorrelationSet::general(std::move(mats));
    MatrixXd spectra(mats.front().rows(), static_cast<Index>(mats.size()));
    for (std::size_t j = 0; j < mats.size(); ++j) spectra.col(static_cast<Index>(j)) = mats[j].diagonal().real();
    return CorrelationSet::jointly_diagonal(std::move(spectra));
}

void check_sigma2(double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidArgument("noise variance must be positive");
}

// Per-trial channel draw for the uplink model, reduced to what gamma_0 needs
// at any noise level: the eigenpairs of H_[0] H_[0]^H and the projections of h_0.
struct UplinkDraw {
    VectorXd eig;
    VectorXd weight; // |u_i^H h_0|^2

    double sinr(double sigma2) const { return (weight.array() / (eig.array() + sigma2)).sum(); }
};

class UplinkSampler {
public:
    explicit UplinkSampler(const RicianChannelSpec& chan) : chan_(chan) {
        chan.check();
        roots_.reserve(chan.c.size());
        for (const auto& c : chan.c) roots_.push_back(hermitian_sqrt(c));
    }

    UplinkDraw draw(std::uint64_t seed, std::uint32_t trial) const {
        const Index p = chan_.p;
        const Index n = chan_.interferers();
        const double users = static_cast<double>(std::max<Index>(n, 1));
        const double scatter = 1.0 / std::sqrt((1.0 + chan_.tau) * users);
        const double los = std::sqrt(chan_.tau / (1.0 + chan_.tau));
        const auto dist = ElementDistribution::complex_gaussian();
        auto channel = [&](Index j) {
            RandomStream rng(seed, StreamTag::Channel, trial, static_cast<std::uint32_t>(j));
            VectorXcd z(p);
            for (Index i = 0; i < p; ++i) z(i) = dist.draw(rng);
            const double gain = j == 0 ? 1.0 : std::sqrt(chan_.power(j));
            return VectorXcd(gain * scatter * (roots_[static_cast<std::size_t>(j)] * z) +
                             los * chan_.los[static_cast<std::size_t>(j)]);
        };
        const VectorXcd h0 = channel(0);
        MatrixXcd gram = MatrixXcd::Zero(p, p);
        for (Index j = 1; j <= n; ++j) {
            const VectorXcd h = channel(j);
            gram.selfadjointView<Eigen::Lower>().rankUpdate(h);
        }
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
        UplinkDraw d;
        d.eig = es.eigenvalues().cwiseMax(0.0);
        d.weight = (es.eigenvectors().adjoint() * h0).cwiseAbs2();
        return d;
    }

private:
    const RicianChannelSpec& chan_;
    std::vector<MatrixXcd> roots_;
};

std::vector<UplinkDraw> draw_uplink(const RicianChannelSpec& chan, int trials, std::uint64_t seed) {
    if (trials < 1) throw InvalidArgument("at least one trial is required");
    const UplinkSampler sampler(chan);
    std::vector<UplinkDraw> draws(static_cast<std::size_t>(trials));
    parallel_for(draws.size(), [&](std::size_t t) { draws[t] = sampler.draw(seed, static_cast<std::uint32_t>(t)); });
    return draws;
}

SinrEstimate summarize(const std::vector<UplinkDraw>& draws, double sigma2) {
    SinrEstimate e;
    e.trials = static_cast<int>(draws.size());
    double sum = 0.0;
    for (const auto& d : draws) sum += d.sinr(sigma2);
    e.mean = sum / static_cast<double>(draws.size());
    if (draws.size() > 1) {
        double ss = 0.0;
        for (const auto& d : draws) ss += (d.sinr(sigma2) - e.mean) * (d.sinr(sigma2) - e.mean);
        e.se = std::sqrt(ss / static_cast<double>(draws.size() - 1) / static_cast<double>(draws.size()));
    }
    return e;
}

} // namespace

double RicianChannelSpec::power(Index j) const {
    if (!powers) return 1.0;
    return (*powers)(j - 1);
}

void RicianChannelSpec::check() const {
    if (p < 1) throw InvalidArgument("channel needs p >= 1 antennas");
    if (c.empty()) throw InvalidArgument("channel needs at least the desired user");
    if (los.size() != c.size()) throw InvalidArgument("need one line-of-sight vector per user");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("Rician factor must be >= 0");
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j].rows() != p || c[j].cols() != p) throw InvalidArgument("spatial correlations must be p x p");
        if (hermitian_defect(c[j]) > CorrelationSet::kHermitianTolerance)
            throw InvalidArgument("spatial correlation is not Hermitian");
        if (hermitian_eigenvalues(c[j]).minCoeff() < CorrelationSet::kPsdTolerance)
            throw InvalidArgument("spatial correlation is not positive semidefinite");
        if (los[j].size() != p || !los[j].allFinite()) throw InvalidArgument("line-of-sight vectors must be finite p-vectors");
    }
    if (powers) {
        if (powers->size() != interferers()) throw InvalidArgument("need one power per interfering user");
        if (!powers->allFinite() || powers->minCoeff() < 0.0) throw InvalidArgument("user powers must be >= 0");
    }
}

VectorXd RayleighChannelSpec::min_eigenvalues() const {
    VectorXd out(users());
    for (Index j = 0; j < users(); ++j) out(j) = hermitian_eigenvalues(c[static_cast<std::size_t>(j)]).minCoeff();
    return out;
}

void RayleighChannelSpec::check() const {
    if (p < 1 || c.empty()) throw InvalidArgument("channel needs p >= 1 antennas and at least one user");
    for (const auto& m : c) {
        if (m.rows() != p || m.cols() != p) throw InvalidArgument("spatial correlations must be p x p");
        if (hermitian_defect(m) > CorrelationSet::kHermitianTolerance)
            throw InvalidArgument("spatial correlation is not Hermitian");
    }
}

MatrixXcd exponential_correlation(Index p, double q) {
    if (!(std::abs(q) < 1.0)) throw InvalidArgument("exponential correlation needs |q| < 1");
    MatrixXcd c(p, p);
    for (Index k = 0; k < p; ++k)
        for (Index l = 0; l < p; ++l) c(k, l) = std::pow(q, static_cast<double>(std::abs(k - l)));
    return c;
}

VectorXcd steering_vector(Index p, double theta) {
    VectorXcd z(p);
    const double s = std::sin(theta);
    for (Index k = 0; k < p; ++k) z(k) = std::polar(1.0, std::numbers::pi * static_cast<double>(k) * s);
    return z;
}

RicianChannelSpec make_fig5_channel(Index p, Index n, double tau) {
    if (p < 1 || n < 1) throw InvalidArgument("fig5 channel needs p, n >= 1");
    RicianChannelSpec chan;
    chan.p = p;
    chan.tau = tau;
    const double nn = static_cast<double>(n);
    for (Index j = 0; j <= n; ++j) {
        const double t = static_cast<double>(j) / nn;
        chan.c.push_back(exponential_correlation(p, 0.7 + 0.2 * t));
        chan.los.push_back(steering_vector(p, std::numbers::pi / 2.0 + t * std::numbers::pi));
    }
    chan.check();
    return chan;
}

ModelSpec interference_model(const RicianChannelSpec& chan) {
    chan.check();
    const Index n = chan.interferers();
    if (n < 1) throw PreconditionError("the deterministic SINR needs at least one interfering user");
    std::vector<MatrixXcd> omegas;
    omegas.reserve(static_cast<std::size_t>(n));
    MatrixXcd mean(chan.p, n);
    const double los = std::sqrt(chan.tau / (1.0 + chan.tau));
    for (Index j = 1; j <= n; ++j) {
        omegas.push_back(chan.power(j) * chan.c[static_cast<std::size_t>(j)] / (1.0 + chan.tau));
        mean.col(j - 1) = los * chan.los[static_cast<std::size_t>(j)];
    }
    return ModelSpec(std::move(mean), correlation_set(std::move(omegas)));
}

double sinr_lmmse_asymptotic(const FixedPointSystem& system, const RicianChannelSpec& chan, double sigma2,
                             const SolverOptions& opts) {
    check_sigma2(sigma2);
    SolverOptions o = opts;
    o.full_matrices = true;
    const Solution sol = system.solve(SpectralPoint(-sigma2, 0.0), o);
    const double n = static_cast<double>(chan.interferers());
    const double tr = (chan.c[0] * sol.theta).trace().real();
    const VectorXcd& z0 = chan.los[0];
    const double quad = z0.dot(sol.theta * z0).real();
    return tr / (n * (1.0 + chan.tau)) + chan.tau * quad / (1.0 + chan.tau);
}

double sinr_lmmse_asymptotic(const RicianChannelSpec& chan, double sigma2, const SolverOptions& opts) {
    const ModelSpec model = interference_model(chan);
    const FixedPointSystem system(model);
    return sinr_lmmse_asymptotic(system, chan, sigma2, opts);
}

SinrEstimate sinr_lmmse_empirical(const RicianChannelSpec& chan, double sigma2, int trials, std::uint64_t seed) {
    check_sigma2(sigma2);
    return summarize(draw_uplink(chan, trials, seed), sigma2);
}

double db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

std::vector<SinrPoint> sinr_sweep(const RicianChannelSpec& chan, const std::vector<double>& snr_db, int trials,
                                  std::uint64_t seed, const SolverOptions& opts) {
    if (snr_db.empty()) throw InvalidArgument("SNR sweep needs at least one point");
    for (double s : snr_db)
        if (!std::isfinite(s)) throw InvalidArgument("SNR values must be finite");
    const ModelSpec model = interference_model(chan);
    const FixedPointSystem system(model);
    const auto draws = draw_uplink(chan, trials, seed);
    std::vector<SinrPoint> out;
    out.reserve(snr_db.size());
    for (double s : snr_db) {
        const double sigma2 = db_to_sigma2(s);
        const SinrEstimate e = summarize(draws, sigma2);
        out.push_back({s, sinr_lmmse_asymptotic(system, chan, sigma2, opts), e.mean, e.se});
    }
    return out;
}

ModelSpec rayleigh_model(const RayleighChannelSpec& chan) {
    chan.check();
    return ModelSpec(MatrixXcd::Zero(chan.p, chan.users()), correlation_set(chan.c));
}

ZfReport zf_min_eig_check(const RayleighChannelSpec& chan, const ElementDistribution& dist, int trials,
                          std::uint64_t seed, const SolverOptions& opts) {
    chan.check();
    if (trials < 1) throw InvalidArgument("at least one trial is required");
    if (chan.p >= chan.users()) {
        std::ostringstream msg;
        msg << "ZF Gram matrix is singular unless p < n (p = " << chan.p << ", n = " << chan.users() << ")";
        throw PreconditionError(msg.str());
    }
    const VectorXd floors = chan.min_eigenvalues();
    if (!(floors.minCoeff() > 0.0)) throw PreconditionError("spatial correlations must be positive definite");

    const ModelSpec model = rayleigh_model(chan);
    const Sampler sampler(model);
    ZfReport rep;
    rep.trials = trials;
    rep.per_trial.assign(static_cast<std::size_t>(trials), 0.0);
    parallel_for(rep.per_trial.size(), [&](std::size_t t) {
        const VectorXd eig = gram_eigenvalues(sampler.draw_sigma(dist, seed, static_cast<std::uint32_t>(t)));
        rep.per_trial[t] = eig(eig.size() - 1);
    });
    rep.min_over_trials = *std::min_element(rep.per_trial.begin(), rep.per_trial.end());
    double sum = 0.0;
    for (double v : rep.per_trial) sum += v;
    rep.mean_min_eig = sum / static_cast<double>(trials);

    double norm = 0.0;
    for (Index j = 0; j < model.n(); ++j) norm = std::max(norm, model.correlations().max_eigenvalue(j));
    const double ratio = static_cast<double>(chan.p) / static_cast<double>(chan.users());
    const double hi = 1.25 * norm * (1.0 + std::sqrt(ratio)) * (1.0 + std::sqrt(ratio));
    const VectorXd grid = linear_grid(0.0, hi, 2000);
    const FixedPointSystem system(model);
    const SupportSet support =
        compute_support(system, std::span<const double>(grid.data(), static_cast<std::size_t>(grid.size())), 1e-4,
                        1e-3, opts);
    rep.analytic_floor_estimate = support.empty() ? 0.0 : support.intervals.front().a;
    return rep;
}

} // namespace specden
