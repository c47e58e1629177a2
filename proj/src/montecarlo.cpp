#include "specden/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include "specden/error.hpp"
#include "specden/parallel.hpp"

namespace specden {

namespace {

void check_trials(int trials) {
    if (trials < 1) throw InvalidArgument("at least one trial is required");
}

// Sample mean and standard error of complex values, spreads of the real and
// imaginary parts added.
std::pair<cplx, double> mean_and_se(const std::vector<cplx>& values) {
    const double count = static_cast<double>(values.size());
    cplx sum = 0.0;
    for (const auto& x : values) sum += x;
    const cplx mean = sum / count;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (const auto& x : values) ss += std::norm(x - mean);
    return {mean, std::sqrt(ss / (count - 1.0) / count)};
}

} // namespace

Sampler::Sampler(const ModelSpec& model) : model_(&model) {
    const auto& corr = model.correlations();
    if (!model.factors() && corr.is_jointly_diagonal()) {
        diagonal_ = true;
        sqrt_spectra_ = corr.spectra().cwiseMax(0.0).cwiseSqrt();
        return;
    }
    factors_.reserve(static_cast<std::size_t>(model.n()));
    for (Index j = 0; j < model.n(); ++j) factors_.push_back(model.factor(j));
}

MatrixXcd Sampler::draw_sigma(const ElementDistribution& dist, std::uint64_t seed, std::uint32_t trial) const {
    const ModelSpec& m = *model_;
    const Index p = m.p();
    const Index n = m.n();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    MatrixXcd y(p, n);
    const MatrixXcd* basis = nullptr;
    if (diagonal_ && m.correlations().basis()) basis = &*m.correlations().basis();
    for (Index j = 0; j < n; ++j) {
        RandomStream rng(seed, StreamTag::Entries, trial, static_cast<std::uint32_t>(j));
        const Index d = diagonal_ ? p : factors_[static_cast<std::size_t>(j)].cols();
        VectorXcd x(d);
        for (Index i = 0; i < d; ++i) x(i) = dist.draw(rng);
        if (diagonal_) {
            const VectorXcd col = sqrt_spectra_.col(j).cast<cplx>().cwiseProduct(x);
            y.col(j) = basis ? VectorXcd(*basis * col) : col;
        } else {
            y.col(j) = factors_[static_cast<std::size_t>(j)] * x;
        }
    }
    return m.mean() + scale * y;
}

EnsembleSample Sampler::draw(const ElementDistribution& dist, std::uint64_t seed, std::uint32_t trial) const {
    EnsembleSample s;
    s.sigma = draw_sigma(dist, seed, trial);
    s.eigenvalues = gram_eigenvalues(s.sigma);
    s.seed = seed;
    s.trial = trial;
    s.distribution = dist;
    return s;
}

EnsembleSample sample(const ModelSpec& model, const ElementDistribution& dist, std::uint64_t seed,
                      std::uint32_t trial) {
    return Sampler(model).draw(dist, seed, trial);
}

VectorXd gram_eigenvalues(const MatrixXcd& sigma) {
    const Index p = sigma.rows();
    const Index n = sigma.cols();
    const MatrixXcd gram = p <= n ? MatrixXcd(sigma * sigma.adjoint()) : MatrixXcd(sigma.adjoint() * sigma);
    const VectorXd eig = hermitian_eigenvalues(gram); // ascending
    VectorXd out = VectorXd::Zero(p);
    for (Index i = 0; i < eig.size(); ++i) out(i) = eig(eig.size() - 1 - i);
    return out;
}

VectorXd esd(const VectorXd& eigenvalues, std::span<const double> grid) {
    std::vector<double> sorted(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    std::sort(sorted.begin(), sorted.end());
    const double p = static_cast<double>(sorted.size());
    VectorXd out(static_cast<Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto below = std::upper_bound(sorted.begin(), sorted.end(), grid[k]) - sorted.begin();
        out(static_cast<Index>(k)) = static_cast<double>(below) / p;
    }
    return out;
}

VectorXd esd(const EnsembleSample& sample, std::span<const double> grid) { return esd(sample.eigenvalues, grid); }

double ks_distance(const VectorXd& eigenvalues, const DensityProfile& profile, const VectorXd& cdf) {
    std::vector<double> sorted(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    std::sort(sorted.begin(), sorted.end());
    const double p = static_cast<double>(sorted.size());
    double worst = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t k = i;
        while (k < sorted.size() && sorted[k] == sorted[i]) ++k;
        const double f = interpolate_cdf(profile, cdf, sorted[i]);
        worst = std::max({worst, std::abs(f - static_cast<double>(i) / p), std::abs(f - static_cast<double>(k) / p)});
        i = k;
    }
    return worst;
}

TrialReport count_escapes(const ModelSpec& model, const ElementDistribution& dist, const Interval& interval,
                          int trials, std::uint64_t seed, const DensityProfile* profile) {
    check_trials(trials);
    if (!(interval.b >= interval.a)) throw InvalidArgument("probe interval needs a <= b");
    const Sampler sampler(model);
    const auto count = static_cast<std::size_t>(trials);
    TrialReport rep;
    rep.interval = interval;
    rep.trials = trials;
    rep.escape_counts.assign(count, 0);
    rep.max_eig.assign(count, 0.0);
    rep.min_eig.assign(count, 0.0);
    std::vector<double> ks(count, 0.0);
    const VectorXd cdf = profile ? lsd_cdf(*profile) : VectorXd();
    parallel_for(count, [&](std::size_t t) {
        const VectorXd eig = gram_eigenvalues(sampler.draw_sigma(dist, seed, static_cast<std::uint32_t>(t)));
        int inside = 0;
        for (Index i = 0; i < eig.size(); ++i)
            if (eig(i) >= interval.a && eig(i) <= interval.b) ++inside;
        rep.escape_counts[t] = inside;
        rep.max_eig[t] = eig.maxCoeff();
        rep.min_eig[t] = eig.minCoeff();
        if (profile) ks[t] = ks_distance(eig, *profile, cdf);
    });
    rep.escapes = static_cast<int>(std::count_if(rep.escape_counts.begin(), rep.escape_counts.end(),
                                                 [](int c) { return c > 0; }));
    if (profile) {
        double sum = 0.0;
        for (double k : ks) sum += k;
        rep.ks_distance = sum / static_cast<double>(count);
    }
    return rep;
}

TrialReport no_eigenvalue_trial(const ModelSpec& model, const ElementDistribution& dist, const Interval& interval,
                                int trials, std::uint64_t seed, const SupportSet& support, const EdgeGapReport& gap) {
    std::ostringstream why;
    if (support.empty())
        why << "no support detected";
    else if (support.overlaps(interval))
        why << "probe interval [" << interval.a << ", " << interval.b << "] overlaps the detected support";
    else if (interval.a < gap.interval.a || interval.b > gap.interval.b)
        why << "edge-gap check does not cover the probe interval";
    else if (!gap.conclusive())
        why << "edge-gap check is inconclusive at " << gap.inconclusive.size() << " point(s)";
    else if (!(gap.minimum() > 0.0))
        why << "edge-gap condition fails: minimum " << gap.minimum();
    if (!why.str().empty()) throw PreconditionError(why.str());
    return count_escapes(model, dist, interval, trials, seed);
}

LargestEigenvalueSummary largest_eigenvalue_stat(const ModelSpec& model, const ElementDistribution& dist, int trials,
                                                 std::uint64_t seed, double right_endpoint) {
    check_trials(trials);
    const Sampler sampler(model);
    LargestEigenvalueSummary out;
    out.trials = trials;
    out.right_endpoint = right_endpoint;
    out.per_trial.assign(static_cast<std::size_t>(trials), 0.0);
    parallel_for(out.per_trial.size(), [&](std::size_t t) {
        out.per_trial[t] = gram_eigenvalues(sampler.draw_sigma(dist, seed, static_cast<std::uint32_t>(t)))(0);
    });
    out.max = *std::max_element(out.per_trial.begin(), out.per_trial.end());
    double sum = 0.0;
    for (double v : out.per_trial) sum += v;
    out.mean = sum / static_cast<double>(trials);
    return out;
}

cplx ResolventFunctional::empirical(const MatrixXcd& sigma, cplx z) const {
    const Index p = sigma.rows();
    MatrixXcd shifted = sigma * sigma.adjoint();
    shifted.diagonal().array() -= z;
    const Eigen::PartialPivLU<MatrixXcd> lu(shifted);
    if (kind == Kind::Trace) {
        if (c.rows() != p || c.cols() != p) throw InvalidArgument("trace functional needs a p x p matrix");
        return lu.solve(c).trace() / static_cast<double>(p);
    }
    if (u.size() != p || v.size() != p) throw InvalidArgument("bilinear functional needs p-vectors");
    return u.dot(lu.solve(v));
}

cplx ResolventFunctional::deterministic(const Solution& sol) const {
    if (kind == Kind::Trace) return trace_functional(sol, c);
    return bilinear_functional(sol, u, v);
}

ResolventTrialResult resolvent_convergence_trial(const ModelSpec& model, const ElementDistribution& dist,
                                                 const SpectralPoint& point, const ResolventFunctional& functional,
                                                 int trials, std::uint64_t seed, const SolverOptions& opts) {
    check_trials(trials);
    SolverOptions o = opts;
    o.full_matrices = true;
    const Solution sol = solve(model, point, o);
    const cplx det = functional.deterministic(sol);
    const Sampler sampler(model);
    std::vector<cplx> values(static_cast<std::size_t>(trials));
    parallel_for(values.size(), [&](std::size_t t) {
        values[t] = functional.empirical(sampler.draw_sigma(dist, seed, static_cast<std::uint32_t>(t)), point.z());
    });
    ResolventTrialResult r;
    r.trials = trials;
    std::tie(r.mc_mean, r.mc_se) = mean_and_se(values);
    r.deterministic_value = det;
    const double gap = std::abs(r.mc_mean - det);
    r.z_score = r.mc_se > 0.0 ? gap / r.mc_se : (gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    double abs_sum = 0.0;
    for (const auto& x : values) abs_sum += std::abs(x - det);
    r.mean_abs_gap = abs_sum / static_cast<double>(trials);
    return r;
}

QuadraticFormStats quadratic_form_concentration(const ElementDistribution& dist, const MatrixXcd& m, int draws,
                                                std::uint64_t seed) {
    check_trials(draws);
    if (m.rows() != m.cols()) throw InvalidArgument("quadratic form needs a square matrix");
    const Index p = m.rows();
    const cplx tr = m.trace();
    QuadraticFormStats s;
    s.draws = draws;
    s.gaps.assign(static_cast<std::size_t>(draws), 0.0);
    parallel_for(s.gaps.size(), [&](std::size_t t) {
        RandomStream rng(seed, StreamTag::QuadraticForm, static_cast<std::uint32_t>(t), 0);
        VectorXcd x(p);
        for (Index i = 0; i < p; ++i) x(i) = dist.draw(rng);
        s.gaps[t] = std::abs(x.dot(m * x) - tr);
    });
    double sum = 0.0;
    for (double g : s.gaps) sum += g;
    s.mean_gap = sum / static_cast<double>(draws);
    std::vector<double> sorted = s.gaps;
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(draws))) - 1;
    s.p99_gap = sorted[std::min(idx, sorted.size() - 1)];
    return s;
}

double esd_expectation(const VectorXd& eigenvalues, const std::function<double(double)>& f) {
    double sum = 0.0;
    for (Index i = 0; i < eigenvalues.size(); ++i) sum += f(eigenvalues(i));
    return eigenvalues.size() ? sum / static_cast<double>(eigenvalues.size()) : 0.0;
}

} // namespace specden
