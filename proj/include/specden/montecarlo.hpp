#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "specden/fixedpoint.hpp"
#include "specden/rng.hpp"
#include "specden/spectrum.hpp"

namespace specden {

/// One realization of Sigma = A + Y and the spectrum of S = Sigma Sigma^H.
struct EnsembleSample {
    MatrixXcd sigma;
    VectorXd eigenvalues; // descending, length p
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;
    ElementDistribution distribution;
};

/// Draws Sigma for a fixed model. Column j is a_j + B_j x_j / sqrt(n) with
/// x_j read from the Philox stream (seed, Entries, trial, j), so any trial can
/// be regenerated on its own.
class Sampler {
public:
    explicit Sampler(const ModelSpec& model);

    const ModelSpec& model() const { return *model_; }
    MatrixXcd draw_sigma(const ElementDistribution& dist, std::uint64_t seed, std::uint32_t trial) const;
    EnsembleSample draw(const ElementDistribution& dist, std::uint64_t seed, std::uint32_t trial) const;

private:
    const ModelSpec* model_;
    // Jointly diagonal models without explicit factors: B_j = U diag(sqrt(lambda_j)).
    bool diagonal_ = false;
    MatrixXd sqrt_spectra_;
    std::vector<MatrixXcd> factors_;
};

EnsembleSample sample(const ModelSpec& model, const ElementDistribution& dist, std::uint64_t seed,
                      std::uint32_t trial = 0);

/// Eigenvalues of Sigma Sigma^H, descending; computed from the smaller of the
/// two Gram matrices and padded with zeros.
VectorXd gram_eigenvalues(const MatrixXcd& sigma);

/// Empirical CDF (1/p) #{lambda_i <= x} at each grid point.
VectorXd esd(const VectorXd& eigenvalues, std::span<const double> grid);
VectorXd esd(const EnsembleSample& sample, std::span<const double> grid);

/// sup_x |ESD(x) - F^n(x)| with F^n taken from the profile's CDF; the
/// supremum is attained next to an eigenvalue, so only those are examined.
double ks_distance(const VectorXd& eigenvalues, const DensityProfile& profile, const VectorXd& cdf);

struct TrialReport {
    Interval interval{};
    int trials = 0;
    int escapes = 0;                   // trials with an eigenvalue inside interval
    std::vector<int> escape_counts;    // eigenvalues inside interval, per trial
    std::vector<double> max_eig;
    std::vector<double> min_eig;
    std::optional<double> ks_distance; // mean over trials, when a profile was supplied
};

/// Counts, per trial, the eigenvalues of S inside the closed interval. No
/// precondition on the interval; with `profile` the mean KS distance between
/// ESD and F^n is recorded as well.
TrialReport count_escapes(const ModelSpec& model, const ElementDistribution& dist, const Interval& interval,
                          int trials, std::uint64_t seed, const DensityProfile* profile = nullptr);

/// count_escapes restricted to certified probe intervals: the interval must
/// avoid `support` and `gap` must be a conclusive edge-gap evaluation over an
/// interval containing it, with a positive minimum.
TrialReport no_eigenvalue_trial(const ModelSpec& model, const ElementDistribution& dist, const Interval& interval,
                                int trials, std::uint64_t seed, const SupportSet& support, const EdgeGapReport& gap);

struct LargestEigenvalueSummary {
    int trials = 0;
    double max = 0.0;
    double mean = 0.0;
    double right_endpoint = 0.0;
    std::vector<double> per_trial;
};

LargestEigenvalueSummary largest_eigenvalue_stat(const ModelSpec& model, const ElementDistribution& dist, int trials,
                                                 std::uint64_t seed, double right_endpoint);

/// (1/p) Tr(C Q(z)) or u^H Q(z) v, Q(z) = (S - zI)^{-1}.
struct ResolventFunctional {
    enum class Kind { Trace, Bilinear };
    Kind kind = Kind::Trace;
    MatrixXcd c;
    VectorXcd u;
    VectorXcd v;

    static ResolventFunctional trace(MatrixXcd c) { return {Kind::Trace, std::move(c), {}, {}}; }
    static ResolventFunctional bilinear(VectorXcd u, VectorXcd v) { return {Kind::Bilinear, {}, std::move(u), std::move(v)}; }

    cplx empirical(const MatrixXcd& sigma, cplx z) const;
    cplx deterministic(const Solution& sol) const;
};

struct ResolventTrialResult {
    int trials = 0;
    cplx mc_mean;
    double mc_se = 0.0;         // sqrt((var Re + var Im)/trials)
    cplx deterministic_value;
    double z_score = 0.0;       // |mc_mean - deterministic_value| / mc_se
    double mean_abs_gap = 0.0;  // mean over trials of |functional - deterministic_value|
};

ResolventTrialResult resolvent_convergence_trial(const ModelSpec& model, const ElementDistribution& dist,
                                                 const SpectralPoint& point, const ResolventFunctional& functional,
                                                 int trials, std::uint64_t seed, const SolverOptions& opts = {});

struct QuadraticFormStats {
    int draws = 0;
    double mean_gap = 0.0; // mean |x^H M x - Tr M|
    double p99_gap = 0.0;
    std::vector<double> gaps;
};

/// |x^H M x - Tr M| over independent standardized vectors x.
QuadraticFormStats quadratic_form_concentration(const ElementDistribution& dist, const MatrixXcd& m, int draws,
                                                std::uint64_t seed);

/// (1/p) sum_i f(lambda_i)
double esd_expectation(const VectorXd& eigenvalues, const std::function<double(double)>& f);

} // namespace specden
