#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specden/fixedpoint.hpp"
#include "specden/montecarlo.hpp"

namespace specden {

/// Uplink channels h_j = sqrt(p_j/(1+tau)) C_j^{1/2} z_j + sqrt(tau/(1+tau)) zbar_j,
/// z_j ~ CN(0, I/n), for users j = 0..n; user 0 is the one being detected.
struct RicianChannelSpec {
    Index p = 0;
    std::vector<MatrixXcd> c;    // n + 1 spatial correlations
    std::vector<VectorXcd> los;  // n + 1 line-of-sight vectors
    double tau = 0.0;
    std::optional<VectorXd> powers; // p_j for the n interferers, default 1

    Index interferers() const { return static_cast<Index>(c.size()) - 1; }
    double power(Index j) const; // j = 1..n
    void check() const;
};

/// Downlink channels h_j = C_j^{1/2} z_j, j = 1..n.
struct RayleighChannelSpec {
    Index p = 0;
    std::vector<MatrixXcd> c;

    Index users() const { return static_cast<Index>(c.size()); }
    /// lambda_min(C_j) per user.
    VectorXd min_eigenvalues() const;
    void check() const;
};

/// [C]_{kl} = q^{|k-l|}
MatrixXcd exponential_correlation(Index p, double q);

/// zbar = [1, exp(i pi sin(theta)), ..., exp(i (p-1) pi sin(theta))]^T
VectorXcd steering_vector(Index p, double theta);

/// The published uplink setup: q(j) = 0.7 + 0.2 j/n, theta(j) = pi/2 + j pi/n,
/// Rician factor tau, users j = 0..n.
RicianChannelSpec make_fig5_channel(Index p = 64, Index n = 32, double tau = 1.0);

/// The model whose deterministic equivalent gives the SINR: the n
/// interferers with Omega_j = p_j C_j/(1+tau) and A = Zbar sqrt(tau/(1+tau)).
ModelSpec interference_model(const RicianChannelSpec& chan);

/// Tr(C_0 Theta)/(n(1+tau)) + tau zbar_0^H Theta zbar_0/(1+tau), Theta at z = -sigma2.
double sinr_lmmse_asymptotic(const RicianChannelSpec& chan, double sigma2, const SolverOptions& opts = {});

/// Same with an already prepared system for interference_model(chan).
double sinr_lmmse_asymptotic(const FixedPointSystem& system, const RicianChannelSpec& chan, double sigma2,
                             const SolverOptions& opts = {});

struct SinrEstimate {
    double mean = 0.0;
    double se = 0.0;
    int trials = 0;
};

/// gamma_0 = h_0^H (H_[0] H_[0]^H + sigma2 I)^{-1} h_0 averaged over channel draws.
SinrEstimate sinr_lmmse_empirical(const RicianChannelSpec& chan, double sigma2, int trials, std::uint64_t seed);

struct SinrPoint {
    double snr_db;
    double asymptotic;
    double mc_mean;
    double mc_se;
};

/// SNR = 1/sigma2. Every SNR point reuses the same channel draws.
std::vector<SinrPoint> sinr_sweep(const RicianChannelSpec& chan, const std::vector<double>& snr_db, int trials,
                                  std::uint64_t seed, const SolverOptions& opts = {});

double db_to_sigma2(double snr_db);

struct ZfReport {
    int trials = 0;
    double min_over_trials = 0.0;
    double mean_min_eig = 0.0;
    double analytic_floor_estimate = 0.0; // left edge of the detected support
    std::vector<double> per_trial;
};

/// lambda_min(H H^H) over draws of the Rayleigh channel, against the left
/// edge of the support of the model A = 0, Omega_j = C_j. Requires p < n and
/// lambda_min(C_j) > 0.
ZfReport zf_min_eig_check(const RayleighChannelSpec& chan, const ElementDistribution& dist, int trials,
                          std::uint64_t seed, const SolverOptions& opts = {});

ModelSpec rayleigh_model(const RayleighChannelSpec& chan);

} // namespace specden
