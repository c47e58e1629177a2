#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "specden/linalg.hpp"

namespace specden {

/// The per-column correlations Omega_j, j = 1..n. Two storage forms:
/// jointly diagonal (Omega_j = U diag(lambda_j) U^H with one shared unitary U,
/// identity when absent) and general dense Hermitian matrices.
class CorrelationSet {
public:
    static constexpr double kHermitianTolerance = 1e-12;
    static constexpr double kPsdTolerance = -1e-10;

    /// `spectra` is p x n; column j holds the eigenvalues of Omega_j.
    static CorrelationSet jointly_diagonal(MatrixXd spectra, std::optional<MatrixXcd> basis = std::nullopt);
    static CorrelationSet general(std::vector<MatrixXcd> matrices);

    Index dim() const { return dim_; }
    Index count() const { return count_; }
    bool is_jointly_diagonal() const { return jointly_diagonal_; }

    /// Valid only for jointly diagonal sets.
    const MatrixXd& spectra() const;
    const std::optional<MatrixXcd>& basis() const { return basis_; }
    /// Valid only for general sets.
    const std::vector<MatrixXcd>& matrices() const;

    MatrixXcd matrix(Index j) const;
    double trace(Index j) const { return traces_[static_cast<std::size_t>(j)]; }
    double max_eigenvalue(Index j) const { return max_eig_[static_cast<std::size_t>(j)]; }
    double min_eigenvalue(Index j) const { return min_eig_[static_cast<std::size_t>(j)]; }

    /// Hermitian square root, the factor used by the sampler when none is given.
    MatrixXcd sqrt_matrix(Index j) const;

private:
    CorrelationSet() = default;
    void summarize();

    Index dim_ = 0;
    Index count_ = 0;
    bool jointly_diagonal_ = false;
    MatrixXd spectra_;
    std::optional<MatrixXcd> basis_;
    std::vector<MatrixXcd> matrices_;
    std::vector<double> traces_;
    std::vector<double> max_eig_;
    std::vector<double> min_eig_;
};

/// Where a model came from; lets a model file name a constructor instead of
/// spelling out every matrix.
struct Provenance {
    std::string constructor;
    std::map<std::string, double> params;
    std::optional<std::uint64_t> seed;
};

/// Sigma = A + Y, Y = n^{-1/2} [B_1 x_1, ..., B_n x_n], Omega_j = B_j B_j^H.
/// Immutable once constructed; the constructor enforces structural
/// consistency and the Hermitian/PSD invariants.
class ModelSpec {
public:
    static constexpr double kFactorTolerance = 1e-10;

    ModelSpec(MatrixXcd mean, CorrelationSet correlations, std::optional<std::vector<MatrixXcd>> factors = std::nullopt,
              std::optional<Provenance> provenance = std::nullopt);

    Index p() const { return mean_.rows(); }
    Index n() const { return mean_.cols(); }
    /// d_j: columns of B_j (p when the factor is the derived square root).
    Index inner_dim(Index j) const;
    std::vector<Index> inner_dims() const;

    const MatrixXcd& mean() const { return mean_; }
    const CorrelationSet& correlations() const { return correlations_; }
    const std::optional<std::vector<MatrixXcd>>& factors() const { return factors_; }
    const std::optional<Provenance>& provenance() const { return provenance_; }

    /// B_j as given, or the Hermitian square root of Omega_j.
    MatrixXcd factor(Index j) const;

    ModelSpec with_provenance(Provenance provenance) const;

private:
    MatrixXcd mean_;
    CorrelationSet correlations_;
    std::optional<std::vector<MatrixXcd>> factors_;
    std::optional<Provenance> provenance_;
};

struct AdmissibleRanges {
    double min_ratio = 0.01;
    double max_ratio = 100.0;
    double min_trace_ratio = 1e-6;
    double max_corr_norm = 1e6;
    double max_mean_norm = 1e6;
};

struct AssumptionViolation {
    int assumption; // index of the breached model assumption (1, 3 or 4)
    std::string label;
    double value;
    double bound;
};

struct AssumptionReport {
    double ratio_p_n = 0.0;
    double min_trace_ratio = 0.0; // min_j Tr(Omega_j)/p
    double max_corr_norm = 0.0;   // max_j ||Omega_j||
    double mean_norm = 0.0;       // ||A||
    std::vector<AssumptionViolation> violations;

    bool ok() const { return violations.empty(); }
};

AssumptionReport validate(const ModelSpec& model, const AdmissibleRanges& bounds = {});

/// A = 0, Omega_j = B_j = I_p, d_j = p.
ModelSpec make_marchenko_pastur(Index p, Index n);

enum class FigureSetup { Fig2, Fig3, Fig4 };

FigureSetup parse_figure_setup(const std::string& tag);
std::string figure_setup_name(FigureSetup which);

struct FigureDims {
    Index p;
    Index n;
};

FigureDims default_dims(FigureSetup which);

/// The simulation setups behind the ESD-vs-LSD, support-inclusion and
/// eigenvalue-location experiments. Dimensions default to the published ones;
/// overriding them scales every block proportionally.
ModelSpec make_figure_setup(FigureSetup which, std::uint64_t seed, std::optional<FigureDims> dims = std::nullopt);

/// Variance-profile model: Omega_j = U diag(f_omega(l/p, j/n)) U^H and
/// A = U rect-diag(f_a(j/p)), indices 1-based.
ModelSpec make_variance_profile(const std::function<double(double, double)>& f_omega,
                                const std::function<double(double)>& f_a, Index p, Index n,
                                std::optional<MatrixXcd> shared_basis = std::nullopt);

} // namespace specden
