#include "specden/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "specden/error.hpp"
#include "specden/rng.hpp"

namespace specden {

namespace {

std::string describe(const char* what, Index j) {
    std::ostringstream os;
    os << what << " (column " << j << ")";
    return os.str();
}

} // namespace

CorrelationSet CorrelationSet::jointly_diagonal(MatrixXd spectra, std::optional<MatrixXcd> basis) {
    CorrelationSet set;
    set.dim_ = spectra.rows();
    set.count_ = spectra.cols();
    set.jointly_diagonal_ = true;
    if (basis) {
        if (basis->rows() != set.dim_ || basis->cols() != set.dim_)
            throw StructuralError("shared basis must be p x p");
        const MatrixXcd gram = basis->adjoint() * *basis;
        const double defect = (gram - MatrixXcd::Identity(set.dim_, set.dim_)).cwiseAbs().maxCoeff();
        if (defect > 1e-10) throw StructuralError("shared basis is not unitary");
    }
    if (!spectra.allFinite()) throw StructuralError("correlation spectra contain non-finite values");
    if (spectra.size() > 0 && spectra.minCoeff() < kPsdTolerance)
        throw StructuralError("correlation matrix is not positive semidefinite");
    set.spectra_ = std::move(spectra);
    set.basis_ = std::move(basis);
    set.summarize();
    return set;
}

CorrelationSet CorrelationSet::general(std::vector<MatrixXcd> matrices) {
    CorrelationSet set;
    set.count_ = static_cast<Index>(matrices.size());
    set.dim_ = matrices.empty() ? 0 : matrices.front().rows();
    for (Index j = 0; j < set.count_; ++j) {
        const MatrixXcd& m = matrices[static_cast<std::size_t>(j)];
        if (m.rows() != set.dim_ || m.cols() != set.dim_)
            throw StructuralError(describe("correlation matrix must be p x p", j));
        if (!m.allFinite()) throw StructuralError(describe("correlation matrix has non-finite entries", j));
        if (hermitian_defect(m) > kHermitianTolerance)
            throw StructuralError(describe("correlation matrix is not Hermitian", j));
    }
    set.matrices_ = std::move(matrices);
    set.summarize();
    for (Index j = 0; j < set.count_; ++j)
        if (set.min_eig_[static_cast<std::size_t>(j)] < kPsdTolerance)
            throw StructuralError(describe("correlation matrix is not positive semidefinite", j));
    return set;
}

void CorrelationSet::summarize() {
    const auto count = static_cast<std::size_t>(count_);
    traces_.resize(count);
    max_eig_.resize(count);
    min_eig_.resize(count);
    for (Index j = 0; j < count_; ++j) {
        const auto k = static_cast<std::size_t>(j);
        if (jointly_diagonal_) {
            traces_[k] = spectra_.col(j).sum();
            max_eig_[k] = dim_ ? spectra_.col(j).maxCoeff() : 0.0;
            min_eig_[k] = dim_ ? spectra_.col(j).minCoeff() : 0.0;
        } else {
            const MatrixXcd& m = matrices_[k];
            traces_[k] = m.trace().real();
            const VectorXd eig = hermitian_eigenvalues(m);
            max_eig_[k] = dim_ ? eig.maxCoeff() : 0.0;
            min_eig_[k] = dim_ ? eig.minCoeff() : 0.0;
        }
    }
}

const MatrixXd& CorrelationSet::spectra() const {
    if (!jointly_diagonal_) throw InvalidArgument("correlation set is not jointly diagonal");
    return spectra_;
}

const std::vector<MatrixXcd>& CorrelationSet::matrices() const {
    if (jointly_diagonal_) throw InvalidArgument("correlation set is stored jointly diagonal");
    return matrices_;
}

MatrixXcd CorrelationSet::matrix(Index j) const {
    if (!jointly_diagonal_) return matrices_[static_cast<std::size_t>(j)];
    const VectorXcd diag = spectra_.col(j).cast<cplx>();
    if (!basis_) return diag.asDiagonal();
    return *basis_ * diag.asDiagonal() * basis_->adjoint();
}

MatrixXcd CorrelationSet::sqrt_matrix(Index j) const {
    if (!jointly_diagonal_) return hermitian_sqrt(matrices_[static_cast<std::size_t>(j)]);
    const VectorXcd roots = spectra_.col(j).cwiseMax(0.0).cwiseSqrt().cast<cplx>();
    if (!basis_) return roots.asDiagonal();
    return *basis_ * roots.asDiagonal() * basis_->adjoint();
}

ModelSpec::ModelSpec(MatrixXcd mean, CorrelationSet correlations, std::optional<std::vector<MatrixXcd>> factors,
                     std::optional<Provenance> provenance)
    : mean_(std::move(mean)),
      correlations_(std::move(correlations)),
      factors_(std::move(factors)),
      provenance_(std::move(provenance)) {
    if (p() < 1 || n() < 1) throw StructuralError("model needs p >= 1 and n >= 1");
    if (!mean_.allFinite()) throw StructuralError("mean matrix has non-finite entries");
    if (correlations_.dim() != p() || correlations_.count() != n())
        throw StructuralError("expected n correlation matrices of size p x p matching the p x n mean");
    if (factors_) {
        if (static_cast<Index>(factors_->size()) != n()) throw StructuralError("expected n factors B_j");
        for (Index j = 0; j < n(); ++j) {
            const MatrixXcd& b = (*factors_)[static_cast<std::size_t>(j)];
            if (b.rows() != p() || b.cols() < 1) throw StructuralError(describe("factor must be p x d_j", j));
            const MatrixXcd omega = correlations_.matrix(j);
            const double gap = (b * b.adjoint() - omega).cwiseAbs().maxCoeff();
            if (gap > kFactorTolerance) throw StructuralError(describe("B_j B_j^H does not match Omega_j", j));
        }
    }
}

Index ModelSpec::inner_dim(Index j) const {
    if (factors_) return (*factors_)[static_cast<std::size_t>(j)].cols();
    return p();
}

std::vector<Index> ModelSpec::inner_dims() const {
    std::vector<Index> dims(static_cast<std::size_t>(n()));
    for (Index j = 0; j < n(); ++j) dims[static_cast<std::size_t>(j)] = inner_dim(j);
    return dims;
}

MatrixXcd ModelSpec::factor(Index j) const {
    if (factors_) return (*factors_)[static_cast<std::size_t>(j)];
    return correlations_.sqrt_matrix(j);
}

ModelSpec ModelSpec::with_provenance(Provenance provenance) const {
    ModelSpec copy = *this;
    copy.provenance_ = std::move(provenance);
    return copy;
}

AssumptionReport validate(const ModelSpec& model, const AdmissibleRanges& bounds) {
    AssumptionReport report;
    const auto p = static_cast<double>(model.p());
    report.ratio_p_n = p / static_cast<double>(model.n());

    const CorrelationSet& omega = model.correlations();
    report.min_trace_ratio = std::numeric_limits<double>::infinity();
    report.max_corr_norm = 0.0;
    for (Index j = 0; j < model.n(); ++j) {
        report.min_trace_ratio = std::min(report.min_trace_ratio, omega.trace(j) / p);
        report.max_corr_norm = std::max(report.max_corr_norm, omega.max_eigenvalue(j));
    }
    report.mean_norm = spectral_norm(model.mean());

    auto& v = report.violations;
    if (report.ratio_p_n < bounds.min_ratio)
        v.push_back({1, "p/n below admissible range", report.ratio_p_n, bounds.min_ratio});
    if (report.ratio_p_n > bounds.max_ratio)
        v.push_back({1, "p/n above admissible range", report.ratio_p_n, bounds.max_ratio});
    if (report.min_trace_ratio < bounds.min_trace_ratio)
        v.push_back({3, "min_j Tr(Omega_j)/p below lower bound", report.min_trace_ratio, bounds.min_trace_ratio});
    if (report.max_corr_norm > bounds.max_corr_norm)
        v.push_back({3, "max_j ||Omega_j|| above upper bound", report.max_corr_norm, bounds.max_corr_norm});
    if (report.mean_norm > bounds.max_mean_norm)
        v.push_back({4, "||A|| above upper bound", report.mean_norm, bounds.max_mean_norm});
    return report;
}

ModelSpec make_marchenko_pastur(Index p, Index n) {
    if (p < 1 || n < 1) throw InvalidArgument("Marchenko-Pastur model needs p, n >= 1");
    Provenance prov{"marchenko-pastur", {{"p", static_cast<double>(p)}, {"n", static_cast<double>(n)}}, std::nullopt};
    return ModelSpec(MatrixXcd::Zero(p, n), CorrelationSet::jointly_diagonal(MatrixXd::Ones(p, n)), std::nullopt,
                     std::move(prov));
}

FigureSetup parse_figure_setup(const std::string& tag) {
    if (tag == "fig2") return FigureSetup::Fig2;
    if (tag == "fig3") return FigureSetup::Fig3;
    if (tag == "fig4") return FigureSetup::Fig4;
    throw InvalidArgument("unknown figure setup '" + tag + "'");
}

std::string figure_setup_name(FigureSetup which) {
    switch (which) {
    case FigureSetup::Fig2: return "fig2";
    case FigureSetup::Fig3: return "fig3";
    case FigureSetup::Fig4: return "fig4";
    }
    return "unknown";
}

FigureDims default_dims(FigureSetup which) {
    switch (which) {
    case FigureSetup::Fig2: return {200, 400};
    case FigureSetup::Fig3: return {6, 20};
    case FigureSetup::Fig4: return {200, 400};
    }
    return {0, 0};
}

namespace {

// diag(1 + (i + j)/(p + n)), 1-based i, j
MatrixXd graded_spectra(Index p, Index n) {
    MatrixXd spectra(p, n);
    const double denom = static_cast<double>(p + n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < p; ++i) spectra(i, j) = 1.0 + static_cast<double>(i + 1 + j + 1) / denom;
    return spectra;
}

} // namespace

ModelSpec make_figure_setup(FigureSetup which, std::uint64_t seed, std::optional<FigureDims> dims) {
    const FigureDims d = dims.value_or(default_dims(which));
    if (d.p < 2 || d.n < 1) throw InvalidArgument("figure setups need p >= 2 and n >= 1");
    MatrixXcd mean = MatrixXcd::Zero(d.p, d.n);
    MatrixXd spectra;
    const double pi = std::numbers::pi;

    switch (which) {
    case FigureSetup::Fig2: {
        if (d.p % 2 != 0) throw InvalidArgument("fig2 needs even p");
        const Index half = d.p / 2;
        spectra = MatrixXd::Ones(d.p, d.n);
        for (Index j = 0; j < d.n; ++j) {
            // K_j = diag(z_j1^2, ...), z ~ N(0,1), quenched from the seed
            RandomStream rng(seed, StreamTag::FigureSetup, 0, static_cast<std::uint32_t>(j));
            const double weight = static_cast<double>(d.n + j + 1) / (2.0 * static_cast<double>(d.n));
            for (Index i = 0; i < half; ++i) {
                const double z = rng.standard_normal();
                spectra(half + i, j) = 8.0 + weight * z * z;
            }
        }
        mean(0, 0) = 2.0;
        mean(1, 1) = -2.0 * std::exp(cplx(0.0, -0.6 * pi));
        break;
    }
    case FigureSetup::Fig3: {
        if (d.p % 2 != 0) throw InvalidArgument("fig3 needs even p");
        spectra = graded_spectra(d.p, d.n);
        const Index half = d.p / 2;
        const Index quarter = d.n / 4;
        for (Index j = 0; j < quarter; ++j) spectra.col(j).tail(d.p - half).setZero();
        for (Index j = d.n - quarter; j < d.n; ++j) spectra.col(j).head(half).setZero();
        mean(0, 0) = 2.0;
        mean(1, 1) = std::exp(cplx(0.0, 0.4 * pi));
        break;
    }
    case FigureSetup::Fig4: {
        spectra = graded_spectra(d.p, d.n);
        mean(0, 0) = 1.0;
        mean(1, 1) = 1.5 * std::exp(cplx(0.0, -0.2 * pi));
        break;
    }
    }

    Provenance prov{figure_setup_name(which),
                    {{"p", static_cast<double>(d.p)}, {"n", static_cast<double>(d.n)}},
                    which == FigureSetup::Fig2 ? std::optional<std::uint64_t>(seed) : std::nullopt};
    return ModelSpec(std::move(mean), CorrelationSet::jointly_diagonal(std::move(spectra)), std::nullopt,
                     std::move(prov));
}

ModelSpec make_variance_profile(const std::function<double(double, double)>& f_omega,
                                const std::function<double(double)>& f_a, Index p, Index n,
                                std::optional<MatrixXcd> shared_basis) {
    if (p < 1 || n < 1) throw InvalidArgument("variance profile needs p, n >= 1");
    MatrixXd spectra(p, n);
    for (Index j = 0; j < n; ++j) {
        for (Index l = 0; l < p; ++l) {
            const double value = f_omega(static_cast<double>(l + 1) / static_cast<double>(p),
                                         static_cast<double>(j + 1) / static_cast<double>(n));
            if (!(value > 0.0) || !std::isfinite(value))
                throw InvalidArgument("variance profile must be positive and finite on the sampling grid");
            spectra(l, j) = value;
        }
    }
    MatrixXcd mean = MatrixXcd::Zero(p, n);
    for (Index j = 0; j < std::min(p, n); ++j)
        mean(j, j) = f_a(static_cast<double>(j + 1) / static_cast<double>(p));
    if (shared_basis) mean = *shared_basis * mean;
    Provenance prov{"variance-profile", {{"p", static_cast<double>(p)}, {"n", static_cast<double>(n)}}, std::nullopt};
    return ModelSpec(std::move(mean), CorrelationSet::jointly_diagonal(std::move(spectra), std::move(shared_basis)),
                     std::nullopt, std::move(prov));
}

} // namespace specden
