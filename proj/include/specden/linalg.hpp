#pragma once

#include <complex>

#include <Eigen/Dense>

namespace specden {

using cplx = std::complex<double>;
using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// max_ij |M - M^H|
double hermitian_defect(const MatrixXcd& m);

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
VectorXd hermitian_eigenvalues(const MatrixXcd& m);

/// Spectral norm via the smaller Gram matrix.
double spectral_norm(const MatrixXcd& m);

/// Hermitian square root with negative eigenvalues clipped to zero.
MatrixXcd hermitian_sqrt(const MatrixXcd& m);

} // namespace specden
