#include "specden/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace specden {

double hermitian_defect(const MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

VectorXd hermitian_eigenvalues(const MatrixXcd& m) {
    if (m.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

double spectral_norm(const MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    const MatrixXcd gram = (m.rows() <= m.cols()) ? MatrixXcd(m * m.adjoint()) : MatrixXcd(m.adjoint() * m);
    const VectorXd eig = hermitian_eigenvalues(gram);
    return std::sqrt(std::max(0.0, eig.maxCoeff()));
}

MatrixXcd hermitian_sqrt(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(m);
    const VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().adjoint();
}

} // namespace specden
