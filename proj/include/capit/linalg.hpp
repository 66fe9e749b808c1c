#pragma once

#include <Eigen/Dense>

namespace capit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Thin SVD M = U diag(s) V^T with s nonincreasing. Singular values below
/// 1e-12 * s_1 are reported as exactly zero. When the leading singular value
/// is tied, which of the tied vectors comes first is unspecified.
struct Svd {
  Matrix u;
  Vector singular_values;
  Matrix v;
};

Svd svd(const Matrix& m);

/// Eigenpairs of a symmetric matrix, eigenvalues nonincreasing.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Throws InvalidInput when S is not square or not symmetric within 1e-8.
SymEig sym_eig(const Matrix& s);

/// Largest singular value.
double spectral_norm(const Matrix& m);

/// ||aa^T/|a|^2 - bb^T/|b|^2||_F = sqrt(2) |sin angle(a, b)|. In [0, sqrt(2)].
double subspace_loss(const Vector& a, const Vector& b);

/// Number of singular values above 1e-12 * s_1.
Index numerical_rank(const Vector& singular_values);

bool all_finite(const Matrix& m);

/// Symmetric matrix function Q f(L) Q^T applied through sym_eig.
template <class F>
Matrix spectral_apply(const SymEig& eig, F&& f) {
  Vector mapped = eig.eigenvalues.unaryExpr(f);
  return eig.eigenvectors * mapped.asDiagonal() * eig.eigenvectors.transpose();
}

}  // namespace linalg
}  // namespace capit
