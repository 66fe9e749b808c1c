#include "capit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capit/errors.hpp"

namespace capit {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::AllCoordinatesKilled: return "AllCoordinatesKilled";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DataError: return "DataError";
  }
  return "Unknown";
}

namespace linalg {

namespace {
constexpr double kRankTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-8;
}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

Svd svd(const Matrix& m) {
  if (m.size() == 0) throw Error(ErrorKind::InvalidInput, "svd: empty matrix");
  if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, "svd: non-finite entries");

  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "svd: decomposition did not converge");
  }
  Svd out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  const double cutoff = kRankTolerance * (out.singular_values.size() ? out.singular_values(0) : 0.0);
  for (Index i = 0; i < out.singular_values.size(); ++i) {
    if (out.singular_values(i) <= cutoff) out.singular_values(i) = 0.0;
  }
  return out;
}

SymEig sym_eig(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "sym_eig: matrix must be square and non-empty");
  }
  if (!s.allFinite()) throw Error(ErrorKind::InvalidInput, "sym_eig: non-finite entries");
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    std::ostringstream msg;
    msg << "sym_eig: matrix is not symmetric (max |s_ij - s_ji| = " << asym << ")";
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> dec(s);
  if (dec.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "sym_eig: decomposition did not converge");
  }
  // Eigen returns ascending order.
  return SymEig{dec.eigenvalues().reverse(), dec.eigenvectors().rowwise().reverse()};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (!m.allFinite()) throw Error(ErrorKind::InvalidInput, "spectral_norm: non-finite entries");
  Eigen::BDCSVD<Matrix> dec(m);
  if (dec.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "spectral_norm: decomposition did not converge");
  }
  return dec.singularValues()(0);
}

double subspace_loss(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::InvalidInput, "subspace_loss: dimension mismatch");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "subspace_loss: zero vector");
  }
  const Vector ua = a / na;
  const Vector ub = b / nb;
  // |sin| from the residual of projecting ua onto ub; accurate for tiny angles
  // where 1 - cos^2 would cancel.
  const double c = ua.dot(ub);
  const double sin_angle = std::min(1.0, (ua - c * ub).norm());
  return std::sqrt(2.0) * sin_angle;
}

Index numerical_rank(const Vector& singular_values) {
  if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
  const double cutoff = kRankTolerance * singular_values(0);
  return (singular_values.array() > cutoff).count();
}

}  // namespace linalg
}  // namespace capit
