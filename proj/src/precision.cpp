#include "capit/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "capit/errors.hpp"
#include "capit/rng.hpp"

namespace capit::precision {

const char* to_string(Method m) {
  switch (m) {
    case Method::Tapering: return "tapering";
    case Method::Toeplitz: return "toeplitz";
    case Method::Thresholding: return "thresholding";
    case Method::Clime: return "clime";
    case Method::Oracle: return "oracle";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "tapering") return Method::Tapering;
  if (name == "toeplitz") return Method::Toeplitz;
  if (name == "thresholding") return Method::Thresholding;
  if (name == "clime") return Method::Clime;
  if (name == "oracle") return Method::Oracle;
  throw Error(ErrorKind::InvalidConfig, "unknown precision method '" + name + "'");
}

Matrix sample_covariance(const Matrix& x) {
  if (x.rows() < 2) throw Error(ErrorKind::InvalidInput, "sample_covariance: need at least 2 rows");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix s = (centered.transpose() * centered) / static_cast<double>(x.rows());
  return 0.5 * (s + s.transpose());
}

Matrix sample_cross_covariance(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    std::ostringstream msg;
    msg << "sample_cross_covariance: row counts differ (" << x.rows() << " vs " << y.rows() << ")";
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
  if (x.rows() < 2) throw Error(ErrorKind::InvalidInput, "sample_cross_covariance: need at least 2 rows");
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  return (xc.transpose() * yc) / static_cast<double>(x.rows());
}

Vector tapering_weights(Index p, Index k) {
  if (p < 1) throw Error(ErrorKind::InvalidConfig, "tapering_weights: p must be positive");
  if (k < 1 || k > 2 * p) {
    std::ostringstream msg;
    msg << "tapering_weights: bandwidth " << k << " outside [1, " << 2 * p << "]";
    throw Error(ErrorKind::InvalidConfig, msg.str());
  }
  Vector w(p);
  const double kd = static_cast<double>(k);
  for (Index m = 0; m < p; ++m) {
    const double md = static_cast<double>(m);
    if (2.0 * md <= kd) {
      w(m) = 1.0;
    } else if (md <= kd) {
      w(m) = 2.0 - 2.0 * md / kd;
    } else {
      w(m) = 0.0;
    }
  }
  return w;
}

Matrix taper_covariance(const Matrix& s, Index k) {
  const Index p = s.rows();
  const Vector w = tapering_weights(p, k);
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) out(i, j) = s(i, j) * w(std::abs(i - j));
  }
  return out;
}

Matrix taper_estimate(const Matrix& x, Index k) { return taper_covariance(sample_covariance(x), k); }

Matrix toeplitz_covariance(const Matrix& s, Index k) {
  const Index p = s.rows();
  const Vector w = tapering_weights(p, k);
  Vector band(p);
  for (Index m = 0; m < p; ++m) {
    // average of both the upper and lower m-th diagonals (identical for symmetric s)
    band(m) = 0.5 * (s.diagonal(m).mean() + s.diagonal(-m).mean()) * w(m);
  }
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) out(i, j) = band(std::abs(i - j));
  }
  return out;
}

Matrix toeplitz_estimate(const Matrix& x, Index k) { return toeplitz_covariance(sample_covariance(x), k); }

double threshold_cutoff(double gamma, Index p, Index n) {
  if (!(gamma >= 0.0)) throw Error(ErrorKind::InvalidConfig, "threshold: gamma must be nonnegative");
  if (n < 1 || p < 1) throw Error(ErrorKind::InvalidInput, "threshold: p and n must be positive");
  return gamma * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

Matrix threshold_covariance(const Matrix& s, double cutoff) {
  Matrix out = s;
  for (Index j = 0; j < s.cols(); ++j) {
    for (Index i = 0; i < s.rows(); ++i) {
      if (i != j && std::abs(s(i, j)) < cutoff) out(i, j) = 0.0;
    }
  }
  return out;
}

Matrix threshold_estimate(const Matrix& x, double gamma) {
  return threshold_covariance(sample_covariance(x), threshold_cutoff(gamma, x.cols(), x.rows()));
}

Matrix clime_estimate(const Matrix& x, double lambda, Execution exec) {
  return clime_from_covariance(sample_covariance(x), lambda, exec);
}

std::vector<double> default_grid(Method method, Index p) {
  std::vector<double> grid;
  switch (method) {
    case Method::Tapering:
    case Method::Toeplitz: {
      if (p <= 50) {
        for (Index k = 1; k <= p; ++k) grid.push_back(static_cast<double>(k));
      } else {
        std::set<Index> ks;
        for (int i = 0; i < 50; ++i) {
          const double t = static_cast<double>(i) / 49.0;
          ks.insert(static_cast<Index>(std::llround(std::exp(t * std::log(static_cast<double>(p))))));
        }
        for (Index k : ks) grid.push_back(static_cast<double>(k));
      }
      break;
    }
    case Method::Thresholding:
      for (int i = 0; i < 50; ++i) grid.push_back(0.01 + 0.49 * static_cast<double>(i) / 49.0);
      break;
    case Method::Clime:
      for (int i = 0; i < 20; ++i) grid.push_back(0.05 + 0.45 * static_cast<double>(i) / 19.0);
      break;
    case Method::Oracle:
      break;
  }
  return grid;
}

double default_repair_floor(const Vector& eigenvalues) {
  return 1e-4 * std::max(eigenvalues.maxCoeff(), 1.0);
}

PrecisionEstimate pd_repair_invert(const Matrix& sigma_hat, std::optional<double> floor) {
  const linalg::SymEig eig = linalg::sym_eig(sigma_hat);
  const double f = floor.value_or(default_repair_floor(eig.eigenvalues));
  if (!(f > 0.0)) throw Error(ErrorKind::InvalidConfig, "pd_repair_invert: floor must be positive");
  PrecisionEstimate est;
  est.repair_floor = f;
  est.pd_repair_applied = (eig.eigenvalues.array() < f).any();
  Matrix omega = linalg::spectral_apply(eig, [f](double v) { return 1.0 / std::max(v, f); });
  est.omega = 0.5 * (omega + omega.transpose());
  return est;
}

PrecisionEstimate pd_repair_precision(const Matrix& omega_hat, std::optional<double> floor) {
  const linalg::SymEig eig = linalg::sym_eig(omega_hat);
  const double f = floor.value_or(default_repair_floor(eig.eigenvalues));
  PrecisionEstimate est;
  est.repair_floor = f;
  est.pd_repair_applied = (eig.eigenvalues.array() < f).any();
  if (est.pd_repair_applied) {
    Matrix omega = linalg::spectral_apply(eig, [f](double v) { return std::max(v, f); });
    est.omega = 0.5 * (omega + omega.transpose());
  } else {
    est.omega = omega_hat;
  }
  return est;
}

double omega_consistency_diagnostic(const Matrix& omega_hat, const Matrix& sigma_true) {
  if (omega_hat.rows() != sigma_true.rows() || omega_hat.cols() != sigma_true.cols()) {
    throw Error(ErrorKind::InvalidInput, "omega_consistency_diagnostic: dimension mismatch");
  }
  const Matrix resid = omega_hat * sigma_true - Matrix::Identity(omega_hat.rows(), omega_hat.cols());
  return linalg::spectral_norm(resid);
}

double gaussian_log_likelihood(const Matrix& omega, const Matrix& s) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    return gaussian_log_likelihood(pd_repair_precision(omega).omega, s);
  }
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return log_det - (s.cwiseProduct(omega)).sum();
}

namespace {

Matrix regularized_covariance(Method method, const Matrix& s, double tuning) {
  switch (method) {
    case Method::Tapering:
      return taper_covariance(s, static_cast<Index>(std::llround(tuning)));
    case Method::Toeplitz:
      return toeplitz_covariance(s, static_cast<Index>(std::llround(tuning)));
    case Method::Thresholding:
      return threshold_covariance(s, tuning);
    default:
      break;
  }
  throw Error(ErrorKind::InvalidConfig, "regularized_covariance: method has no covariance form");
}

}  // namespace

CvResult cv_select(const Matrix& x, Method method, const std::vector<double>& grid, std::uint64_t seed,
                   Execution exec) {
  if (grid.empty()) throw Error(ErrorKind::InvalidConfig, "cv_select: empty grid");
  if (method == Method::Oracle) throw Error(ErrorKind::InvalidConfig, "cv_select: oracle has no tuning");
  CvResult result;
  result.grid = grid;
  result.maximized = method == Method::Clime;
  if (grid.size() == 1) {
    result.selected = grid.front();
    result.scores.assign(1, 0.0);
    return result;
  }
  const Index n = x.rows();
  if (n < 6) throw Error(ErrorKind::InvalidInput, "cv_select: need at least 6 rows for a 2:1 split");

  CounterRng rng(seed);
  const std::vector<long> perm = random_permutation(static_cast<long>(n), rng);
  const Index n_train = (2 * n) / 3;
  Matrix train(n_train, x.cols());
  Matrix tune(n - n_train, x.cols());
  for (Index i = 0; i < n; ++i) {
    if (i < n_train) {
      train.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    } else {
      tune.row(i - n_train) = x.row(perm[static_cast<std::size_t>(i)]);
    }
  }
  const Matrix s_train = sample_covariance(train);
  const Matrix s_tune = sample_covariance(tune);

  result.scores.assign(grid.size(), 0.0);
  if (method == Method::Clime) {
    std::vector<Matrix> path;
    try {
      path = clime_path(s_train, grid, exec);
    } catch (const Error&) {
      path.clear();
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      try {
        const Matrix omega = path.empty() ? clime_from_covariance(s_train, grid[g], exec) : path[g];
        result.scores[g] = gaussian_log_likelihood(omega, s_tune);
      } catch (const Error&) {
        result.scores[g] = -std::numeric_limits<double>::infinity();
      }
    }
  } else {
    for_each_index(static_cast<long>(grid.size()), exec, [&](long g) {
      const Matrix est = regularized_covariance(method, s_train, grid[static_cast<std::size_t>(g)]);
      result.scores[static_cast<std::size_t>(g)] = (est - s_tune).norm();
    });
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const bool better = result.maximized ? result.scores[g] > result.scores[best] : result.scores[g] < result.scores[best];
    if (better) best = g;
  }
  if (result.maximized && !std::isfinite(result.scores[best])) {
    throw Error(ErrorKind::NumericalFailure, "cv_select: CLIME failed at every grid value");
  }
  result.selected = grid[best];
  return result;
}

PrecisionEstimate estimate_precision(const Matrix& x, const PrecisionOptions& opts, const Matrix* oracle_omega) {
  if (opts.method == Method::Oracle) {
    if (oracle_omega == nullptr) throw Error(ErrorKind::InvalidConfig, "oracle precision requires the true precision");
    if (oracle_omega->rows() != x.cols()) throw Error(ErrorKind::InvalidInput, "oracle precision has wrong dimension");
    PrecisionEstimate est;
    est.omega = *oracle_omega;
    est.method = Method::Oracle;
    return est;
  }

  double tuning = 0.0;
  if (opts.tuning) {
    tuning = *opts.tuning;
  } else {
    const std::vector<double> grid = opts.grid.empty() ? default_grid(opts.method, x.cols()) : opts.grid;
    tuning = cv_select(x, opts.method, grid, opts.cv_seed, opts.exec).selected;
  }

  PrecisionEstimate est;
  if (opts.method == Method::Clime) {
    est = pd_repair_precision(clime_estimate(x, tuning, opts.exec));
  } else {
    est = pd_repair_invert(regularized_covariance(opts.method, sample_covariance(x), tuning));
  }
  est.method = opts.method;
  est.tuning = tuning;
  return est;
}

}  // namespace capit::precision
