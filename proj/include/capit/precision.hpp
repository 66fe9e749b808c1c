#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capit/linalg.hpp"
#include "capit/parallel.hpp"

namespace capit::precision {

enum class Method { Tapering, Toeplitz, Thresholding, Clime, Oracle };

const char* to_string(Method m);
/// Accepts "tapering", "toeplitz", "thresholding", "clime", "oracle".
Method parse_method(const std::string& name);

struct PrecisionEstimate {
  Matrix omega;
  Method method = Method::Oracle;
  double tuning = 0.0;  // bandwidth k, threshold gamma or CLIME lambda
  bool pd_repair_applied = false;
  double repair_floor = 0.0;
};

/// (1/n) Xc^T Xc with column-mean centering.
Matrix sample_covariance(const Matrix& x);
/// (1/n) Xc^T Yc; throws InvalidInput on a row-count mismatch.
Matrix sample_cross_covariance(const Matrix& x, const Matrix& y);

/// w_m = 1 for m <= k/2, 2 - 2m/k for k/2 < m <= k, 0 beyond, m = 0..p-1.
/// Valid bandwidths are 1 <= k <= 2p; k >= 2(p-1) leaves every weight at 1.
Vector tapering_weights(Index p, Index k);

/// Entrywise product s_ij * w_|i-j|.
Matrix taper_covariance(const Matrix& s, Index k);
Matrix taper_estimate(const Matrix& x, Index k);

/// Averages each off-diagonal of s, then tapers the averages.
Matrix toeplitz_covariance(const Matrix& s, Index k);
Matrix toeplitz_estimate(const Matrix& x, Index k);

/// gamma * sqrt(log p / n).
double threshold_cutoff(double gamma, Index p, Index n);
/// Zeroes off-diagonal entries with |s_ij| < cutoff; the diagonal is always kept.
Matrix threshold_covariance(const Matrix& s, double cutoff);
Matrix threshold_estimate(const Matrix& x, double gamma);

// --- CLIME -----------------------------------------------------------------

/// Solves min |b|_1 s.t. |S b - e_j|_inf <= lambda for one column (S symmetric)
/// with a bounded dual simplex on the LP in (b+, b-, r = S b). The basis is
/// held in revised active-set form: the active coefficients K, the rows R whose
/// constraint is tight, and the inverse of S[R, K]. Each pivot costs
/// O(p |K|). The basis persists between calls, so a decreasing sequence of
/// lambdas is a warm-started path.
class ClimeColumnSolver {
 public:
  ClimeColumnSolver(const Matrix& s, Index column);

  Vector solve(double lambda);
  int pivots() const { return total_pivots_; }
  Index active_size() const { return static_cast<Index>(active_.size()); }

 private:
  void iterate_to_optimality();
  void refactor();
  Vector tight_values() const;
  Vector exact_solution() const;
  double row_lower(Index i) const;
  double row_upper(Index i) const;

  void replace_active(Index kp, Index column, double sign);
  void replace_tight(Index rp, Index row, bool at_upper);
  void add_pair(Index row, bool at_upper, Index column, double sign);
  void remove_pair(Index kp, Index rp);

  const Matrix& s_;
  Index p_;
  Index column_;
  double lambda_ = 1.0;
  std::vector<Index> active_;     // K: basic coefficients
  std::vector<double> sign_;      // +1 for b+, -1 for b-
  std::vector<Index> tight_;      // R: rows with nonbasic r
  std::vector<char> at_upper_;    // per tight row
  std::vector<Index> active_pos_; // column -> position in K or -1
  std::vector<Index> tight_pos_;  // row -> position in R or -1
  Matrix inverse_;                // (S[R, K])^-1, rows follow K, columns follow R
  int total_pivots_ = 0;
  int updates_since_refactor_ = 0;
};

/// Column-wise CLIME before symmetrization.
Matrix clime_raw(const Matrix& s, double lambda, Execution exec = Execution::Parallel);
/// Keeps, for each (i, j), the smaller-magnitude of a_ij and a_ji.
Matrix clime_symmetrize(const Matrix& raw);
Matrix clime_from_covariance(const Matrix& s, double lambda, Execution exec = Execution::Parallel);
Matrix clime_estimate(const Matrix& x, double lambda, Execution exec = Execution::Parallel);
/// Symmetrized estimates for every lambda, returned in the input order. Each
/// column is solved once along the lambdas sorted in decreasing order.
std::vector<Matrix> clime_path(const Matrix& s, const std::vector<double>& lambdas,
                               Execution exec = Execution::Parallel);

// --- tuning, inversion, diagnostics -----------------------------------------

struct CvResult {
  double selected = 0.0;
  std::vector<double> grid;
  std::vector<double> scores;  // Frobenius loss (minimized) or log-likelihood (maximized)
  bool maximized = false;
};

/// 2:1 train/tuning split by a permutation drawn from `seed`. Tapering,
/// Toeplitz and thresholding minimize ||est(train) - S(tune)||_F; CLIME maximizes
/// log det(Omega) - tr(S(tune) Omega) on the tuning rows. Ties keep the first grid value.
/// Thresholding grid values are absolute cutoffs on |s_ij|, as is the
/// thresholding `tuning` in PrecisionOptions and PrecisionEstimate.
CvResult cv_select(const Matrix& x, Method method, const std::vector<double>& grid, std::uint64_t seed,
                   Execution exec = Execution::Parallel);

/// Bandwidths 1..p (at most 50 log-spaced integers when p > 50); 50 points in
/// [0.01, 0.5] for thresholding; 20 points in [0.05, 0.5] for CLIME.
std::vector<double> default_grid(Method method, Index p);

/// Floor used when none is given: 1e-4 * max(largest eigenvalue, 1).
double default_repair_floor(const Vector& eigenvalues);

/// Inverts a symmetric covariance estimate after lifting eigenvalues below
/// `floor` up to it.
PrecisionEstimate pd_repair_invert(const Matrix& sigma_hat, std::optional<double> floor = std::nullopt);

/// Lifts eigenvalues of a symmetric precision estimate below `floor` (same default rule).
PrecisionEstimate pd_repair_precision(const Matrix& omega_hat, std::optional<double> floor = std::nullopt);

/// ||Omega_hat Sigma - I||.
double omega_consistency_diagnostic(const Matrix& omega_hat, const Matrix& sigma_true);

/// Gaussian log-likelihood up to constants: log det(omega) - tr(s omega).
/// Non-PD omega is repaired first.
double gaussian_log_likelihood(const Matrix& omega, const Matrix& s);

struct PrecisionOptions {
  Method method = Method::Toeplitz;
  std::optional<double> tuning;  // fixed tuning; cross-validated when empty
  std::vector<double> grid;      // empty: default_grid
  std::uint64_t cv_seed = 0;
  Execution exec = Execution::Parallel;
};

/// Full estimator: tuning (fixed or cross-validated), covariance regularizer,
/// repaired inversion (CLIME is repaired directly). Oracle requires `oracle_omega`.
PrecisionEstimate estimate_precision(const Matrix& x, const PrecisionOptions& opts,
                                     const Matrix* oracle_omega = nullptr);

}  // namespace capit::precision
