#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capit/errors.hpp"
#include "capit/linalg.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"

namespace capit {

enum class ThresholdKind { Hard, Soft, Scad };

const char* to_string(ThresholdKind kind);
/// Accepts "hard", "soft", "scad".
ThresholdKind parse_threshold_kind(const std::string& name);

struct ThresholdRule {
  ThresholdKind kind = ThresholdKind::Hard;
  double scad_a = 3.7;  // Scad only, must exceed 2
};

/// Coordinatewise T(v_k, t). Hard keeps |v_k| >= t, Soft shrinks by t, Scad
/// uses the three-piece rule with breakpoints t, 2t and a*t. t = 0 returns v.
Vector apply_threshold(const Vector& v, double t, const ThresholdRule& rule);

struct ThresholdLevels {
  Matrix t;  // p1 x p2 coordinate levels
  double gamma1 = 0.0;
  double gamma2 = 0.0;
};

/// Levels computed from the spectral norms and diagonals of the two precision
/// estimates; p = max(p1, p2) inside the log.
ThresholdLevels data_driven_levels(const Matrix& omega1, const Matrix& omega2, Index n);

/// gamma = c sqrt(log p / n) on both sides and t_ij = t_const.
ThresholdLevels manual_levels(double c1, double c2, double t_const, Index p1, Index p2, Index n);

/// Omega1 Sigma12 Omega2. Throws InvalidInput on non-conformable shapes.
Matrix build_a_hat(const Matrix& omega1, const Matrix& omega2, const Matrix& sigma12_hat);

struct InitialPair {
  Vector alpha;
  Vector beta;
  std::vector<Index> rows;  // B1, ascending
  std::vector<Index> cols;  // B2, ascending
  bool fallback_rows = false;
  bool fallback_cols = false;
};

/// Keeps rows i with max_j |a_ij| / t_ij >= sqrt(log p1 / n) and columns j with
/// max_i |a_ij| / t_ij >= sqrt(log p2 / n), takes the leading singular pair of
/// the kept block and zero-pads it. An empty set falls back to the single
/// index with the largest ratio. The pair is sign-normalized.
InitialPair initialize(const Matrix& a_hat, const Matrix& t, Index n);

/// Flips (alpha, beta) jointly so the largest-magnitude alpha entry (first on
/// ties) is positive, then flips beta alone if alpha^T A beta < 0.
void normalize_signs(Vector& alpha, Vector& beta, const Matrix& a_hat);

struct IterationTrace {
  int iteration = 0;
  Index alpha_support = 0;
  Index beta_support = 0;
  double alpha_change = 0.0;  // subspace loss to the previous iterate
  double beta_change = 0.0;
};

struct CcaEstimate {
  Vector alpha_hat;
  Vector beta_hat;
  double lambda_hat = 0.0;
  int iterations_run = 0;
  std::vector<IterationTrace> trace;
  bool halves_averaged = false;
  std::vector<std::string> flags;
};

/// Alternating multiply / threshold / normalize, at most k_max rounds,
/// stopping once both successive subspace losses are <= tol. lambda_hat is
/// alpha^T A beta. Throws AllCoordinatesKilledError when a threshold removes
/// every coordinate.
CcaEstimate iterate(const Matrix& a_hat, const Vector& alpha0, const Vector& beta0, double gamma1, double gamma2,
                    const ThresholdRule& rule, int k_max, double tol);

struct CapitConfig {
  ThresholdRule rule;
  std::optional<double> gamma1 = 2.0;  // constant c in c sqrt(log p / n); empty = data-driven
  std::optional<double> gamma2 = 2.0;
  std::optional<double> t_const = 2.0; // empty = data-driven t_ij
  int max_iters = 20;
  double tol = 1e-6;
  bool swap_and_average = true;
  std::uint64_t seed = 0;  // drives precision cross-validation

  /// Throws InvalidConfig when K < 1, tol <= 0 or a manual constant is not positive.
  void validate() const;
};

/// Fit on one split: precision from `precision_half`, cross-covariance from
/// `cross_half`. `oracle` supplies (Omega1, Omega2) for Method::Oracle.
struct HalfFit {
  CcaEstimate estimate;
  precision::PrecisionEstimate omega1;
  precision::PrecisionEstimate omega2;
  ThresholdLevels levels;
  Matrix a_hat;
  InitialPair init;
};

HalfFit fit_half(const model::PairedDataset& cross_half, const model::PairedDataset& precision_half,
                 const precision::PrecisionOptions& popts, const CapitConfig& cfg,
                 const std::pair<Matrix, Matrix>* oracle = nullptr);

/// Sign-aligns `second` to `first` (joint flip when the summed inner
/// products are negative), averages, renormalizes and applies the sign
/// convention against `a_hat_sum`.
CcaEstimate combine_halves(const CcaEstimate& first, const CcaEstimate& second, const Matrix& a_hat_sum);

/// Splits rows into the first and second halves, fits, optionally swaps the
/// roles and averages the sign-aligned unit vectors. Errors from one half are
/// rethrown with the half named in the message.
CcaEstimate capit_fit(const model::PairedDataset& data, const precision::PrecisionOptions& popts,
                      const CapitConfig& cfg, const std::pair<Matrix, Matrix>* oracle = nullptr);

}  // namespace capit
