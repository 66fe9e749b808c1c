#pragma once

#include <cstdint>
#include <vector>

#include "capit/capit.hpp"
#include "capit/model.hpp"
#include "capit/parallel.hpp"

namespace capit::baselines {

/// Symmetric pseudo-inverse square root; eigenvalues below 1e-10 * max map to 0.
Matrix pinv_sqrt(const Matrix& s);

/// Leading singular pair of S11^-1/2 S12 S22^-1/2 mapped back through the
/// inverse roots and scaled to unit length. lambda_hat is the leading
/// singular value.
CcaEstimate classical_cca_from_covariance(const Matrix& s11, const Matrix& s22, const Matrix& s12);
CcaEstimate classical_cca(const model::PairedDataset& data);

struct PmdConfig {
  double c1 = 1.0;  // l1 budget on u, in [1, sqrt(p1)]
  double c2 = 1.0;  // l1 budget on v, in [1, sqrt(p2)]
  int max_iters = 100;
  double tol = 1e-8;

  void validate(Index p1, Index p2) const;
};

struct PmdResult {
  Vector u;
  Vector v;
  double objective = 0.0;  // u^T S12 v
  int iterations = 0;
  std::vector<double> objective_trace;  // after each (u, v) round
};

/// argmax a^T x over |x|_2 <= 1, |x|_1 <= c: soft-threshold at the smallest
/// level that meets the budget (32 bisection steps, feasible end kept),
/// then normalize. c <= 1 selects the largest-magnitude coordinate.
Vector l1_unit_maximizer(const Vector& a, double c);

/// Alternating maximization of u^T S12 v. Without `v0` it runs from the leading
/// right singular vector and from the column of the largest |entry|, keeping
/// the higher objective. Throws DegenerateInput on a zero matrix.
PmdResult pmd_rank1(const Matrix& sigma12_hat, const PmdConfig& cfg, const Vector* v0 = nullptr);

struct PmdTuning {
  double c1 = 1.0;
  double c2 = 1.0;
  double fraction = 0.0;
  std::vector<double> fractions;
  std::vector<double> gaps;  // (observed - null mean) / null sd per fraction
};

/// Budgets c = max(1, f sqrt(p)) on each side for f in `fractions`.
/// Observed objectives are compared with those of `n_perms` row permutations
/// of Y; the fraction with the largest standardized gap wins (first on ties).
PmdTuning pmd_permutation_tune(const model::PairedDataset& data, const std::vector<double>& fractions, int n_perms,
                               std::uint64_t seed, Execution exec = Execution::Parallel);

std::vector<double> default_pmd_fractions();

/// Tuned PMD on the cross-covariance of all rows.
CcaEstimate pmd_fit(const model::PairedDataset& data, int n_perms, std::uint64_t seed,
                    Execution exec = Execution::Parallel);

}  // namespace capit::baselines
