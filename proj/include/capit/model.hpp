#pragma once

#include <cstdint>
#include <vector>

#include "capit/linalg.hpp"

namespace capit::model {

/// Joint Gaussian of (X, Y) whose cross-covariance is
/// lambda * Sigma1 theta eta^T Sigma2 with theta^T Sigma1 theta = eta^T Sigma2 eta = 1.
struct CanonicalPairModel {
  Matrix sigma1;
  Matrix sigma2;
  Vector theta;
  Vector eta;
  double lambda = 0.0;

  Index p1() const { return sigma1.rows(); }
  Index p2() const { return sigma2.rows(); }
};

/// n paired observations; rows are samples.
struct PairedDataset {
  Matrix x;
  Matrix y;

  Index n() const { return x.rows(); }
  Index p1() const { return x.cols(); }
  Index p2() const { return y.cols(); }

  /// Rows [begin, end) of both views.
  PairedDataset rows(Index begin, Index end) const;
};

enum class ScenarioId {
  ToeplitzCovariance,  // sigma_ij = rho^|i-j|
  BandedPrecision,     // Omega banded (1, 0.5, 0.4), Sigma = Omega^-1
  Custom,              // identity covariances
};

struct ScenarioConfig {
  ScenarioId scenario_id = ScenarioId::ToeplitzCovariance;
  Index p1 = 200;
  Index p2 = 200;
  Index n = 750;  // per-half sample size; simulations draw 2n rows
  std::vector<Index> support_x{0, 5, 10, 15, 20};  // zero-based
  std::vector<Index> support_y{0, 5, 10, 15, 20};
  double rho = 0.3;
  double lambda = 0.9;
};

/// [[Sigma1, lambda Sigma1 theta eta^T Sigma2], [.., Sigma2]]. Throws ModelError.
Matrix assemble_joint_covariance(const CanonicalPairModel& model);

/// Throws ModelError naming the first violated constraint, checked in the order
/// dimensions, positive definiteness, normalization, lambda range.
void validate_model(const CanonicalPairModel& model);

/// Reusable sampler: the eigen square root of the joint covariance is computed once.
class GaussianSampler {
 public:
  explicit GaussianSampler(const CanonicalPairModel& model);

  /// n i.i.d. rows; normals are drawn row by row from CounterRng(seed).
  PairedDataset draw(Index n, std::uint64_t seed) const;

 private:
  Matrix factor_t_;  // transpose of Q diag(sqrt(max(l, 0)))
  Index p1_;
  Index p2_;
};

PairedDataset sample(const CanonicalPairModel& model, Index n, std::uint64_t seed);

Matrix toeplitz_covariance(Index p, double rho);
Matrix banded_precision(Index p);

CanonicalPairModel make_scenario_model(const ScenarioConfig& cfg);

/// Random direction whose sorted magnitudes satisfy |theta_(k)|^q <= s/k after
/// scaling to theta^T sigma theta = 1. q = 0 gives floor(s) equal-magnitude
/// entries; q > 0 uses the profile (s/k)^(1/q). Support positions and signs are
/// drawn from `seed`. Throws InvalidConfig when the scaled vector violates the bound.
Vector weak_lq_direction(Index p, double s, double q, const Matrix& sigma, std::uint64_t seed);

/// Largest k-th-order ratio |theta_(k)|^q * k / s; <= 1 iff theta is in the weak l_q ball.
double weak_lq_ratio(const Vector& theta, double s, double q);

}  // namespace capit::model
