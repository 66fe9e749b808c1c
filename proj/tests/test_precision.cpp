#include <gtest/gtest.h>

#include <cmath>

#include "capit/errors.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"
#include "checks.hpp"
#include "oracles.hpp"

using namespace capit;
using namespace capit::precision;
using capit::testing::random_matrix;

TEST(SampleCovariance, TwoPointSample) {
  Matrix x(2, 2);
  x << 1, 0, -1, 0;
  Matrix want(2, 2);
  want << 1, 0, 0, 0;
  EXPECT_EQ(sample_covariance(x), want);
}

TEST(SampleCovariance, ConstantColumn) {
  CounterRng rng(1);
  Matrix x = random_matrix(10, 3, rng);
  x.col(1).setConstant(4.0);
  const Matrix s = sample_covariance(x);
  EXPECT_NEAR(s.row(1).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  EXPECT_NEAR(s.col(1).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(SampleCovariance, MonteCarlo) {
  model::CanonicalPairModel m;
  m.sigma1 = Matrix::Identity(2, 2);
  m.sigma1(0, 1) = m.sigma1(1, 0) = 0.3;
  m.sigma2 = m.sigma1;
  m.theta = Vector::Unit(2, 0);
  m.eta = Vector::Unit(2, 0);
  m.lambda = 0.5;
  const model::PairedDataset d = model::sample(m, 100000, 3);
  EXPECT_LT((sample_covariance(d.x) - m.sigma1).cwiseAbs().maxCoeff(), 0.02);
  Matrix cross = Matrix::Zero(2, 2);
  cross = m.lambda * m.sigma1 * m.theta * m.eta.transpose() * m.sigma2;
  EXPECT_LT((sample_cross_covariance(d.x, d.y) - cross).cwiseAbs().maxCoeff(), 0.02);
}

TEST(SampleCrossCovariance, Examples) {
  Matrix x(2, 1), y(2, 2);
  x << 1, -1;
  y << 2, 5, -2, 5;
  Matrix want(1, 2);
  want << 2, 0;
  EXPECT_EQ(sample_cross_covariance(x, y), want);
  try {
    sample_cross_covariance(Matrix::Zero(3, 1), Matrix::Zero(4, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(TaperingWeights, Examples) {
  Vector want(8);
  want << 1, 1, 1, 0.5, 0, 0, 0, 0;
  EXPECT_EQ(tapering_weights(8, 4), want);
  const Vector full = tapering_weights(7, 7);
  EXPECT_TRUE((full.array() > 0.0).all());
  EXPECT_NEAR(full(6), 2.0 - 2.0 * 6.0 / 7.0, 1e-15);
  EXPECT_EQ(tapering_weights(5, 1), Vector::Unit(5, 0));
  EXPECT_THROW(tapering_weights(5, 0), Error);
  EXPECT_THROW(tapering_weights(5, 11), Error);
  for (Index k = 1; k <= 16; ++k) {
    const Vector w = tapering_weights(8, k);
    for (Index m = 1; m < 8; ++m) EXPECT_LE(w(m), w(m - 1));
    EXPECT_GE(w.minCoeff(), 0.0);
    EXPECT_LE(w.maxCoeff(), 1.0);
  }
}

TEST(Taper, Examples) {
  CounterRng rng(2);
  const Matrix x = random_matrix(30, 6, rng);
  const Matrix s = sample_covariance(x);
  EXPECT_EQ(taper_estimate(x, 10), s);
  EXPECT_EQ(taper_estimate(x, 1), Matrix(s.diagonal().asDiagonal()));

  Matrix s4(4, 4);
  s4 << 4, 1, 2, 3, 1, 5, 1, 2, 2, 1, 6, 1, 3, 2, 1, 7;
  Matrix want = s4;
  // k = 2: weights (1, 1, 0, 0)
  want(0, 2) = want(2, 0) = want(0, 3) = want(3, 0) = want(1, 3) = want(3, 1) = 0.0;
  EXPECT_EQ(taper_covariance(s4, 2), want);
}

TEST(Toeplitz, OffDiagonalAveraging) {
  Matrix s(3, 3);
  s << 1, 2, 3, 2, 1, 2, 3, 2, 1;
  EXPECT_EQ(toeplitz_covariance(s, 4), s);
  Matrix r(3, 3);
  r << 1, 2, 3, 4, 2, 2, 5, 6, 3;
  const Matrix t = toeplitz_covariance(0.5 * (r + r.transpose()), 6);
  EXPECT_NEAR(t(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(t(0, 1), (3.0 + 4.0) / 2.0, 1e-15);
  EXPECT_NEAR(t(0, 2), 4.0, 1e-15);
  EXPECT_EQ(toeplitz_covariance(s, 1), Matrix::Identity(3, 3));
}

TEST(Toeplitz, EntriesDependOnLagOnly) {
  CounterRng rng(4);
  const Matrix t = toeplitz_estimate(random_matrix(40, 9, rng), 5);
  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 9; ++j) EXPECT_EQ(t(i, j), t(0, std::abs(i - j)));
  }
}

TEST(TaperToeplitz, LinearInCovariance) {
  CounterRng rng(5);
  for (int k = 0; k < 10; ++k) {
    const Matrix s1 = sample_covariance(random_matrix(20, 7, rng));
    const Matrix s2 = sample_covariance(random_matrix(20, 7, rng));
    const double a = rng.normal();
    const double b = rng.normal();
    EXPECT_LT((taper_covariance(a * s1 + b * s2, 4) - (a * taper_covariance(s1, 4) + b * taper_covariance(s2, 4)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
    EXPECT_LT((toeplitz_covariance(a * s1 + b * s2, 4) -
               (a * toeplitz_covariance(s1, 4) + b * toeplitz_covariance(s2, 4)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(ThresholdedCovariance, Examples) {
  CounterRng rng(6);
  const Matrix x = random_matrix(25, 5, rng);
  EXPECT_EQ(threshold_estimate(x, 0.0), sample_covariance(x));

  Matrix s(3, 3);
  s << 1, 0.05, 0.1, 0.05, 1, 0.2, 0.1, 0.2, 0.01;
  const Matrix t = threshold_covariance(s, 0.1);
  EXPECT_EQ(t(0, 1), 0.0);
  EXPECT_EQ(t(0, 2), 0.1);  // equal to the cutoff: kept
  EXPECT_EQ(t(1, 2), 0.2);
  EXPECT_EQ(t(2, 2), 0.01);  // diagonal never thresholded
  EXPECT_EQ(threshold_covariance(t, 0.1), t);
  EXPECT_NEAR(threshold_cutoff(2.0, 100, 400), 2.0 * std::sqrt(std::log(100.0) / 400.0), 1e-15);
}

TEST(Clime, IdentityShrinks) {
  const Matrix omega = clime_from_covariance(Matrix::Identity(4, 4), 0.1);
  EXPECT_LT((omega - 0.9 * Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Clime, ExactConstraintInverts) {
  CounterRng rng(7);
  const Matrix s = capit::testing::random_spd(3, rng);
  EXPECT_LT((clime_from_covariance(s, 0.0) - s.inverse()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Clime, LpOracle) {
  const auto r = capit::testing::check_clime_lp_oracle(5);
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(Clime, FeasibleAndSymmetric) {
  const auto r = capit::testing::check_clime_feasibility();
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(Clime, PathMatchesSingleSolves) {
  CounterRng rng(8);
  const Matrix s = sample_covariance(random_matrix(40, 12, rng));
  const std::vector<double> lambdas{0.1, 0.4, 0.2};
  const std::vector<Matrix> path = clime_path(s, lambdas, Execution::Serial);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    EXPECT_LT((path[i] - clime_from_covariance(s, lambdas[i], Execution::Serial)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Clime, SerialAndParallelIdentical) {
  CounterRng rng(9);
  const Matrix s = sample_covariance(random_matrix(60, 30, rng));
  EXPECT_EQ(clime_raw(s, 0.15, Execution::Serial), clime_raw(s, 0.15, Execution::Parallel));
  const auto a = clime_path(s, {0.1, 0.3}, Execution::Serial);
  const auto b = clime_path(s, {0.1, 0.3}, Execution::Parallel);
  EXPECT_EQ(a[0], b[0]);
  EXPECT_EQ(a[1], b[1]);
}

TEST(CvSelect, SingleValueAndEmptyGrid) {
  CounterRng rng(10);
  const Matrix x = random_matrix(30, 4, rng);
  EXPECT_EQ(cv_select(x, Method::Tapering, {3.0}, 1).selected, 3.0);
  try {
    cv_select(x, Method::Tapering, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
}

TEST(CvSelect, TaperingBeatsNoTaper) {
  model::ScenarioConfig sc;
  sc.p1 = sc.p2 = 60;
  const model::PairedDataset d = model::sample(model::make_scenario_model(sc), 300, 11);
  std::vector<double> grid;
  for (int k = 1; k <= 60; ++k) grid.push_back(k);
  const CvResult r = cv_select(d.x, Method::Tapering, grid, 5);
  EXPECT_LE(*std::min_element(r.scores.begin(), r.scores.end()), r.scores.back());
  const auto at = std::find(grid.begin(), grid.end(), r.selected) - grid.begin();
  EXPECT_LE(r.scores[static_cast<std::size_t>(at)], r.scores.back());
  EXPECT_FALSE(r.maximized);
}

TEST(CvSelect, ClimeArgmax) {
  model::ScenarioConfig sc;
  sc.scenario_id = model::ScenarioId::BandedPrecision;
  sc.p1 = sc.p2 = 25;
  const model::PairedDataset d = model::sample(model::make_scenario_model(sc), 150, 12);
  std::vector<double> grid;
  for (int i = 0; i < 50; ++i) grid.push_back(0.01 + 0.49 * i / 49.0);
  const CvResult r = cv_select(d.x, Method::Clime, grid, 6);
  EXPECT_TRUE(r.maximized);
  const double best = *std::max_element(r.scores.begin(), r.scores.end());
  const auto at = std::find(grid.begin(), grid.end(), r.selected) - grid.begin();
  EXPECT_EQ(r.scores[static_cast<std::size_t>(at)], best);
}

TEST(CvSelect, Deterministic) {
  CounterRng rng(13);
  const Matrix x = random_matrix(60, 10, rng);
  const auto grid = default_grid(Method::Thresholding, 10);
  EXPECT_EQ(cv_select(x, Method::Thresholding, grid, 3).scores, cv_select(x, Method::Thresholding, grid, 3).scores);
  EXPECT_EQ(cv_select(x, Method::Thresholding, grid, 3, Execution::Serial).scores,
            cv_select(x, Method::Thresholding, grid, 3, Execution::Parallel).scores);
}

TEST(DefaultGrid, Shapes) {
  EXPECT_EQ(default_grid(Method::Tapering, 30).size(), 30u);
  EXPECT_EQ(default_grid(Method::Toeplitz, 200).size(), 38u);
  const auto th = default_grid(Method::Thresholding, 200);
  EXPECT_EQ(th.size(), 50u);
  EXPECT_DOUBLE_EQ(th.front(), 0.01);
  EXPECT_DOUBLE_EQ(th.back(), 0.5);
  EXPECT_EQ(default_grid(Method::Clime, 200).size(), 20u);
}

TEST(PdRepair, Examples) {
  CounterRng rng(14);
  const Matrix s = capit::testing::random_spd(5, rng);
  const PrecisionEstimate exact = pd_repair_invert(s);
  EXPECT_FALSE(exact.pd_repair_applied);
  EXPECT_LT((exact.omega * s - Matrix::Identity(5, 5)).norm(), 1e-10);

  Matrix ones = Matrix::Ones(2, 2);
  const PrecisionEstimate fixed = pd_repair_invert(ones);
  EXPECT_TRUE(fixed.pd_repair_applied);
  EXPECT_TRUE(linalg::all_finite(fixed.omega));

  for (int k = 0; k < 20; ++k) {
    const Matrix g = random_matrix(6, 3, rng);
    const Matrix low = g * g.transpose() - 0.1 * Matrix::Identity(6, 6);
    const double floor = 0.01 + rng.uniform();
    const PrecisionEstimate r = pd_repair_precision(low, floor);
    EXPECT_GE(linalg::sym_eig(r.omega).eigenvalues.minCoeff(), floor * (1 - 1e-8));
  }
}

TEST(PdRepair, TaperedScenarioResidual) {
  model::ScenarioConfig sc;
  const model::PairedDataset d = model::sample(model::make_scenario_model(sc), 500, 15);
  const Matrix sigma_hat = taper_estimate(d.x, 10);
  const PrecisionEstimate est = pd_repair_invert(sigma_hat);
  const linalg::SymEig eig = linalg::sym_eig(sigma_hat);
  const Matrix lifted = linalg::spectral_apply(eig, [&](double v) { return std::max(v, est.repair_floor); });
  EXPECT_LT(linalg::spectral_norm(est.omega * lifted - Matrix::Identity(200, 200)), 1e-8);
}

TEST(Diagnostic, Examples) {
  CounterRng rng(16);
  const Matrix s = capit::testing::random_spd(4, rng);
  EXPECT_LT(omega_consistency_diagnostic(s.inverse(), s), 1e-10);
  EXPECT_NEAR(omega_consistency_diagnostic(Matrix::Identity(3, 3), 2.0 * Matrix::Identity(3, 3)), 1.0, 1e-14);
}

TEST(Diagnostic, ClimeImprovesWithN) {
  model::ScenarioConfig sc;
  sc.scenario_id = model::ScenarioId::BandedPrecision;
  sc.p1 = sc.p2 = 50;
  const model::CanonicalPairModel m = model::make_scenario_model(sc);
  double prev = 1e9;
  for (Index n : {250, 500, 750}) {
    const model::PairedDataset d = model::sample(m, n, 17);
    const double xi = omega_consistency_diagnostic(clime_estimate(d.x, 0.1), m.sigma1);
    EXPECT_LT(xi, prev);
    prev = xi;
  }
}

TEST(EstimatePrecision, OracleNeedsMatrix) {
  PrecisionOptions o;
  o.method = Method::Oracle;
  EXPECT_THROW(estimate_precision(Matrix::Zero(10, 3), o), Error);
  const Matrix om = 2.0 * Matrix::Identity(3, 3);
  EXPECT_EQ(estimate_precision(Matrix::Zero(10, 3), o, &om).omega, om);
}

TEST(EstimatePrecision, SymmetricPositiveDefinite) {
  model::ScenarioConfig sc;
  sc.p1 = sc.p2 = 40;
  const model::PairedDataset d = model::sample(model::make_scenario_model(sc), 120, 18);
  for (Method m : {Method::Tapering, Method::Toeplitz, Method::Thresholding, Method::Clime}) {
    PrecisionOptions o;
    o.method = m;
    o.cv_seed = 3;
    const PrecisionEstimate est = estimate_precision(d.x, o);
    EXPECT_LT((est.omega - est.omega.transpose()).cwiseAbs().maxCoeff(), 1e-8) << to_string(m);
    EXPECT_GT(linalg::sym_eig(0.5 * (est.omega + est.omega.transpose())).eigenvalues.minCoeff(), 0.0)
        << to_string(m);
  }
}
