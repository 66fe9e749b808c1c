#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "capit/errors.hpp"
#include "capit/model.hpp"
#include "capit/precision.hpp"

using namespace capit;
using namespace capit::model;

namespace {

CanonicalPairModel identity_model(Index p, double lambda) {
  CanonicalPairModel m;
  m.sigma1 = Matrix::Identity(p, p);
  m.sigma2 = Matrix::Identity(p, p);
  m.theta = Vector::Unit(p, 0);
  m.eta = Vector::Unit(p, 0);
  m.lambda = lambda;
  return m;
}

ModelViolation violation_of(const CanonicalPairModel& m) {
  try {
    validate_model(m);
  } catch (const ModelError& e) {
    return e.violation();
  }
  ADD_FAILURE() << "model unexpectedly valid";
  return ModelViolation::DimensionMismatch;
}

ScenarioConfig small_scenario(ScenarioId id, Index p) {
  ScenarioConfig cfg;
  cfg.scenario_id = id;
  cfg.p1 = p;
  cfg.p2 = p;
  cfg.support_x = {0, 5};
  cfg.support_y = {0, 5};
  return cfg;
}

}  // namespace

TEST(JointCovariance, IdentityBlocks) {
  const Matrix j = assemble_joint_covariance(identity_model(2, 0.9));
  EXPECT_EQ(j(0, 2), 0.9);
  EXPECT_EQ(j(2, 0), 0.9);
  EXPECT_EQ(j(1, 3), 0.0);
  EXPECT_EQ(j(0, 3), 0.0);
}

TEST(JointCovariance, PerfectCorrelationIsSingular) {
  const Matrix j = assemble_joint_covariance(identity_model(2, 1.0));
  EXPECT_NEAR(linalg::sym_eig(j).eigenvalues.minCoeff(), 0.0, 1e-12);
}

TEST(JointCovariance, ScenarioOneIsPsd) {
  const CanonicalPairModel m = make_scenario_model(small_scenario(ScenarioId::ToeplitzCovariance, 10));
  const Matrix j = assemble_joint_covariance(m);
  EXPECT_LT((j - j.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(linalg::sym_eig(j).eigenvalues.minCoeff(), -1e-8 * linalg::spectral_norm(j));
}

TEST(ValidateModel, Violations) {
  const CanonicalPairModel good = make_scenario_model(small_scenario(ScenarioId::ToeplitzCovariance, 10));
  EXPECT_NO_THROW(validate_model(good));

  CanonicalPairModel scaled = good;
  scaled.theta *= 2.0;
  EXPECT_EQ(violation_of(scaled), ModelViolation::NotNormalized);

  CanonicalPairModel big = good;
  big.lambda = 1.2;
  EXPECT_EQ(violation_of(big), ModelViolation::LambdaOutOfRange);

  CanonicalPairModel indefinite = good;
  indefinite.sigma1(0, 0) = -1.0;
  EXPECT_EQ(violation_of(indefinite), ModelViolation::NotPositiveDefinite);

  CanonicalPairModel wrong = good;
  wrong.theta = Vector::Ones(3);
  EXPECT_EQ(violation_of(wrong), ModelViolation::DimensionMismatch);
}

TEST(Sample, Deterministic) {
  const CanonicalPairModel m = make_scenario_model(small_scenario(ScenarioId::ToeplitzCovariance, 10));
  const PairedDataset a = sample(m, 5, 42);
  const PairedDataset b = sample(m, 5, 42);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(sample(m, 5, 43).x, a.x);
}

TEST(Sample, IndependentViewsFactorize) {
  // lambda = 0 lies outside (0, 1]; 1e-12 gives the same joint covariance to rounding
  const PairedDataset d = sample(identity_model(3, 1e-12), 200000, 5);
  const Matrix cross = precision::sample_cross_covariance(d.x, d.y);
  EXPECT_LT(cross.cwiseAbs().maxCoeff(), 0.02);
}

TEST(Sample, CanonicalCorrelationRecovered) {
  const CanonicalPairModel m = make_scenario_model(small_scenario(ScenarioId::ToeplitzCovariance, 10));
  const PairedDataset d = sample(m, 200000, 9);
  const Vector u = d.x * m.theta;
  const Vector v = d.y * m.eta;
  const double cu = (u.array() - u.mean()).matrix().norm();
  const double cv = (v.array() - v.mean()).matrix().norm();
  const double corr = (u.array() - u.mean()).matrix().dot((v.array() - v.mean()).matrix()) / (cu * cv);
  EXPECT_NEAR(corr, 0.9, 0.02);
}

TEST(Scenario, TableGenerators) {
  ScenarioConfig one;
  const CanonicalPairModel m1 = make_scenario_model(one);
  EXPECT_EQ(m1.p1(), 200);
  EXPECT_NEAR(m1.sigma1(0, 2), 0.09, 1e-15);
  EXPECT_EQ(m1.lambda, 0.9);
  for (Index i : one.support_x) EXPECT_EQ(m1.theta(i), m1.theta(0));
  EXPECT_EQ((m1.theta.array() != 0.0).count(), 5);

  ScenarioConfig two;
  two.scenario_id = ScenarioId::BandedPrecision;
  const CanonicalPairModel m2 = make_scenario_model(two);
  const Matrix omega = banded_precision(200);
  EXPECT_EQ(omega(3, 3), 1.0);
  EXPECT_EQ(omega(3, 4), 0.5);
  EXPECT_EQ(omega(3, 5), 0.4);
  EXPECT_EQ(omega(3, 6), 0.0);
  EXPECT_LE(linalg::spectral_norm(m2.sigma1 * omega - Matrix::Identity(200, 200)), 1e-8);
}

TEST(Scenario, DegenerateScalar) {
  ScenarioConfig cfg;
  cfg.p1 = 1;
  cfg.p2 = 1;
  cfg.support_x = {0};
  cfg.support_y = {0};
  const CanonicalPairModel m = make_scenario_model(cfg);
  EXPECT_NEAR(m.theta(0), 1.0, 1e-15);
}

TEST(Scenario, OutputAlwaysValid) {
  for (ScenarioId id : {ScenarioId::ToeplitzCovariance, ScenarioId::BandedPrecision, ScenarioId::Custom}) {
    for (Index p : {1, 3, 21, 64}) {
      ScenarioConfig cfg = small_scenario(id, p);
      cfg.support_x = {0};
      cfg.support_y = {p - 1};
      EXPECT_NO_THROW(validate_model(make_scenario_model(cfg)));
    }
  }
}

TEST(Scenario, RejectsBadSupport) {
  ScenarioConfig cfg = small_scenario(ScenarioId::ToeplitzCovariance, 4);
  cfg.support_x = {0, 9};
  EXPECT_THROW(make_scenario_model(cfg), Error);
  cfg.support_x = {1, 1};
  EXPECT_THROW(make_scenario_model(cfg), Error);
}

TEST(WeakLq, HardSparsity) {
  const Vector t = weak_lq_direction(50, 5, 0.0, Matrix::Identity(50, 50), 3);
  EXPECT_EQ((t.array() != 0.0).count(), 5);
  EXPECT_NEAR(t.norm(), 1.0, 1e-14);
  EXPECT_EQ(t, weak_lq_direction(50, 5, 0.0, Matrix::Identity(50, 50), 3));
}

TEST(WeakLq, InequalityScan) {
  const Vector t = weak_lq_direction(100, 2, 1.0, Matrix::Identity(100, 100), 4);
  Vector mags = t.cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<>());
  for (Index k = 0; k < mags.size(); ++k) EXPECT_LE(mags(k), 2.0 / static_cast<double>(k + 1) + 1e-12);
  EXPECT_LE(weak_lq_ratio(t, 2, 1.0), 1.0 + 1e-12);
}
