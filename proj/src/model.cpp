#include "capit/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capit/errors.hpp"
#include "capit/rng.hpp"

namespace capit::model {

namespace {

constexpr double kNormalizationTolerance = 1e-8;

void check_dimensions(const CanonicalPairModel& m) {
  const bool ok = m.sigma1.rows() > 0 && m.sigma1.rows() == m.sigma1.cols() && m.sigma2.rows() > 0 &&
                  m.sigma2.rows() == m.sigma2.cols() && m.theta.size() == m.sigma1.rows() &&
                  m.eta.size() == m.sigma2.rows();
  if (!ok) throw ModelError(ModelViolation::DimensionMismatch, "model: inconsistent dimensions");
}

void check_positive_definite(const Matrix& sigma, const char* name) {
  double min_eig = 0.0;
  try {
    min_eig = linalg::sym_eig(sigma).eigenvalues.minCoeff();
  } catch (const Error& e) {
    throw ModelError(ModelViolation::NotPositiveDefinite, std::string("model: ") + name + ": " + e.what());
  }
  if (!(min_eig > 0.0)) {
    std::ostringstream msg;
    msg << "model: " << name << " is not positive definite (min eigenvalue " << min_eig << ")";
    throw ModelError(ModelViolation::NotPositiveDefinite, msg.str());
  }
}

void check_normalized(const Vector& v, const Matrix& sigma, const char* name) {
  const double q = v.dot(sigma * v);
  if (!(std::abs(q - 1.0) <= kNormalizationTolerance)) {
    std::ostringstream msg;
    msg << "model: " << name << " has quadratic form " << q << ", expected 1";
    throw ModelError(ModelViolation::NotNormalized, msg.str());
  }
}

Vector support_direction(Index p, const std::vector<Index>& support, const Matrix& sigma) {
  if (support.empty()) throw Error(ErrorKind::InvalidConfig, "scenario: empty support");
  Vector v = Vector::Zero(p);
  for (Index idx : support) {
    if (idx < 0 || idx >= p) throw Error(ErrorKind::InvalidConfig, "scenario: support index out of range");
    if (v(idx) != 0.0) throw Error(ErrorKind::InvalidConfig, "scenario: duplicate support index");
    v(idx) = 1.0;
  }
  return v / std::sqrt(v.dot(sigma * v));
}

}  // namespace

PairedDataset PairedDataset::rows(Index begin, Index end) const {
  return PairedDataset{x.middleRows(begin, end - begin), y.middleRows(begin, end - begin)};
}

void validate_model(const CanonicalPairModel& model) {
  check_dimensions(model);
  check_positive_definite(model.sigma1, "sigma1");
  check_positive_definite(model.sigma2, "sigma2");
  check_normalized(model.theta, model.sigma1, "theta");
  check_normalized(model.eta, model.sigma2, "eta");
  if (!(model.lambda > 0.0 && model.lambda <= 1.0)) {
    std::ostringstream msg;
    msg << "model: lambda = " << model.lambda << " outside (0, 1]";
    throw ModelError(ModelViolation::LambdaOutOfRange, msg.str());
  }
}

Matrix assemble_joint_covariance(const CanonicalPairModel& model) {
  validate_model(model);
  const Index p1 = model.p1();
  const Index p2 = model.p2();
  Matrix joint(p1 + p2, p1 + p2);
  const Vector left = model.sigma1 * model.theta;
  const Vector right = model.sigma2 * model.eta;
  joint.topLeftCorner(p1, p1) = model.sigma1;
  joint.bottomRightCorner(p2, p2) = model.sigma2;
  joint.topRightCorner(p1, p2) = model.lambda * left * right.transpose();
  joint.bottomLeftCorner(p2, p1) = joint.topRightCorner(p1, p2).transpose();
  // symmetrize against rounding in the input covariances
  return 0.5 * (joint + joint.transpose());
}

GaussianSampler::GaussianSampler(const CanonicalPairModel& model) : p1_(model.p1()), p2_(model.p2()) {
  const Matrix joint = assemble_joint_covariance(model);
  const linalg::SymEig eig = linalg::sym_eig(joint);
  const double scale = std::max(1.0, eig.eigenvalues(0));
  if (eig.eigenvalues.minCoeff() < -1e-8 * scale) {
    throw ModelError(ModelViolation::NotPositiveDefinite, "sample: joint covariance is not PSD");
  }
  const Vector roots = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  factor_t_ = (eig.eigenvectors * roots.asDiagonal()).transpose();
}

PairedDataset GaussianSampler::draw(Index n, std::uint64_t seed) const {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "sample: n must be positive");
  const Index d = p1_ + p2_;
  CounterRng rng(seed);
  Matrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  const Matrix joint = z * factor_t_;
  return PairedDataset{joint.leftCols(p1_), joint.rightCols(p2_)};
}

PairedDataset sample(const CanonicalPairModel& model, Index n, std::uint64_t seed) {
  return GaussianSampler(model).draw(n, seed);
}

Matrix toeplitz_covariance(Index p, double rho) {
  Matrix s(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return s;
}

Matrix banded_precision(Index p) {
  Matrix omega = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    omega(i, i) = 1.0;
    if (i + 1 < p) omega(i, i + 1) = omega(i + 1, i) = 0.5;
    if (i + 2 < p) omega(i, i + 2) = omega(i + 2, i) = 0.4;
  }
  return omega;
}

namespace {

Matrix scenario_covariance(ScenarioId id, Index p, double rho) {
  switch (id) {
    case ScenarioId::ToeplitzCovariance:
      return toeplitz_covariance(p, rho);
    case ScenarioId::BandedPrecision: {
      const Matrix omega = banded_precision(p);
      Eigen::LLT<Matrix> llt(omega);
      if (llt.info() != Eigen::Success) {
        throw ModelError(ModelViolation::NotPositiveDefinite, "scenario: banded precision is not PD");
      }
      Matrix sigma = llt.solve(Matrix::Identity(p, p));
      return 0.5 * (sigma + sigma.transpose());
    }
    case ScenarioId::Custom:
      return Matrix::Identity(p, p);
  }
  throw Error(ErrorKind::InvalidConfig, "scenario: unknown id");
}

}  // namespace

CanonicalPairModel make_scenario_model(const ScenarioConfig& cfg) {
  if (cfg.p1 < 1 || cfg.p2 < 1) throw Error(ErrorKind::InvalidConfig, "scenario: dimensions must be positive");
  CanonicalPairModel m;
  m.sigma1 = scenario_covariance(cfg.scenario_id, cfg.p1, cfg.rho);
  m.sigma2 = cfg.p1 == cfg.p2 ? m.sigma1 : scenario_covariance(cfg.scenario_id, cfg.p2, cfg.rho);
  m.theta = support_direction(cfg.p1, cfg.support_x, m.sigma1);
  m.eta = support_direction(cfg.p2, cfg.support_y, m.sigma2);
  m.lambda = cfg.lambda;
  validate_model(m);
  return m;
}

double weak_lq_ratio(const Vector& theta, double s, double q) {
  std::vector<double> mags(theta.data(), theta.data() + theta.size());
  for (double& v : mags) v = std::abs(v);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double worst = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    if (mags[k] == 0.0) break;
    const double lhs = q == 0.0 ? 1.0 : std::pow(mags[k], q);
    worst = std::max(worst, lhs * static_cast<double>(k + 1) / s);
  }
  return worst;
}

Vector weak_lq_direction(Index p, double s, double q, const Matrix& sigma, std::uint64_t seed) {
  if (p < 1) throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: p must be positive");
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: s must be positive");
  if (!(q >= 0.0 && q <= 2.0)) throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: q outside [0, 2]");
  if (sigma.rows() != p || sigma.cols() != p) {
    throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: sigma has wrong shape");
  }

  std::vector<double> profile;
  if (q == 0.0) {
    const auto k = std::min<Index>(p, static_cast<Index>(std::floor(s)));
    if (k < 1) throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: s < 1 leaves no coordinates for q = 0");
    profile.assign(static_cast<std::size_t>(k), 1.0);
  } else {
    profile.resize(static_cast<std::size_t>(p));
    for (Index k = 0; k < p; ++k) profile[static_cast<std::size_t>(k)] = std::pow(s / static_cast<double>(k + 1), 1.0 / q);
  }

  CounterRng rng(seed);
  const std::vector<long> positions = random_permutation(static_cast<long>(p), rng);
  Vector theta = Vector::Zero(p);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
    theta(positions[k]) = sign * profile[k];
  }
  const double quad = theta.dot(sigma * theta);
  if (!(quad > 0.0)) throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: degenerate normalization");
  theta /= std::sqrt(quad);
  if (weak_lq_ratio(theta, s, q) > 1.0 + 1e-12) {
    throw Error(ErrorKind::InvalidConfig, "weak_lq_direction: s too small to normalize inside the weak l_q ball");
  }
  return theta;
}

}  // namespace capit::model
