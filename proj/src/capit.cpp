#include "capit/capit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "capit/rng.hpp"

namespace capit {

namespace {

double log_ratio(Index p, Index n) {
  return std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

Index count_nonzero(const Vector& v) { return (v.array() != 0.0).count(); }

void check_unit(const Vector& v, const char* name) {
  if (v.size() == 0 || !v.allFinite() || std::abs(v.norm() - 1.0) > 1e-8) {
    throw Error(ErrorKind::InvalidInput, std::string("iterate: ") + name + " must be a finite unit vector");
  }
}

// Index sets of rows (or columns) whose best ratio clears the cutoff.
std::vector<Index> select(const Vector& best, double cutoff, bool& fallback) {
  std::vector<Index> kept;
  for (Index i = 0; i < best.size(); ++i) {
    if (best(i) >= cutoff) kept.push_back(i);
  }
  fallback = kept.empty();
  if (fallback) {
    Index arg = 0;
    best.maxCoeff(&arg);
    kept.push_back(arg);
  }
  return kept;
}

std::string half_name(int half) { return half == 0 ? "first half" : "second half"; }

[[noreturn]] void rethrow_with_half(int half) {
  const std::string prefix = "capit_fit (" + half_name(half) + " as cross-covariance): ";
  try {
    throw;
  } catch (const AllCoordinatesKilledError& e) {
    throw AllCoordinatesKilledError(e.side(), e.iteration(), prefix + e.what());
  } catch (const ColumnSolveError& e) {
    throw ColumnSolveError(e.column(), prefix + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), prefix + e.what());
  }
}

double projection_correlation(const model::PairedDataset& data, const Vector& alpha, const Vector& beta) {
  Vector u = data.x * alpha;
  Vector v = data.y * beta;
  u.array() -= u.mean();
  v.array() -= v.mean();
  const double denom = u.norm() * v.norm();
  return denom > 0.0 ? u.dot(v) / denom : 0.0;
}

}  // namespace

const char* to_string(ThresholdKind kind) {
  switch (kind) {
    case ThresholdKind::Hard:
      return "hard";
    case ThresholdKind::Soft:
      return "soft";
    case ThresholdKind::Scad:
      return "scad";
  }
  return "unknown";
}

ThresholdKind parse_threshold_kind(const std::string& name) {
  if (name == "hard") return ThresholdKind::Hard;
  if (name == "soft") return ThresholdKind::Soft;
  if (name == "scad") return ThresholdKind::Scad;
  throw Error(ErrorKind::InvalidConfig, "unknown threshold rule '" + name + "'");
}

Vector apply_threshold(const Vector& v, double t, const ThresholdRule& rule) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidInput, "apply_threshold: level must be nonnegative");
  if (rule.kind == ThresholdKind::Scad && !(rule.scad_a > 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "apply_threshold: scad_a must exceed 2");
  }
  if (t == 0.0) return v;
  Vector out(v.size());
  for (Index k = 0; k < v.size(); ++k) {
    const double a = v(k);
    const double mag = std::abs(a);
    const double sgn = a < 0.0 ? -1.0 : 1.0;
    switch (rule.kind) {
      case ThresholdKind::Hard:
        out(k) = mag >= t ? a : 0.0;
        break;
      case ThresholdKind::Soft:
        out(k) = sgn * std::max(mag - t, 0.0);
        break;
      case ThresholdKind::Scad: {
        const double sa = rule.scad_a;
        if (mag <= 2.0 * t) {
          out(k) = sgn * std::max(mag - t, 0.0);
        } else if (mag <= sa * t) {
          out(k) = ((sa - 1.0) * a - sgn * sa * t) / (sa - 2.0);
        } else {
          out(k) = a;
        }
        break;
      }
    }
  }
  return out;
}

ThresholdLevels data_driven_levels(const Matrix& omega1, const Matrix& omega2, Index n) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "data_driven_levels: n must be positive");
  const Index p1 = omega1.rows();
  const Index p2 = omega2.rows();
  const double norm1 = linalg::spectral_norm(omega1);
  const double norm2 = linalg::spectral_norm(omega2);
  const double scale = 20.0 * std::sqrt(2.0) / 9.0;
  const double tail = std::sqrt(8.0 * norm1 * norm2 / 3.0);

  ThresholdLevels out;
  out.t.resize(p1, p2);
  for (Index j = 0; j < p2; ++j) {
    const double w2 = omega2(j, j);
    for (Index i = 0; i < p1; ++i) {
      const double w1 = omega1(i, i);
      out.t(i, j) = scale * (std::sqrt(norm1 * w2) + std::sqrt(norm2 * w1) + std::sqrt(w1 * w2) + tail);
    }
  }
  const double t_min = out.t.minCoeff();
  const double rate = log_ratio(std::max(p1, p2), n);
  const double root1 = std::sqrt(norm1);
  const double root2 = std::sqrt(norm2);
  out.gamma1 = (0.17 * t_min * root2 + 2.1 * root2 * root1 + 7.5 * norm2) * rate;
  out.gamma2 = (0.17 * t_min * root1 + 2.1 * root1 * root2 + 7.5 * norm1) * rate;
  return out;
}

ThresholdLevels manual_levels(double c1, double c2, double t_const, Index p1, Index p2, Index n) {
  if (n < 1 || p1 < 1 || p2 < 1) throw Error(ErrorKind::InvalidInput, "manual_levels: sizes must be positive");
  const double rate = log_ratio(std::max(p1, p2), n);
  ThresholdLevels out;
  out.t = Matrix::Constant(p1, p2, t_const);
  out.gamma1 = c1 * rate;
  out.gamma2 = c2 * rate;
  return out;
}

Matrix build_a_hat(const Matrix& omega1, const Matrix& omega2, const Matrix& sigma12_hat) {
  if (omega1.rows() != omega1.cols() || omega2.rows() != omega2.cols() || omega1.cols() != sigma12_hat.rows() ||
      sigma12_hat.cols() != omega2.rows()) {
    std::ostringstream msg;
    msg << "build_a_hat: shapes " << omega1.rows() << "x" << omega1.cols() << ", " << sigma12_hat.rows() << "x"
        << sigma12_hat.cols() << ", " << omega2.rows() << "x" << omega2.cols() << " do not conform";
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
  return omega1 * sigma12_hat * omega2;
}

void normalize_signs(Vector& alpha, Vector& beta, const Matrix& a_hat) {
  Index lead = 0;
  alpha.cwiseAbs().maxCoeff(&lead);
  if (alpha(lead) < 0.0) {
    alpha = -alpha;
    beta = -beta;
  }
  if (alpha.dot(a_hat * beta) < 0.0) beta = -beta;
}

InitialPair initialize(const Matrix& a_hat, const Matrix& t, Index n) {
  const Index p1 = a_hat.rows();
  const Index p2 = a_hat.cols();
  if (p1 == 0 || p2 == 0) throw Error(ErrorKind::InvalidInput, "initialize: empty matrix");
  if (t.rows() != p1 || t.cols() != p2) throw Error(ErrorKind::InvalidInput, "initialize: level matrix shape mismatch");
  if (!(t.minCoeff() > 0.0)) throw Error(ErrorKind::InvalidInput, "initialize: levels must be positive");
  if (n < 1) throw Error(ErrorKind::InvalidInput, "initialize: n must be positive");

  const Matrix ratio = a_hat.cwiseAbs().cwiseQuotient(t);
  InitialPair out;
  out.rows = select(ratio.rowwise().maxCoeff(), log_ratio(p1, n), out.fallback_rows);
  out.cols = select(ratio.colwise().maxCoeff().transpose(), log_ratio(p2, n), out.fallback_cols);

  Matrix block(static_cast<Index>(out.rows.size()), static_cast<Index>(out.cols.size()));
  for (std::size_t r = 0; r < out.rows.size(); ++r) {
    for (std::size_t c = 0; c < out.cols.size(); ++c) {
      block(static_cast<Index>(r), static_cast<Index>(c)) = a_hat(out.rows[r], out.cols[c]);
    }
  }
  out.alpha = Vector::Zero(p1);
  out.beta = Vector::Zero(p2);
  if (block.cwiseAbs().maxCoeff() == 0.0) {
    // zero block: any unit pair is a singular pair
    out.alpha(out.rows.front()) = 1.0;
    out.beta(out.cols.front()) = 1.0;
    return out;
  }
  const linalg::Svd dec = linalg::svd(block);
  for (std::size_t r = 0; r < out.rows.size(); ++r) out.alpha(out.rows[r]) = dec.u(static_cast<Index>(r), 0);
  for (std::size_t c = 0; c < out.cols.size(); ++c) out.beta(out.cols[c]) = dec.v(static_cast<Index>(c), 0);
  out.alpha.normalize();
  out.beta.normalize();
  normalize_signs(out.alpha, out.beta, a_hat);
  return out;
}

CcaEstimate iterate(const Matrix& a_hat, const Vector& alpha0, const Vector& beta0, double gamma1, double gamma2,
                    const ThresholdRule& rule, int k_max, double tol) {
  if (alpha0.size() != a_hat.rows() || beta0.size() != a_hat.cols()) {
    throw Error(ErrorKind::InvalidInput, "iterate: start vectors do not match the matrix");
  }
  check_unit(alpha0, "alpha0");
  check_unit(beta0, "beta0");
  if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) throw Error(ErrorKind::InvalidInput, "iterate: levels must be nonnegative");
  if (k_max < 1) throw Error(ErrorKind::InvalidConfig, "iterate: K must be at least 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "iterate: tol must be positive");

  CcaEstimate est;
  Vector alpha = alpha0;
  Vector beta = beta0;
  for (int k = 1; k <= k_max; ++k) {
    Vector w = apply_threshold(a_hat * beta, gamma1, rule);
    double norm = w.norm();
    if (norm == 0.0) {
      std::ostringstream msg;
      msg << "iterate: left threshold " << gamma1 << " removed every coordinate at iteration " << k;
      throw AllCoordinatesKilledError(Side::Left, k, msg.str());
    }
    const Vector alpha_next = w / norm;

    w = apply_threshold(a_hat.transpose() * alpha_next, gamma2, rule);
    norm = w.norm();
    if (norm == 0.0) {
      std::ostringstream msg;
      msg << "iterate: right threshold " << gamma2 << " removed every coordinate at iteration " << k;
      throw AllCoordinatesKilledError(Side::Right, k, msg.str());
    }
    const Vector beta_next = w / norm;

    IterationTrace tr;
    tr.iteration = k;
    tr.alpha_support = count_nonzero(alpha_next);
    tr.beta_support = count_nonzero(beta_next);
    tr.alpha_change = linalg::subspace_loss(alpha, alpha_next);
    tr.beta_change = linalg::subspace_loss(beta, beta_next);
    est.trace.push_back(tr);
    alpha = alpha_next;
    beta = beta_next;
    est.iterations_run = k;
    if (tr.alpha_change <= tol && tr.beta_change <= tol) break;
  }
  est.alpha_hat = alpha;
  est.beta_hat = beta;
  est.lambda_hat = alpha.dot(a_hat * beta);
  return est;
}

void CapitConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::InvalidConfig, "capit: max_iters must be at least 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "capit: tol must be positive");
  for (const auto& c : {gamma1, gamma2, t_const}) {
    if (c && !(*c > 0.0 && std::isfinite(*c))) throw Error(ErrorKind::InvalidConfig, "capit: manual constants must be positive");
  }
  if (rule.kind == ThresholdKind::Scad && !(rule.scad_a > 2.0)) {
    throw Error(ErrorKind::InvalidConfig, "capit: scad_a must exceed 2");
  }
}

HalfFit fit_half(const model::PairedDataset& cross_half, const model::PairedDataset& precision_half,
                 const precision::PrecisionOptions& popts, const CapitConfig& cfg,
                 const std::pair<Matrix, Matrix>* oracle) {
  cfg.validate();
  HalfFit out;
  const Matrix* o1 = oracle ? &oracle->first : nullptr;
  const Matrix* o2 = oracle ? &oracle->second : nullptr;
  precision::PrecisionOptions p1 = popts;
  precision::PrecisionOptions p2 = popts;
  p2.cv_seed = derive_seed(popts.cv_seed, 1);
  out.omega1 = precision::estimate_precision(precision_half.x, p1, o1);
  out.omega2 = precision::estimate_precision(precision_half.y, p2, o2);

  const Matrix sigma12 = precision::sample_cross_covariance(cross_half.x, cross_half.y);
  out.a_hat = build_a_hat(out.omega1.omega, out.omega2.omega, sigma12);

  const Index n = cross_half.n();
  if (!cfg.gamma1 || !cfg.gamma2 || !cfg.t_const) {
    out.levels = data_driven_levels(out.omega1.omega, out.omega2.omega, n);
  }
  const ThresholdLevels manual = manual_levels(cfg.gamma1.value_or(1.0), cfg.gamma2.value_or(1.0),
                                               cfg.t_const.value_or(1.0), cross_half.p1(), cross_half.p2(), n);
  if (cfg.t_const) out.levels.t = manual.t;
  if (cfg.gamma1) out.levels.gamma1 = manual.gamma1;
  if (cfg.gamma2) out.levels.gamma2 = manual.gamma2;

  out.init = initialize(out.a_hat, out.levels.t, n);
  const InitialPair& init = out.init;
  out.estimate =
      iterate(out.a_hat, init.alpha, init.beta, out.levels.gamma1, out.levels.gamma2, cfg.rule, cfg.max_iters, cfg.tol);
  normalize_signs(out.estimate.alpha_hat, out.estimate.beta_hat, out.a_hat);
  if (init.fallback_rows) out.estimate.flags.push_back("init_fallback_rows");
  if (init.fallback_cols) out.estimate.flags.push_back("init_fallback_cols");
  if (out.omega1.pd_repair_applied || out.omega2.pd_repair_applied) out.estimate.flags.push_back("pd_repair");
  return out;
}

CcaEstimate combine_halves(const CcaEstimate& first, const CcaEstimate& second, const Matrix& a_hat_sum) {
  CcaEstimate est = first;
  const double agreement = first.alpha_hat.dot(second.alpha_hat) + first.beta_hat.dot(second.beta_hat);
  const double s = agreement < 0.0 ? -1.0 : 1.0;
  const Vector alpha = first.alpha_hat + s * second.alpha_hat;
  const Vector beta = first.beta_hat + s * second.beta_hat;
  if (alpha.norm() > 1e-12 && beta.norm() > 1e-12) {
    est.alpha_hat = alpha / alpha.norm();
    est.beta_hat = beta / beta.norm();
    est.halves_averaged = true;
  } else {
    est.flags.push_back("halves_cancelled");
  }
  normalize_signs(est.alpha_hat, est.beta_hat, a_hat_sum);
  est.lambda_hat = 0.5 * (first.lambda_hat + second.lambda_hat);
  est.iterations_run = std::max(first.iterations_run, second.iterations_run);
  for (const std::string& f : second.flags) {
    if (std::find(est.flags.begin(), est.flags.end(), f) == est.flags.end()) est.flags.push_back(f);
  }
  return est;
}

CcaEstimate capit_fit(const model::PairedDataset& data, const precision::PrecisionOptions& popts,
                      const CapitConfig& cfg, const std::pair<Matrix, Matrix>* oracle) {
  cfg.validate();
  if (data.x.rows() != data.y.rows()) {
    std::ostringstream msg;
    msg << "capit_fit: X has " << data.x.rows() << " rows but Y has " << data.y.rows();
    throw Error(ErrorKind::InvalidInput, msg.str());
  }
  if (data.n() < 4) throw Error(ErrorKind::InvalidInput, "capit_fit: need at least 4 rows");
  if (popts.method == precision::Method::Oracle && oracle == nullptr) {
    throw Error(ErrorKind::InvalidConfig, "capit_fit: oracle precision requested without true precision matrices");
  }

  const Index half = data.n() / 2;
  const model::PairedDataset first = data.rows(0, half);
  const model::PairedDataset second = data.rows(half, data.n());
  const int fits = cfg.swap_and_average ? 2 : 1;
  std::vector<HalfFit> results;
  for (int h = 0; h < fits; ++h) {
    precision::PrecisionOptions opts = popts;
    opts.cv_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(h));
    try {
      results.push_back(h == 0 ? fit_half(first, second, opts, cfg, oracle) : fit_half(second, first, opts, cfg, oracle));
    } catch (const Error&) {
      rethrow_with_half(h);
    }
  }

  CcaEstimate est = fits == 2 ? combine_halves(results[0].estimate, results[1].estimate,
                                                results[0].a_hat + results[1].a_hat)
                              : results[0].estimate;
  est.lambda_hat = projection_correlation(data, est.alpha_hat, est.beta_hat);
  if (est.lambda_hat > 1.1) est.flags.push_back("lambda_hat_gt_1.1");
  if (est.lambda_hat < -1e-6) est.flags.push_back("lambda_hat_negative");
  return est;
}

}  // namespace capit
