#include "capit/baselines.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "capit/precision.hpp"
#include "capit/rng.hpp"

namespace capit::baselines {

Matrix pinv_sqrt(const Matrix& s) {
  const linalg::SymEig eig = linalg::sym_eig(s);
  const double cutoff = 1e-10 * std::max(eig.eigenvalues(0), 0.0);
  return linalg::spectral_apply(eig, [cutoff](double l) { return l > cutoff ? 1.0 / std::sqrt(l) : 0.0; });
}

CcaEstimate classical_cca_from_covariance(const Matrix& s11, const Matrix& s22, const Matrix& s12) {
  if (s11.rows() != s12.rows() || s22.rows() != s12.cols()) {
    throw Error(ErrorKind::InvalidInput, "classical_cca: covariance blocks do not conform");
  }
  const Matrix r1 = pinv_sqrt(s11);
  const Matrix r2 = pinv_sqrt(s22);
  const Matrix whitened = r1 * s12 * r2;
  CcaEstimate est;
  if (whitened.cwiseAbs().maxCoeff() == 0.0) {
    est.alpha_hat = Vector::Unit(s12.rows(), 0);
    est.beta_hat = Vector::Unit(s12.cols(), 0);
    est.flags.push_back("zero_cross_covariance");
    return est;
  }
  const linalg::Svd dec = linalg::svd(whitened);
  est.alpha_hat = (r1 * dec.u.col(0)).normalized();
  est.beta_hat = (r2 * dec.v.col(0)).normalized();
  est.lambda_hat = dec.singular_values(0);
  normalize_signs(est.alpha_hat, est.beta_hat, s12);
  return est;
}

CcaEstimate classical_cca(const model::PairedDataset& data) {
  if (data.x.rows() != data.y.rows()) throw Error(ErrorKind::InvalidInput, "classical_cca: row counts differ");
  if (data.n() < 2) throw Error(ErrorKind::InvalidInput, "classical_cca: need at least 2 rows");
  return classical_cca_from_covariance(precision::sample_covariance(data.x), precision::sample_covariance(data.y),
                                       precision::sample_cross_covariance(data.x, data.y));
}

void PmdConfig::validate(Index p1, Index p2) const {
  const double slack = 1e-12;
  if (!(c1 >= 1.0 && c1 <= std::sqrt(static_cast<double>(p1)) + slack) ||
      !(c2 >= 1.0 && c2 <= std::sqrt(static_cast<double>(p2)) + slack)) {
    std::ostringstream msg;
    msg << "pmd: budgets (" << c1 << ", " << c2 << ") outside [1, sqrt(p)]";
    throw Error(ErrorKind::InvalidConfig, msg.str());
  }
  if (max_iters < 1) throw Error(ErrorKind::InvalidConfig, "pmd: max_iters must be at least 1");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidConfig, "pmd: tol must be positive");
}

namespace {

Vector soft_unit(const Vector& a, double delta) {
  Vector out = (a.cwiseAbs().array() - delta).max(0.0).matrix().cwiseProduct(a.cwiseSign());
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

}  // namespace

Vector l1_unit_maximizer(const Vector& a, double c) {
  const double top = a.cwiseAbs().maxCoeff();
  if (top == 0.0) return Vector::Zero(a.size());
  if (c <= 1.0) {
    Index arg = 0;
    a.cwiseAbs().maxCoeff(&arg);
    Vector out = Vector::Zero(a.size());
    out(arg) = a(arg) < 0.0 ? -1.0 : 1.0;
    return out;
  }
  Vector out = a / a.norm();
  if (out.lpNorm<1>() <= c) return out;
  double lo = 0.0;
  double hi = top;
  for (int it = 0; it < 32; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Vector cand = soft_unit(a, mid);
    if (cand.norm() > 0.0 && cand.lpNorm<1>() <= c) {
      hi = mid;
    } else if (cand.norm() == 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out = soft_unit(a, hi);
  if (out.norm() == 0.0) out = soft_unit(a, lo);
  return out;
}

namespace {

PmdResult pmd_from(const Matrix& m, const PmdConfig& cfg, Vector v) {
  PmdResult res;
  Vector u = l1_unit_maximizer(m * v, cfg.c1);
  v = l1_unit_maximizer(m.transpose() * u, cfg.c2);
  double objective = u.dot(m * v);
  res.objective_trace.push_back(objective);
  res.iterations = 1;
  for (int it = 2; it <= cfg.max_iters; ++it) {
    const Vector u_next = l1_unit_maximizer(m * v, cfg.c1);
    const Vector v_next = l1_unit_maximizer(m.transpose() * u_next, cfg.c2);
    const double next = u_next.dot(m * v_next);
    if (next < objective) break;  // bisection round-off; keep the better pair
    const double change = (u_next - u).norm() + (v_next - v).norm();
    u = u_next;
    v = v_next;
    objective = next;
    res.objective_trace.push_back(objective);
    res.iterations = it;
    if (change < cfg.tol) break;
  }
  res.u = u;
  res.v = v;
  res.objective = objective;
  return res;
}

}  // namespace

PmdResult pmd_rank1(const Matrix& sigma12_hat, const PmdConfig& cfg, const Vector* v0) {
  cfg.validate(sigma12_hat.rows(), sigma12_hat.cols());
  if (sigma12_hat.size() == 0 || sigma12_hat.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorKind::DegenerateInput, "pmd: cross-covariance is zero");
  }
  if (v0 != nullptr) {
    if (v0->size() != sigma12_hat.cols()) throw Error(ErrorKind::InvalidInput, "pmd: start vector has wrong length");
    return pmd_from(sigma12_hat, cfg, *v0);
  }
  // leading right singular vector, and the column holding the largest entry
  PmdResult best = pmd_from(sigma12_hat, cfg, linalg::svd(sigma12_hat).v.col(0));
  Index i = 0, j = 0;
  sigma12_hat.cwiseAbs().maxCoeff(&i, &j);
  PmdResult alt = pmd_from(sigma12_hat, cfg, Vector::Unit(sigma12_hat.cols(), j));
  if (alt.objective > best.objective) best = std::move(alt);
  return best;
}

std::vector<double> default_pmd_fractions() {
  std::vector<double> f;
  for (int i = 0; i < 10; ++i) f.push_back(0.1 + 0.6 * static_cast<double>(i) / 9.0);
  return f;
}

namespace {

PmdConfig budgets(double fraction, Index p1, Index p2) {
  PmdConfig cfg;
  cfg.c1 = std::max(1.0, fraction * std::sqrt(static_cast<double>(p1)));
  cfg.c2 = std::max(1.0, fraction * std::sqrt(static_cast<double>(p2)));
  return cfg;
}

std::vector<double> objectives(const Matrix& s12, const std::vector<double>& fractions) {
  const Vector v0 = linalg::svd(s12).v.col(0);
  std::vector<double> out;
  out.reserve(fractions.size());
  for (double f : fractions) out.push_back(pmd_rank1(s12, budgets(f, s12.rows(), s12.cols()), &v0).objective);
  return out;
}

}  // namespace

PmdTuning pmd_permutation_tune(const model::PairedDataset& data, const std::vector<double>& fractions, int n_perms,
                               std::uint64_t seed, Execution exec) {
  if (fractions.empty()) throw Error(ErrorKind::InvalidConfig, "pmd_permutation_tune: empty grid");
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::InvalidConfig, "pmd_permutation_tune: fractions must lie in (0, 1]");
  }
  PmdTuning out;
  out.fractions = fractions;
  if (fractions.size() == 1) {
    const PmdConfig cfg = budgets(fractions[0], data.p1(), data.p2());
    out.c1 = cfg.c1;
    out.c2 = cfg.c2;
    out.fraction = fractions[0];
    out.gaps.assign(1, 0.0);
    return out;
  }
  if (n_perms < 2) throw Error(ErrorKind::InvalidConfig, "pmd_permutation_tune: need at least 2 permutations");

  const std::vector<double> observed = objectives(precision::sample_cross_covariance(data.x, data.y), fractions);
  std::vector<std::vector<double>> null(static_cast<std::size_t>(n_perms));
  for_each_index(n_perms, exec, [&](long b) {
    CounterRng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    const std::vector<long> perm = random_permutation(static_cast<long>(data.n()), rng);
    Matrix y(data.n(), data.p2());
    for (Index i = 0; i < data.n(); ++i) y.row(i) = data.y.row(perm[static_cast<std::size_t>(i)]);
    null[static_cast<std::size_t>(b)] = objectives(precision::sample_cross_covariance(data.x, y), fractions);
  });

  out.gaps.resize(fractions.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    double mean = 0.0;
    for (const auto& row : null) mean += row[k];
    mean /= static_cast<double>(n_perms);
    double var = 0.0;
    for (const auto& row : null) var += (row[k] - mean) * (row[k] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n_perms - 1));
    const double gap = observed[k] - mean;
    out.gaps[k] = sd > 0.0 ? gap / sd : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    if (out.gaps[k] > out.gaps[best]) best = k;
  }
  const PmdConfig cfg = budgets(fractions[best], data.p1(), data.p2());
  out.c1 = cfg.c1;
  out.c2 = cfg.c2;
  out.fraction = fractions[best];
  return out;
}

CcaEstimate pmd_fit(const model::PairedDataset& data, int n_perms, std::uint64_t seed, Execution exec) {
  const PmdTuning tuning = pmd_permutation_tune(data, default_pmd_fractions(), n_perms, seed, exec);
  PmdConfig cfg;
  cfg.c1 = tuning.c1;
  cfg.c2 = tuning.c2;
  const Matrix s12 = precision::sample_cross_covariance(data.x, data.y);
  const PmdResult res = pmd_rank1(s12, cfg);
  CcaEstimate est;
  est.alpha_hat = res.u;
  est.beta_hat = res.v;
  est.lambda_hat = res.objective;
  est.iterations_run = res.iterations;
  normalize_signs(est.alpha_hat, est.beta_hat, s12);
  std::ostringstream tag;
  tag << "pmd_fraction=" << tuning.fraction;
  est.flags.push_back(tag.str());
  return est;
}

}  // namespace capit::baselines
