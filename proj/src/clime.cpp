#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "capit/errors.hpp"
#include "capit/precision.hpp"

namespace capit::precision {

// LP in b+ >= 0, b- >= 0 and r = S b with e_j - lambda <= r <= e_j + lambda.
// A basis holds the active coefficients K (each as b+ or b-) and the rows F
// whose r is basic; the remaining rows R sit at a bound and |R| = |K|. With
// M = S[R, K], the basic values are b_K = M^-1 r_R and r_F = S[F, K] b_K, and
// the simplex multipliers are y_R = M^-T sign_K. The empty basis is dual
// feasible for every lambda and changing lambda only moves bounds, so the dual
// simplex restarts from the previous optimal basis.

namespace {
constexpr double kPrimalTolerance = 1e-10;
constexpr double kPivotTolerance = 1e-9;
constexpr double kHarrisTolerance = 1e-9;
constexpr double kFeasibilitySlack = 1e-6;
constexpr int kRefactorEvery = 64;

void erase_row(Matrix& m, Index row) {
  const Index last = m.rows() - 1;
  if (row != last) m.row(row) = m.row(last);
  m.conservativeResize(last, m.cols());
}

void erase_col(Matrix& m, Index col) {
  const Index last = m.cols() - 1;
  if (col != last) m.col(col) = m.col(last);
  m.conservativeResize(m.rows(), last);
}
}  // namespace

ClimeColumnSolver::ClimeColumnSolver(const Matrix& s, Index column)
    : s_(s), p_(s.rows()), column_(column) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "clime: covariance must be square and non-empty");
  }
  if (column < 0 || column >= p_) throw Error(ErrorKind::InvalidInput, "clime: column out of range");
  active_pos_.assign(static_cast<std::size_t>(p_), -1);
  tight_pos_.assign(static_cast<std::size_t>(p_), -1);
  inverse_.resize(0, 0);
}

double ClimeColumnSolver::row_lower(Index i) const { return (i == column_ ? 1.0 : 0.0) - lambda_; }
double ClimeColumnSolver::row_upper(Index i) const { return (i == column_ ? 1.0 : 0.0) + lambda_; }

Vector ClimeColumnSolver::tight_values() const {
  Vector v(static_cast<Index>(tight_.size()));
  for (std::size_t m = 0; m < tight_.size(); ++m) {
    v(static_cast<Index>(m)) = at_upper_[m] ? row_upper(tight_[m]) : row_lower(tight_[m]);
  }
  return v;
}

void ClimeColumnSolver::refactor() {
  const auto a = static_cast<Index>(active_.size());
  updates_since_refactor_ = 0;
  if (a == 0) {
    inverse_.resize(0, 0);
    return;
  }
  Matrix m(a, a);
  for (Index r = 0; r < a; ++r) {
    for (Index k = 0; k < a; ++k) m(r, k) = s_(tight_[static_cast<std::size_t>(r)], active_[static_cast<std::size_t>(k)]);
  }
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) throw ColumnSolveError(column_, "clime: singular active system");
  inverse_ = lu.inverse();
}

void ClimeColumnSolver::replace_active(Index kp, Index column, double sign) {
  const auto a = static_cast<Index>(active_.size());
  Vector col(a);
  for (Index r = 0; r < a; ++r) col(r) = s_(tight_[static_cast<std::size_t>(r)], column);
  Vector z = inverse_ * col;
  const double denom = z(kp);
  const Eigen::RowVectorXd row = inverse_.row(kp) / denom;
  z(kp) -= 1.0;
  inverse_.noalias() -= z * row;
  inverse_.row(kp) = row;
  active_pos_[static_cast<std::size_t>(active_[static_cast<std::size_t>(kp)])] = -1;
  active_[static_cast<std::size_t>(kp)] = column;
  sign_[static_cast<std::size_t>(kp)] = sign;
  active_pos_[static_cast<std::size_t>(column)] = kp;
}

void ClimeColumnSolver::replace_tight(Index rp, Index row, bool at_upper) {
  const auto a = static_cast<Index>(active_.size());
  Eigen::RowVectorXd c(a);
  for (Index k = 0; k < a; ++k) c(k) = s_(row, active_[static_cast<std::size_t>(k)]);
  Eigen::RowVectorXd w = c * inverse_;
  const double denom = w(rp);
  const Vector col = inverse_.col(rp) / denom;
  w(rp) -= 1.0;
  inverse_.noalias() -= col * w;
  inverse_.col(rp) = col;
  tight_pos_[static_cast<std::size_t>(tight_[static_cast<std::size_t>(rp)])] = -1;
  tight_[static_cast<std::size_t>(rp)] = row;
  at_upper_[static_cast<std::size_t>(rp)] = at_upper ? 1 : 0;
  tight_pos_[static_cast<std::size_t>(row)] = rp;
}

void ClimeColumnSolver::add_pair(Index row, bool at_upper, Index column, double sign) {
  const auto a = static_cast<Index>(active_.size());
  Vector b(a);
  Eigen::RowVectorXd c(a);
  for (Index m = 0; m < a; ++m) b(m) = s_(tight_[static_cast<std::size_t>(m)], column);
  for (Index k = 0; k < a; ++k) c(k) = s_(row, active_[static_cast<std::size_t>(k)]);
  const Vector mb = inverse_ * b;
  const Eigen::RowVectorXd cm = c * inverse_;
  const double schur = s_(row, column) - c.dot(mb.transpose());
  Matrix next(a + 1, a + 1);
  next.topLeftCorner(a, a) = inverse_ + mb * cm / schur;
  next.topRightCorner(a, 1) = -mb / schur;
  next.bottomLeftCorner(1, a) = -cm / schur;
  next(a, a) = 1.0 / schur;
  inverse_.swap(next);
  active_.push_back(column);
  sign_.push_back(sign);
  active_pos_[static_cast<std::size_t>(column)] = a;
  tight_.push_back(row);
  at_upper_.push_back(at_upper ? 1 : 0);
  tight_pos_[static_cast<std::size_t>(row)] = a;
}

void ClimeColumnSolver::remove_pair(Index kp, Index rp) {
  const double h = inverse_(kp, rp);
  const Vector col = inverse_.col(rp);
  const Eigen::RowVectorXd row = inverse_.row(kp);
  inverse_.noalias() -= col * row / h;
  erase_row(inverse_, kp);
  erase_col(inverse_, rp);

  active_pos_[static_cast<std::size_t>(active_[static_cast<std::size_t>(kp)])] = -1;
  active_[static_cast<std::size_t>(kp)] = active_.back();
  sign_[static_cast<std::size_t>(kp)] = sign_.back();
  active_.pop_back();
  sign_.pop_back();
  if (kp < static_cast<Index>(active_.size())) active_pos_[static_cast<std::size_t>(active_[static_cast<std::size_t>(kp)])] = kp;

  tight_pos_[static_cast<std::size_t>(tight_[static_cast<std::size_t>(rp)])] = -1;
  tight_[static_cast<std::size_t>(rp)] = tight_.back();
  at_upper_[static_cast<std::size_t>(rp)] = at_upper_.back();
  tight_.pop_back();
  at_upper_.pop_back();
  if (rp < static_cast<Index>(tight_.size())) tight_pos_[static_cast<std::size_t>(tight_[static_cast<std::size_t>(rp)])] = rp;
}

void ClimeColumnSolver::iterate_to_optimality() {
  const int max_pivots = static_cast<int>(40 * p_ + 1000);
  int pivots = 0;
  Vector r_all(p_);
  Vector sy(p_);
  Vector srho(p_);

  while (true) {
    const auto a = static_cast<Index>(active_.size());
    const Vector beta_k = inverse_ * tight_values();
    r_all.setZero();
    for (Index k = 0; k < a; ++k) r_all.noalias() += beta_k(k) * s_.col(active_[static_cast<std::size_t>(k)]);

    // leaving variable: most infeasible basic value
    Index leave_k = -1;
    Index leave_row = -1;
    double worst = kPrimalTolerance;
    for (Index k = 0; k < a; ++k) {
      const double x = sign_[static_cast<std::size_t>(k)] * beta_k(k);
      if (-x > worst) {
        worst = -x;
        leave_k = k;
        leave_row = -1;
      }
    }
    for (Index i = 0; i < p_; ++i) {
      if (tight_pos_[static_cast<std::size_t>(i)] >= 0) continue;
      const double infeasibility = std::max(row_lower(i) - r_all(i), r_all(i) - row_upper(i));
      if (infeasibility > worst) {
        worst = infeasibility;
        leave_row = i;
        leave_k = -1;
      }
    }
    if (leave_k < 0 && leave_row < 0) return;

    if (++pivots > max_pivots) {
      std::ostringstream msg;
      msg << "clime: dual simplex exceeded " << max_pivots << " pivots on column " << column_;
      throw ColumnSolveError(column_, msg.str());
    }

    const bool to_lower = leave_k >= 0 || r_all(leave_row) < row_lower(leave_row);

    // multipliers and the pivot row of the leaving variable
    Vector sign_k(a);
    for (Index k = 0; k < a; ++k) sign_k(k) = sign_[static_cast<std::size_t>(k)];
    const Vector y = inverse_.transpose() * sign_k;
    Vector rho(a);
    if (leave_k >= 0) {
      rho = sign_[static_cast<std::size_t>(leave_k)] * inverse_.row(leave_k).transpose();
    } else {
      Vector c(a);
      for (Index k = 0; k < a; ++k) c(k) = s_(leave_row, active_[static_cast<std::size_t>(k)]);
      rho = inverse_.transpose() * c;
    }
    sy.setZero();
    srho.setZero();
    for (Index m = 0; m < a; ++m) {
      const auto col = s_.col(tight_[static_cast<std::size_t>(m)]);
      sy.noalias() += y(m) * col;
      srho.noalias() += rho(m) * col;
    }
    if (leave_row >= 0) srho -= s_.col(leave_row);

    // candidates: b+_j and b-_j for inactive j, r_m for tight rows m
    struct Candidate {
      Index index;
      int kind;  // 0 b+, 1 b-, 2 r
      double alpha;
      double cost;  // reduced cost magnitude
    };
    std::vector<Candidate> candidates;
    auto consider = [&](Index index, int kind, double alpha, double reduced, bool at_lower) {
      const bool ok = to_lower ? ((at_lower && alpha < -kPivotTolerance) || (!at_lower && alpha > kPivotTolerance))
                               : ((at_lower && alpha > kPivotTolerance) || (!at_lower && alpha < -kPivotTolerance));
      if (!ok) return;
      const double cost = at_lower ? std::max(reduced, 0.0) : std::max(-reduced, 0.0);
      candidates.push_back({index, kind, alpha, cost});
    };
    for (Index j = 0; j < p_; ++j) {
      if (active_pos_[static_cast<std::size_t>(j)] >= 0) continue;
      consider(j, 0, srho(j), 1.0 - sy(j), true);
      consider(j, 1, -srho(j), 1.0 + sy(j), true);
    }
    if (lambda_ > 0.0) {
      for (Index m = 0; m < a; ++m) consider(m, 2, -rho(m), y(m), !at_upper_[static_cast<std::size_t>(m)]);
    }

    // Harris two-pass ratio test
    double max_step = std::numeric_limits<double>::infinity();
    for (const Candidate& c : candidates) max_step = std::min(max_step, (c.cost + kHarrisTolerance) / std::abs(c.alpha));
    const Candidate* entering = nullptr;
    double best_pivot = 0.0;
    for (const Candidate& c : candidates) {
      const double mag = std::abs(c.alpha);
      if (c.cost / mag <= max_step && mag > best_pivot) {
        best_pivot = mag;
        entering = &c;
      }
    }
    if (entering == nullptr) {
      std::ostringstream msg;
      msg << "clime: constraint set is infeasible for lambda = " << lambda_ << " on column " << column_;
      throw ColumnSolveError(column_, msg.str());
    }

    const bool enter_beta = entering->kind != 2;
    const double enter_sign = entering->kind == 1 ? -1.0 : 1.0;
    if (leave_k >= 0) {
      if (enter_beta) {
        replace_active(leave_k, entering->index, enter_sign);
      } else {
        remove_pair(leave_k, entering->index);
      }
    } else {
      if (enter_beta) {
        add_pair(leave_row, !to_lower, entering->index, enter_sign);
      } else {
        replace_tight(entering->index, leave_row, !to_lower);
      }
    }

    ++total_pivots_;
    if (++updates_since_refactor_ >= kRefactorEvery || !inverse_.allFinite()) refactor();
  }
}

Vector ClimeColumnSolver::exact_solution() const {
  Vector beta = Vector::Zero(p_);
  const auto a = static_cast<Index>(active_.size());
  if (a == 0) return beta;
  Matrix m(a, a);
  for (Index r = 0; r < a; ++r) {
    for (Index k = 0; k < a; ++k) m(r, k) = s_(tight_[static_cast<std::size_t>(r)], active_[static_cast<std::size_t>(k)]);
  }
  const Vector rhs = tight_values();
  Vector sol = m.partialPivLu().solve(rhs);
  // one step of iterative refinement
  sol += m.partialPivLu().solve(rhs - m * sol);
  if (!sol.allFinite()) sol = inverse_ * rhs;
  for (Index k = 0; k < a; ++k) beta(active_[static_cast<std::size_t>(k)]) = sol(k);
  return beta;
}

Vector ClimeColumnSolver::solve(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidInput, "clime: lambda must be finite and nonnegative");
  }
  lambda_ = lambda;
  iterate_to_optimality();
  Vector beta = exact_solution();
  auto excess = [&](const Vector& b) {
    Vector residual = s_ * b;
    residual(column_) -= 1.0;
    return residual.cwiseAbs().maxCoeff() - lambda;
  };
  if (!(excess(beta) <= kFeasibilitySlack)) {
    // one refresh of the factorization before giving up
    refactor();
    iterate_to_optimality();
    beta = exact_solution();
    const double e = excess(beta);
    if (!(e <= kFeasibilitySlack)) {
      std::ostringstream msg;
      msg << "clime: column " << column_ << " violates the constraint by " << e;
      throw ColumnSolveError(column_, msg.str());
    }
  }
  return beta;
}

Matrix clime_raw(const Matrix& s, double lambda, Execution exec) {
  const Index p = s.rows();
  Matrix raw(p, p);
  for_each_index(static_cast<long>(p), exec, [&](long j) {
    ClimeColumnSolver solver(s, j);
    raw.col(j) = solver.solve(lambda);
  });
  return raw;
}

Matrix clime_symmetrize(const Matrix& raw) {
  const Index p = raw.rows();
  Matrix out(p, p);
  for (Index i = 0; i < p; ++i) {
    out(i, i) = raw(i, i);
    for (Index j = i + 1; j < p; ++j) {
      const double v = std::abs(raw(i, j)) <= std::abs(raw(j, i)) ? raw(i, j) : raw(j, i);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Matrix clime_from_covariance(const Matrix& s, double lambda, Execution exec) {
  return clime_symmetrize(clime_raw(s, lambda, exec));
}

std::vector<Matrix> clime_path(const Matrix& s, const std::vector<double>& lambdas, Execution exec) {
  const Index p = s.rows();
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] > lambdas[b]; });

  std::vector<Matrix> raw(lambdas.size(), Matrix(p, p));
  for_each_index(static_cast<long>(p), exec, [&](long j) {
    ClimeColumnSolver solver(s, j);
    for (std::size_t idx : order) raw[idx].col(j) = solver.solve(lambdas[idx]);
  });
  std::vector<Matrix> out;
  out.reserve(raw.size());
  for (const Matrix& r : raw) out.push_back(clime_symmetrize(r));
  return out;
}

}  // namespace capit::precision
