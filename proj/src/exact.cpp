#include "camp/exact.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace camp {

double erm_objective(const Dataset& ds, const GlmSpec& spec, const Vector& theta) {
  const double loss = 0.5 * (ds.y() - ds.X() * theta).squaredNorm();
  const double penalty = spec.regularizer == Regularizer::Ridge ? 0.5 * spec.lambda * theta.squaredNorm()
                                                                : spec.lambda * theta.lpNorm<1>();
  return loss + penalty;
}

namespace {

Vector ridge_solve(const Matrix& X, const Vector& y, double lambda) {
  const Index n = X.rows();
  const Index d = X.cols();
  if (d <= n) {
    Matrix G = Matrix::Identity(d, d) * lambda;
    G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
    const Eigen::LLT<Matrix> llt(G.selfadjointView<Eigen::Lower>());
    return llt.solve(X.transpose() * y);
  }
  Matrix K = Matrix::Identity(n, n) * lambda;
  K.selfadjointView<Eigen::Lower>().rankUpdate(X);
  const Eigen::LLT<Matrix> llt(K.selfadjointView<Eigen::Lower>());
  return X.transpose() * llt.solve(y);
}

}  // namespace

std::size_t lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda, Vector& theta,
                                     Index skip_row, const ErmOptions& opts) {
  const Index d = X.cols();
  Vector col_norm2 = X.colwise().squaredNorm().transpose();
  if (skip_row >= 0) col_norm2 -= X.row(skip_row).transpose().cwiseAbs2();

  Vector r = y;
  for (Index mu = 0; mu < d; ++mu) {
    if (theta(mu) != 0.0) r.noalias() -= X.col(mu) * theta(mu);
  }
  if (skip_row >= 0) r(skip_row) = 0.0;

  const auto update = [&](Index mu) {
    const double norm2 = col_norm2(mu);
    const double old = theta(mu);
    double fresh = 0.0;
    if (norm2 > 0.0) {
      const double z = X.col(mu).dot(r) + norm2 * old;
      fresh = soft_threshold(z, lambda) / norm2;
    }
    const double delta = fresh - old;
    if (delta != 0.0) {
      r.noalias() -= X.col(mu) * delta;
      if (skip_row >= 0) r(skip_row) = 0.0;
      theta(mu) = fresh;
    }
    return std::abs(delta);
  };

  std::size_t sweeps = 0;
  std::vector<Index> active;
  active.reserve(static_cast<std::size_t>(d));
  while (true) {
    double max_change = 0.0;
    for (Index mu = 0; mu < d; ++mu) max_change = std::max(max_change, update(mu));
    ++sweeps;
    if (max_change < opts.tol) return sweeps;
    if (sweeps >= opts.max_iter) break;

    active.clear();
    for (Index mu = 0; mu < d; ++mu) {
      if (theta(mu) != 0.0) active.push_back(mu);
    }
    // Active-set sweeps are cheap and counted against the same budget.
    while (sweeps < opts.max_iter) {
      double inner_change = 0.0;
      for (const Index mu : active) inner_change = std::max(inner_change, update(mu));
      ++sweeps;
      if (inner_change < opts.tol) break;
    }
    if (sweeps >= opts.max_iter) break;
  }
  throw ConvergenceError("lasso coordinate descent did not converge in " + std::to_string(opts.max_iter) + " sweeps");
}

ErmSolution erm_solve(const Dataset& ds, const GlmSpec& spec, const ErmOptions& opts, const Vector* warm_start) {
  spec.validate();
  ErmSolution sol;
  if (spec.regularizer == Regularizer::Ridge) {
    sol.theta = ridge_solve(ds.X(), ds.y(), spec.lambda);
    sol.iterations = 1;
  } else {
    sol.theta = warm_start != nullptr ? *warm_start : Vector::Zero(ds.d());
    if (sol.theta.size() != ds.d()) throw InvalidArgument("warm start has wrong dimension");
    sol.iterations = lasso_coordinate_descent(ds.X(), ds.y(), spec.lambda, sol.theta, -1, opts);
  }
  sol.objective = erm_objective(ds, spec, sol.theta);
  return sol;
}

namespace {

// Lower Cholesky factor of a symmetric positive definite matrix that supports
// appending and deleting a row/column in O(k^2).
class CholeskyFactor {
 public:
  Index size() const { return L_.rows(); }

  bool reset(const Matrix& G) {
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success) return false;
    L_ = llt.matrixL();
    return true;
  }

  // G_new = [[G, g], [g^T, gamma]].
  bool append(const Vector& g, double gamma) {
    const Index k = size();
    Vector l = g;
    if (k > 0) L_.triangularView<Eigen::Lower>().solveInPlace(l);
    const double pivot = gamma - l.squaredNorm();
    if (!(pivot > 1e-12 * std::max(1.0, std::abs(gamma)))) return false;
    L_.conservativeResize(k + 1, k + 1);
    L_.row(k).head(k) = l.transpose();
    L_.col(k).head(k).setZero();
    L_(k, k) = std::sqrt(pivot);
    return true;
  }

  void remove(Index a) {
    const Index k = size();
    const Index tail = k - a - 1;
    if (tail > 0) {
      Vector x = L_.block(a + 1, a, tail, 1);
      auto L33 = L_.block(a + 1, a + 1, tail, tail);
      for (Index j = 0; j < tail; ++j) {
        const double r = std::hypot(L33(j, j), x(j));
        const double c = r / L33(j, j);
        const double s = x(j) / L33(j, j);
        L33(j, j) = r;
        for (Index i = j + 1; i < tail; ++i) {
          L33(i, j) = (L33(i, j) + s * x(i)) / c;
          x(i) = c * x(i) - s * L33(i, j);
        }
      }
    }
    Matrix next(k - 1, k - 1);
    next.topLeftCorner(a, a) = L_.topLeftCorner(a, a);
    next.bottomLeftCorner(tail, a) = L_.bottomLeftCorner(tail, a);
    next.topRightCorner(a, tail).setZero();
    next.bottomRightCorner(tail, tail) = L_.bottomRightCorner(tail, tail);
    L_.swap(next);
  }

  Vector solve(const Vector& b) const {
    Vector x = b;
    if (size() == 0) return x;
    L_.triangularView<Eigen::Lower>().solveInPlace(x);
    L_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

 private:
  Matrix L_;
};

// Exact Lasso solutions of every leave-one-out problem of a fixed design,
// followed across successive label vectors. Between two label vectors each
// solution moves along a piecewise-linear path, traced here with active-set
// (homotopy) updates. The end point is re-solved on its support and checked
// against the KKT conditions; rows that fail are re-solved by coordinate descent.
class LassoLooPath {
 public:
  LassoLooPath(std::shared_ptr<const Matrix> X, double lambda, ErmOptions opts)
      : X_(std::move(X)), lambda_(lambda), opts_(opts) {}

  Vector predictions(const Vector& y) {
    const Index m = X_->rows();
    const Vector Xty = X_->transpose() * y;
    if (!started_) {
      start(y, Xty);
    } else {
      const double scale = direction_scale(y - y_prev_);
      const bool resync = ++calls_ % kResyncPeriod == 0;
      Vector theta(X_->cols());
      for (Index i = 0; i < m; ++i) {
        Row& row = rows_[static_cast<std::size_t>(i)];
        theta = theta_.row(i).transpose();
        if (!(row.valid && follow_path(i, scale, row, theta) && exact_solve(i, y, Xty, row, theta, resync))) {
          theta = theta_.row(i).transpose();
          lasso_coordinate_descent(*X_, y, lambda_, theta, i, opts_);
          refresh(i, y, Xty, row, theta);
        }
        theta_.row(i) = theta.transpose();
      }
    }
    y_prev_ = y;
    return X_->cwiseProduct(theta_).rowwise().sum();
  }

 private:
  static constexpr long kResyncPeriod = 8;

  struct Row {
    std::vector<Index> support;
    std::vector<double> signs;
    CholeskyFactor chol;
    // X_{-i}^T (y_{-i} - X_{-i} theta); equals lambda * sign on the support.
    Vector corr;
    // Path direction per unit of the reference label change.
    Vector dir_theta;
    Vector dir_corr;
    long dir_generation = -1;
    bool valid = false;
  };

  void start(const Vector& y, const Vector& Xty) {
    const Index m = X_->rows();
    const Index d = X_->cols();
    Vector full = Vector::Zero(d);
    lasso_coordinate_descent(*X_, y, lambda_, full, -1, opts_);
    theta_ = full.transpose().replicate(m, 1);
    rows_.assign(static_cast<std::size_t>(m), Row{});
    constexpr double kGramBudget = 5e7;  // doubles
    if (static_cast<double>(d) * static_cast<double>(d) <= kGramBudget) {
      gram_ = Matrix::Zero(d, d);
      gram_.selfadjointView<Eigen::Lower>().rankUpdate(X_->transpose());
      gram_ = gram_.selfadjointView<Eigen::Lower>();
    }
    Vector theta(d);
    for (Index i = 0; i < m; ++i) {
      theta = full;
      lasso_coordinate_descent(*X_, y, lambda_, theta, i, opts_);
      refresh(i, y, Xty, rows_[static_cast<std::size_t>(i)], theta);
      theta_.row(i) = theta.transpose();
    }
    started_ = true;
  }

  // Path directions are linear in the label change, so they are cached for a
  // reference change and rescaled while later changes stay parallel to it
  // (a grid sweep moves only the test label).
  double direction_scale(const Vector& dy) {
    if (dy_ref_.size() == dy.size()) {
      const double ref2 = dy_ref_.squaredNorm();
      if (ref2 > 0.0) {
        const double s = dy.dot(dy_ref_) / ref2;
        if ((dy - s * dy_ref_).norm() <= 1e-12 * dy.norm()) return s;
      }
    }
    dy_ref_ = dy;
    Xtdy_ref_ = X_->transpose() * dy;
    ++generation_;
    return 1.0;
  }

  double gram_minus(Index i, Index mu, Index nu) const {
    return gram_(mu, nu) - (*X_)(i, mu) * (*X_)(i, nu);
  }

  // X_{-i}^T X_{-i} v for v supported on `support`.
  Vector gram_times(Index i, const std::vector<Index>& support, const Vector& v) const {
    Vector out = Vector::Zero(X_->cols());
    double xv = 0.0;
    for (std::size_t a = 0; a < support.size(); ++a) {
      out.noalias() += gram_.col(support[a]) * v(static_cast<Index>(a));
      xv += (*X_)(i, support[a]) * v(static_cast<Index>(a));
    }
    out.noalias() -= X_->row(i).transpose() * xv;
    return out;
  }

  // Factorizes the active system of the support of a (near-)optimal theta
  // and replaces theta by the exact solution when that passes the check.
  void refresh(Index i, const Vector& y, const Vector& Xty, Row& row, Vector& theta) const {
    row.valid = false;
    row.dir_generation = -1;
    if (gram_.size() == 0) return;
    row.support.clear();
    row.signs.clear();
    for (Index mu = 0; mu < X_->cols(); ++mu) {
      if (theta(mu) != 0.0) {
        row.support.push_back(mu);
        row.signs.push_back(theta(mu) > 0.0 ? 1.0 : -1.0);
      }
    }
    const auto k = static_cast<Index>(row.support.size());
    if (k >= X_->rows()) return;
    Matrix G(k, k);
    for (Index a = 0; a < k; ++a) {
      for (Index c = 0; c < k; ++c) {
        G(a, c) = gram_minus(i, row.support[static_cast<std::size_t>(a)], row.support[static_cast<std::size_t>(c)]);
      }
    }
    if (!row.chol.reset(G)) return;
    Vector exact = theta;
    row.valid = exact_solve(i, y, Xty, row, exact, true);
    if (row.valid) theta = exact;
  }

  // Solves the active system of row i for labels y and checks the signs and
  // the inactive correlations (recomputed from scratch when `recompute`).
  bool exact_solve(Index i, const Vector& y, const Vector& Xty, Row& row, Vector& theta, bool recompute) const {
    const auto k = static_cast<Index>(row.support.size());
    const auto xi = X_->row(i);
    Vector rhs(k);
    for (Index a = 0; a < k; ++a) {
      const Index mu = row.support[static_cast<std::size_t>(a)];
      rhs(a) = Xty(mu) - xi(mu) * y(i) - lambda_ * row.signs[static_cast<std::size_t>(a)];
    }
    const Vector ts = row.chol.solve(rhs);
    for (Index a = 0; a < k; ++a) {
      if (!(ts(a) * row.signs[static_cast<std::size_t>(a)] > 0.0)) return false;
    }
    if (recompute) row.corr = Xty - xi.transpose() * y(i) - gram_times(i, row.support, ts);
    theta.setZero();
    for (Index a = 0; a < k; ++a) {
      const Index mu = row.support[static_cast<std::size_t>(a)];
      theta(mu) = ts(a);
      row.corr(mu) = lambda_ * row.signs[static_cast<std::size_t>(a)];
    }
    double worst = 0.0;
    for (Index mu = 0; mu < theta.size(); ++mu) {
      if (theta(mu) == 0.0) worst = std::max(worst, std::abs(row.corr(mu)));
    }
    return worst <= lambda_ * (1.0 + 1e-9);
  }

  // Moves row i along the solution path from the previous labels to
  // y_prev + scale * dy_ref, updating support, factor and correlations.
  bool follow_path(Index i, double scale, Row& row, Vector& theta) const {
    const Index d = X_->cols();
    const auto xi = X_->row(i);
    Vector ts(static_cast<Index>(row.support.size()));
    for (std::size_t a = 0; a < row.support.size(); ++a) ts(static_cast<Index>(a)) = theta(row.support[a]);

    std::vector<char> active(static_cast<std::size_t>(d), 0);
    for (const Index mu : row.support) active[static_cast<std::size_t>(mu)] = 1;
    Index just_removed = -1;
    Index just_added = -1;
    double t = 0.0;  // fraction of the label change covered so far
    const std::size_t max_events = 2 * static_cast<std::size_t>(d) + 10;
    for (std::size_t event = 0; event <= max_events; ++event) {
      const auto k = static_cast<Index>(row.support.size());
      if (row.dir_generation != generation_) {
        const Vector dc = Xtdy_ref_ - xi.transpose() * dy_ref_(i);
        Vector dc_s(k);
        for (Index a = 0; a < k; ++a) dc_s(a) = dc(row.support[static_cast<std::size_t>(a)]);
        row.dir_theta = row.chol.solve(dc_s);
        row.dir_corr = dc - gram_times(i, row.support, row.dir_theta);
        for (const Index mu : row.support) row.dir_corr(mu) = 0.0;
        row.dir_generation = generation_;
      }
      const Vector& dts = row.dir_theta;
      const Vector& dcorr = row.dir_corr;

      // Breakpoints in units of the scaled label change.
      double step = 1.0 - t;
      Index leave = -1;
      Index enter = -1;
      for (Index a = 0; a < k; ++a) {
        const double rate = scale * dts(a);
        if (row.support[static_cast<std::size_t>(a)] == just_added || rate * row.signs[static_cast<std::size_t>(a)] >= 0.0) {
          continue;
        }
        const double s = std::max(-ts(a) / rate, 0.0);
        if (s < step) {
          step = s;
          leave = a;
          enter = -1;
        }
      }
      for (Index mu = 0; mu < d; ++mu) {
        const double rate = scale * dcorr(mu);
        if (active[static_cast<std::size_t>(mu)] || mu == just_removed || rate == 0.0) continue;
        const double bound = rate > 0.0 ? lambda_ : -lambda_;
        const double s = std::max((bound - row.corr(mu)) / rate, 0.0);
        if (s < step) {
          step = s;
          enter = mu;
          leave = -1;
        }
      }
      ts += (step * scale) * dts;
      row.corr += (step * scale) * dcorr;
      t += step;
      if (leave < 0 && enter < 0) {
        theta.setZero();
        for (Index a = 0; a < k; ++a) theta(row.support[static_cast<std::size_t>(a)]) = ts(a);
        return true;
      }
      row.dir_generation = -1;
      just_added = just_removed = -1;
      if (leave >= 0) {
        const Index mu = row.support[static_cast<std::size_t>(leave)];
        active[static_cast<std::size_t>(mu)] = 0;
        row.corr(mu) = lambda_ * row.signs[static_cast<std::size_t>(leave)];
        row.chol.remove(leave);
        row.support.erase(row.support.begin() + leave);
        row.signs.erase(row.signs.begin() + leave);
        Vector shorter(k - 1);
        shorter << ts.head(leave), ts.tail(k - leave - 1);
        ts.swap(shorter);
        just_removed = mu;
      } else {
        if (k + 1 >= X_->rows()) return false;
        Vector g(k);
        for (Index a = 0; a < k; ++a) g(a) = gram_minus(i, row.support[static_cast<std::size_t>(a)], enter);
        if (!row.chol.append(g, gram_minus(i, enter, enter))) return false;
        const double sign = scale * dcorr(enter) > 0.0 ? 1.0 : -1.0;
        active[static_cast<std::size_t>(enter)] = 1;
        row.corr(enter) = lambda_ * sign;
        row.support.push_back(enter);
        row.signs.push_back(sign);
        ts.conservativeResize(k + 1);
        ts(k) = 0.0;
        just_added = enter;
      }
    }
    return false;
  }

  std::shared_ptr<const Matrix> X_;
  double lambda_;
  ErmOptions opts_;
  Matrix gram_;   // X^T X over all rows; empty when too large
  Matrix theta_;  // row i: solution without sample i
  std::vector<Row> rows_;
  Vector y_prev_;
  Vector dy_ref_;
  Vector Xtdy_ref_;
  long generation_ = 0;
  long calls_ = 0;
  bool started_ = false;
};

}  // namespace

struct ExactLooSolver::Impl {
  std::shared_ptr<const Matrix> X;
  GlmSpec spec;
  ErmOptions opts;
  bool primal = true;
  // Ridge: one factorization per left-out row (empty when over the memory budget).
  std::vector<Eigen::LLT<Matrix>> factors;
  Matrix gram;  // X^T X + lambda I (primal) or X X^T (dual, without lambda)
  std::optional<LassoLooPath> lasso;

  Impl(std::shared_ptr<const Matrix> X_, const GlmSpec& spec_, ErmOptions opts_)
      : X(std::move(X_)), spec(spec_), opts(opts_) {
    spec.validate();
    if (spec.regularizer == Regularizer::Ridge) {
      setup_ridge();
    } else {
      lasso.emplace(X, spec.lambda, opts);
    }
  }

  Index rows() const { return X->rows(); }
  Index cols() const { return X->cols(); }

  void setup_ridge() {
    const Index m = rows();
    const Index d = cols();
    primal = d <= m - 1;
    if (primal) {
      gram = Matrix::Identity(d, d) * spec.lambda;
      gram.selfadjointView<Eigen::Lower>().rankUpdate(X->transpose());
      gram = gram.selfadjointView<Eigen::Lower>();
    } else {
      gram = Matrix::Zero(m, m);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(*X);
      gram = gram.selfadjointView<Eigen::Lower>();
    }
    const double k = primal ? static_cast<double>(d) : static_cast<double>(m - 1);
    constexpr double kCacheBudget = 2.5e7;  // doubles
    if (static_cast<double>(m) * k * k <= kCacheBudget) {
      factors.reserve(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) factors.push_back(ridge_factor(i));
    }
  }

  // Gram system of the problem without row i.
  Matrix reduced_system(Index i) const {
    const Index m = rows();
    if (primal) {
      Matrix G = gram;
      G.selfadjointView<Eigen::Lower>().rankUpdate(X->row(i).transpose(), -1.0);
      return G;
    }
    Matrix K(m - 1, m - 1);
    const Index tail = m - 1 - i;
    K.topLeftCorner(i, i) = gram.topLeftCorner(i, i);
    K.topRightCorner(i, tail) = gram.topRightCorner(i, tail);
    K.bottomLeftCorner(tail, i) = gram.bottomLeftCorner(tail, i);
    K.bottomRightCorner(tail, tail) = gram.bottomRightCorner(tail, tail);
    K.diagonal().array() += spec.lambda;
    return K;
  }

  Eigen::LLT<Matrix> ridge_factor(Index i) const {
    Eigen::LLT<Matrix> llt(reduced_system(i).selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw DomainError("ridge leave-one-out system is not positive definite");
    return llt;
  }

  double ridge_prediction(Index i, const Vector& y, const Vector& Xty) const {
    const Index m = rows();
    if (m == 1) return 0.0;  // no data left: theta = 0
    const Eigen::LLT<Matrix> local = factors.empty() ? ridge_factor(i) : Eigen::LLT<Matrix>();
    const Eigen::LLT<Matrix>& llt = factors.empty() ? local : factors[static_cast<std::size_t>(i)];
    if (primal) {
      const Vector rhs = Xty - X->row(i).transpose() * y(i);
      return X->row(i).dot(llt.solve(rhs));
    }
    const Index tail = m - 1 - i;
    Vector y_rest(m - 1);
    y_rest << y.head(i), y.tail(tail);
    Vector k_row(m - 1);
    k_row << gram.row(i).head(i).transpose(), gram.row(i).tail(tail).transpose();
    return k_row.dot(llt.solve(y_rest));
  }

  Vector loo_predictions(const Vector& y) {
    const Index m = rows();
    if (y.size() != m) throw InvalidArgument("label vector does not match the design matrix");
    Vector p(m);
    if (spec.regularizer == Regularizer::Ridge) {
      const Vector Xty = primal ? Vector(X->transpose() * y) : Vector();
      for (Index i = 0; i < m; ++i) p(i) = ridge_prediction(i, y, Xty);
      return p;
    }
    return lasso->predictions(y);
  }
};

ExactLooSolver::ExactLooSolver(std::shared_ptr<const Matrix> X, const GlmSpec& spec, ErmOptions opts)
    : impl_(std::make_unique<Impl>(std::move(X), spec, opts)) {}
ExactLooSolver::~ExactLooSolver() = default;
ExactLooSolver::ExactLooSolver(ExactLooSolver&&) noexcept = default;
ExactLooSolver& ExactLooSolver::operator=(ExactLooSolver&&) noexcept = default;

Vector ExactLooSolver::loo_predictions(const Vector& y) { return impl_->loo_predictions(y); }

Vector ExactLooSolver::scores(const Vector& y) { return (y - impl_->loo_predictions(y)).cwiseAbs(); }

Vector exact_loo_scores(const Dataset& ds_augmented, const GlmSpec& spec, const ErmOptions& opts) {
  ExactLooSolver solver(ds_augmented.shared_X(), spec, opts);
  return solver.scores(ds_augmented.y());
}

}  // namespace camp
