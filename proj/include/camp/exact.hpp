#pragma once

#include "camp/common.hpp"
#include "camp/data.hpp"
#include "camp/glm.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace camp {

struct ErmSolution {
  Vector theta;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct ErmOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100000;
};

/// Empirical risk 0.5 ||y - X theta||^2 + sum_mu r(theta_mu).
double erm_objective(const Dataset& ds, const GlmSpec& spec, const Vector& theta);

/// Ridge: dense Cholesky solve in the primal (d <= n) or dual (d > n) form.
/// Lasso: cyclic coordinate descent with an active-set inner loop, stopped
/// when the largest coordinate change over a full sweep is below tol.
ErmSolution erm_solve(const Dataset& ds, const GlmSpec& spec, const ErmOptions& opts = {},
                      const Vector* warm_start = nullptr);

/// Lasso coordinate descent on the rows of X other than `skip_row` (pass -1
/// to keep all rows). theta is used as the starting point and overwritten.
/// Returns the number of full sweeps.
std::size_t lasso_coordinate_descent(const Matrix& X, const Vector& y, double lambda, Vector& theta,
                                     Index skip_row, const ErmOptions& opts);

/// Exact leave-one-out predictions theta_{-i}^T x_i on a fixed design
/// matrix, for any label vector. Every call performs one exact refit per row.
/// Ridge caches the per-row factorizations (they do not depend on y); Lasso
/// warm-starts each row's refit from that row's previous solution.
class ExactLooSolver {
 public:
  ExactLooSolver(std::shared_ptr<const Matrix> X, const GlmSpec& spec, ErmOptions opts = {});
  ~ExactLooSolver();
  ExactLooSolver(ExactLooSolver&&) noexcept;
  ExactLooSolver& operator=(ExactLooSolver&&) noexcept;

  Vector loo_predictions(const Vector& y);
  /// |y_i - theta_{-i}^T x_i|.
  Vector scores(const Vector& y);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Conformity scores of the augmented dataset from n+1 exact refits.
Vector exact_loo_scores(const Dataset& ds_augmented, const GlmSpec& spec, const ErmOptions& opts = {});

}  // namespace camp
