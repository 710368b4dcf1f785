#pragma once

#include "camp/amp.hpp"
#include "camp/common.hpp"
#include "camp/data.hpp"
#include "camp/glm.hpp"

namespace camp {

/// Derivative of every AMP fixed-point field with respect to the label of
/// the last (test) row of the augmented dataset.
struct TaylorState {
  Vector d_theta;
  Vector d_v;
  Vector d_omega;
  Vector d_V;
  Vector d_g;
  Vector d_dg;
  Vector d_b;
  Vector d_A;
  double y_ref = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Lasso coordinates within kKinkTolerance of the threshold, treated as inactive.
  Index kink_coordinates = 0;
};

struct TaylorOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1000;
  /// Same convention as AmpOptions::damping; the limit does not depend on it.
  double damping = 0.0;
};

inline constexpr double kKinkTolerance = 1e-6;

/// Iterates the linearized AMP update around a converged fixed point on the
/// augmented dataset. The b-update carries the A*dtheta + dA*theta terms, so
/// the limit is the exact derivative of the fixed point.
TaylorState taylor_fit(const AmpState& base, const Dataset& ds_augmented, const GlmSpec& spec,
                       const TaylorOptions& opts = {});

/// d/dy of theta_{-i}^T x_i for every row.
Vector taylor_loo_derivatives(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented);
double taylor_loo_derivative(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented, Index i);

/// Scores sigma_i(y) for every label of `labels` (rows) and every row of the
/// augmented dataset (columns), using the first-order expansion around y_ref.
Matrix taylor_scores(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented, const Vector& labels);

}  // namespace camp
