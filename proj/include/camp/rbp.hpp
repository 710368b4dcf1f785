#pragma once

#include "camp/common.hpp"
#include "camp/data.hpp"
#include "camp/glm.hpp"

namespace camp {

/// Relaxed belief propagation over per-edge cavity messages. Memory is
/// O(n d); it exists to cross-check the AMP leave-one-out extraction on small
/// problems.
struct RbpState {
  Matrix cavity_mean;  // theta_{mu -> i}, d x n
  Matrix cavity_var;   // v_{mu -> i}, d x n
  Matrix omega_cav;    // omega_{i -> mu}, n x d
  Matrix V_cav;        // V_{i -> mu}, n x d
  Matrix A_cav;        // A_{mu -> i}, d x n
  Matrix b_cav;        // b_{mu -> i}, d x n
  Vector theta_hat;    // marginal estimate, length d
  Vector v_hat;
  std::size_t iterations = 0;
  bool converged = false;
};

struct RbpOptions {
  double tol = 1e-10;
  std::size_t max_iter = 2000;
  double damping = 0.0;
};

inline constexpr Index kRbpMaxEdges = 10'000'000;

RbpState rbp_fit(const Dataset& ds, const GlmSpec& spec, const RbpOptions& opts = {});

/// Cavity prediction sum_mu x_{i mu} theta_{mu -> i}.
double rbp_loo_prediction(const RbpState& state, const Dataset& ds, Index i);

}  // namespace camp
