#pragma once

#include "camp/common.hpp"
#include "camp/data.hpp"
#include "camp/glm.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

namespace camp {

/// The AMP fixed-point vector: estimator and variances on the coordinate side
/// (length d), channel means/variances and their g_out values on the sample
/// side (length n).
struct AmpState {
  Vector theta_hat;
  Vector v_hat;
  Vector omega;
  Vector V;
  Vector g;
  Vector dg;
  Vector b;
  Vector A;
  std::size_t iterations = 0;
  bool converged = false;
};

enum class AmpInit { Zero, Seeded };

struct AmpOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1000;
  /// Fraction of the previous iterate kept: theta <- (1 - damping) new + damping old.
  double damping = 0.0;
  AmpInit init = AmpInit::Zero;
  std::uint64_t init_seed = 0;
  /// Starts from this state's theta_hat, v_hat and g instead of `init`.
  std::shared_ptr<const AmpState> warm_start;

  void validate() const;
};

/// Channel and denoiser pair driving the iteration. Only g, dg_domega, f and
/// df_db are consumed by the fit itself.
struct ScalarModel {
  std::function<ChannelOutput(double y, double omega, double V)> channel;
  std::function<DenoiserOutput(double b, double A)> denoiser;
};

ScalarModel erm_model(const GlmSpec& spec);

/// Runs the AMP iteration until the sup-norm change of theta_hat drops below
/// opts.tol or opts.max_iter is reached. Throws DivergenceError on non-finite
/// iterates.
AmpState amp_fit(const Dataset& ds, const GlmSpec& spec, const AmpOptions& opts = {});
AmpState amp_fit(const Dataset& ds, const ScalarModel& model, const AmpOptions& opts = {});

/// Leave-one-out predictions theta_{-i}^T x_i = theta^T x_i - g_i sum_mu x_{i mu}^2 v_mu.
Vector loo_predictions(const AmpState& state, const Dataset& ds);

/// Row i holds the leave-one-out estimator theta - g_i x_i (*) v_hat.
Matrix loo_estimators(const AmpState& state, const Dataset& ds);

/// |y_i - loo prediction_i| for every row of the augmented dataset, from one fit.
Vector conformity_scores_amp(const Dataset& ds_augmented, const GlmSpec& spec, const AmpOptions& opts = {});

}  // namespace camp
