#pragma once

#include "camp/common.hpp"

#include <functional>
#include <string>

namespace camp {

enum class Regularizer { Ridge, Lasso };

std::string to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string& name);

/// Squared loss 0.5 (y - z)^2 with a separable Ridge (0.5 lambda t^2) or
/// Lasso (lambda |t|) penalty.
struct GlmSpec {
  Regularizer regularizer = Regularizer::Ridge;
  double lambda = 1.0;

  void validate() const;
};

/// g_out and the partial derivatives Taylor-AMP consumes.
struct ChannelOutput {
  double g = 0.0;
  double dg_domega = 0.0;
  double dg_dV = 0.0;
  double d2g_domega2 = 0.0;
  double d2g_dVdomega = 0.0;
  double dg_dy = 0.0;
  double d2g_dydomega = 0.0;
};

/// f_w and its partial derivatives.
struct DenoiserOutput {
  double f = 0.0;
  double df_db = 0.0;
  double df_dA = 0.0;
  double d2f_db2 = 0.0;
  double d2f_dAdb = 0.0;
};

/// Squared-loss channel g_out = (y - omega) / (1 + V). Requires 1 + V > 0.
ChannelOutput channel_squared(double y, double omega, double V);

/// Gaussian-likelihood channel with noise variance `noise`:
/// g_out = (y - omega) / (noise + V). Reduces to channel_squared for noise = 1.
ChannelOutput channel_gaussian(double y, double omega, double V, double noise);

/// Proximal denoiser of the regularizer. At the Lasso kink |b| = lambda the
/// zero branch is returned.
DenoiserOutput denoiser(const GlmSpec& spec, double b, double A);

double soft_threshold(double value, double threshold);

using ScalarLoss = std::function<double(double y, double z)>;

/// argmin_z loss(y, z) + (z - omega)^2 / (2V) by bracketing followed by
/// Brent's method. `tol` is the requested bracket width; attainable accuracy
/// is limited to about sqrt(machine epsilon) relative.
double prox_generic(const ScalarLoss& loss, double y, double omega, double V, double tol = 1e-8,
                    int max_iter = 500);

}  // namespace camp
