#pragma once

#include "camp/amp.hpp"
#include "camp/common.hpp"
#include "camp/conformal.hpp"
#include "camp/data.hpp"

namespace camp {

struct BayesConfig {
  TeacherPrior prior = TeacherPrior::Gaussian;
  double noise_variance = 1.0;
  double kappa = 0.1;

  void validate() const;
};

/// Normal approximation of the posterior predictive and its highest density interval.
struct PredictiveInterval {
  double mean = 0.0;
  double variance = 0.0;
  Interval interval;
  double length() const { return interval.length(); }
};

/// Gaussian prior N(0, I): exact posterior N(m, S) with S = (X^T X / noise + I)^-1,
/// m = S X^T y / noise. X may have zero rows.
PredictiveInterval bayes_interval_gaussian(const Matrix& X, const Vector& y, const Vector& x_test,
                                           const BayesConfig& cfg);
PredictiveInterval bayes_interval_gaussian(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg);

/// Mean and variance of the tilted density  0.5 e^{-|x|} e^{b x - A x^2 / 2}.
struct PosteriorMoments {
  double mean = 0.0;
  double variance = 0.0;
};

PosteriorMoments laplace_posterior_moments(double b, double A);

/// MMSE-AMP with the Gaussian-noise channel and the prior's posterior-mean denoiser.
ScalarModel bayes_model(const BayesConfig& cfg);

/// Posterior predictive from an MMSE-AMP fit: mean theta^T x, variance
/// sum_mu x_mu^2 v_mu + noise.
PredictiveInterval bayes_interval_amp(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg,
                                      const AmpOptions& amp_opts = {});

/// Laplace prior through MMSE-AMP.
PredictiveInterval bayes_interval_laplace(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg,
                                          const AmpOptions& amp_opts = {});

}  // namespace camp
