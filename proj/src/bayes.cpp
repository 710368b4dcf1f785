#include "camp/bayes.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

namespace camp {

void BayesConfig::validate() const {
  if (!(noise_variance > 0.0)) throw InvalidArgument("Bayes noise variance must be > 0");
  if (!(kappa > 0.0 && kappa < 1.0)) throw InvalidArgument("kappa must lie in (0, 1)");
}

namespace {

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

PredictiveInterval make_interval(double mean, double variance, double kappa) {
  const double half = normal_quantile(1.0 - 0.5 * kappa) * std::sqrt(variance);
  return {mean, variance, {mean - half, mean + half}};
}

// log(exp(z^2) erfc(z)), finite for all real z.
double log_erfcx(double z) {
  if (z < 0.0) return z * z + std::log1p(std::erf(-z));
  if (z < 25.0) return std::log(std::erfc(z)) + z * z;
  // Asymptotic series; the first omitted term is below 1e-14 relative for z >= 25.
  const double inv2z2 = 1.0 / (2.0 * z * z);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= 6; ++k) {
    term *= -static_cast<double>(2 * k - 1) * inv2z2;
    sum += term;
  }
  return std::log(sum / (z * std::sqrt(std::numbers::pi)));
}

// log of int_0^inf exp(c x - A x^2 / 2) dx.
double log_half_line_integral(double c, double A) {
  return 0.5 * std::log(std::numbers::pi / (2.0 * A)) + log_erfcx(-c / std::sqrt(2.0 * A));
}

}  // namespace

PosteriorMoments laplace_posterior_moments(double b, double A) {
  if (!(A > 0.0)) throw DomainError("Laplace denoiser requires A > 0");
  const double c_pos = b - 1.0;
  const double c_neg = -(b + 1.0);
  const double log_pos = log_half_line_integral(c_pos, A);
  const double log_neg = log_half_line_integral(c_neg, A);
  const double log_max = std::max(log_pos, log_neg);
  const double log_sum = log_max + std::log(std::exp(log_pos - log_max) + std::exp(log_neg - log_max));
  const double w_pos = std::exp(log_pos - log_sum);
  const double w_neg = std::exp(log_neg - log_sum);
  const double inv_sum = std::exp(-log_sum);

  PosteriorMoments m;
  m.mean = (c_pos * w_pos - c_neg * w_neg) / A;
  const double second = 1.0 / A - 2.0 * inv_sum / (A * A) + (c_pos * c_pos * w_pos + c_neg * c_neg * w_neg) / (A * A);
  m.variance = std::max(second - m.mean * m.mean, 0.0);
  return m;
}

ScalarModel bayes_model(const BayesConfig& cfg) {
  cfg.validate();
  const double noise = cfg.noise_variance;
  ScalarModel model;
  model.channel = [noise](double y, double omega, double V) { return channel_gaussian(y, omega, V, noise); };
  if (cfg.prior == TeacherPrior::Gaussian) {
    model.denoiser = [](double b, double A) {
      if (!(1.0 + A > 0.0)) throw DomainError("Gaussian-prior denoiser requires 1 + A > 0");
      DenoiserOutput out;
      out.f = b / (1.0 + A);
      out.df_db = 1.0 / (1.0 + A);
      return out;
    };
  } else {
    model.denoiser = [](double b, double A) {
      const PosteriorMoments m = laplace_posterior_moments(b, A);
      DenoiserOutput out;
      out.f = m.mean;
      out.df_db = m.variance;
      return out;
    };
  }
  return model;
}

PredictiveInterval bayes_interval_gaussian(const Matrix& X, const Vector& y, const Vector& x_test,
                                           const BayesConfig& cfg) {
  cfg.validate();
  if (cfg.prior != TeacherPrior::Gaussian) throw InvalidArgument("closed-form Bayes interval needs a Gaussian prior");
  if (X.rows() != y.size() || x_test.size() != X.cols()) throw InvalidArgument("Bayes interval: dimension mismatch");
  const double noise = cfg.noise_variance;
  const Index n = X.rows();
  const Index d = X.cols();
  double mean = 0.0;
  double quad = x_test.squaredNorm();
  if (n > 0 && d <= n) {
    Matrix P = Matrix::Identity(d, d);
    P.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / noise);
    const Eigen::LLT<Matrix> llt(P.selfadjointView<Eigen::Lower>());
    mean = x_test.dot(llt.solve(X.transpose() * y)) / noise;
    quad = x_test.dot(llt.solve(x_test));
  } else if (n > 0) {
    // Woodbury form in sample space.
    Matrix K = Matrix::Identity(n, n) * noise;
    K.selfadjointView<Eigen::Lower>().rankUpdate(X);
    const Eigen::LLT<Matrix> llt(K.selfadjointView<Eigen::Lower>());
    const Vector Xx = X * x_test;
    mean = Xx.dot(llt.solve(y));
    quad -= Xx.dot(llt.solve(Xx));
  }
  return make_interval(mean, quad + noise, cfg.kappa);
}

PredictiveInterval bayes_interval_gaussian(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg) {
  return bayes_interval_gaussian(ds.X(), ds.y(), x_test, cfg);
}

PredictiveInterval bayes_interval_amp(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg,
                                      const AmpOptions& amp_opts) {
  const AmpState state = amp_fit(ds, bayes_model(cfg), amp_opts);
  if (!state.converged) throw ConvergenceError("MMSE-AMP did not converge");
  const double mean = x_test.dot(state.theta_hat);
  const double variance = x_test.cwiseAbs2().dot(state.v_hat) + cfg.noise_variance;
  return make_interval(mean, variance, cfg.kappa);
}

PredictiveInterval bayes_interval_laplace(const Dataset& ds, const Vector& x_test, const BayesConfig& cfg,
                                          const AmpOptions& amp_opts) {
  if (cfg.prior != TeacherPrior::Laplace) throw InvalidArgument("bayes_interval_laplace needs a Laplace prior");
  return bayes_interval_amp(ds, x_test, cfg, amp_opts);
}

}  // namespace camp
