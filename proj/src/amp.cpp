#include "camp/amp.hpp"

#include <cmath>
#include <random>

namespace camp {

void AmpOptions::validate() const {
  if (!(tol > 0.0)) throw InvalidArgument("AMP tolerance must be > 0");
  if (max_iter < 1) throw InvalidArgument("AMP needs max_iter >= 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("AMP damping must lie in [0, 1)");
}

ScalarModel erm_model(const GlmSpec& spec) {
  spec.validate();
  return {[](double y, double omega, double V) { return channel_squared(y, omega, V); },
          [spec](double b, double A) { return denoiser(spec, b, A); }};
}

AmpState amp_fit(const Dataset& ds, const GlmSpec& spec, const AmpOptions& opts) {
  return amp_fit(ds, erm_model(spec), opts);
}

AmpState amp_fit(const Dataset& ds, const ScalarModel& model, const AmpOptions& opts) {
  opts.validate();
  const Matrix& X = ds.X();
  const Vector& y = ds.y();
  const Index n = ds.n();
  const Index d = ds.d();
  const Matrix X2 = X.cwiseAbs2();

  AmpState s;
  s.theta_hat = Vector::Zero(d);
  s.v_hat = Vector::Ones(d);
  s.g = Vector::Zero(n);
  if (opts.warm_start) {
    const AmpState& w = *opts.warm_start;
    if (w.theta_hat.size() != d || w.v_hat.size() != d || w.g.size() != n) {
      throw InvalidArgument("AMP warm start has mismatched dimensions");
    }
    s.theta_hat = w.theta_hat;
    s.v_hat = w.v_hat;
    s.g = w.g;
  } else if (opts.init == AmpInit::Seeded) {
    std::mt19937_64 rng(opts.init_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index mu = 0; mu < d; ++mu) s.theta_hat(mu) = normal(rng);
  }
  s.omega.resize(n);
  s.dg.resize(n);
  s.b.resize(d);

  Vector theta_next(d);
  Vector v_next(d);
  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    s.V.noalias() = X2 * s.v_hat;
    s.omega.noalias() = X * s.theta_hat;
    s.omega -= s.V.cwiseProduct(s.g);  // g still holds the previous iterate here
    for (Index i = 0; i < n; ++i) {
      const ChannelOutput c = model.channel(y(i), s.omega(i), s.V(i));
      s.g(i) = c.g;
      s.dg(i) = c.dg_domega;
    }
    s.A.noalias() = -(X2.transpose() * s.dg);
    s.b.noalias() = X.transpose() * s.g;
    s.b += s.A.cwiseProduct(s.theta_hat);
    for (Index mu = 0; mu < d; ++mu) {
      const DenoiserOutput f = model.denoiser(s.b(mu), s.A(mu));
      theta_next(mu) = f.f;
      v_next(mu) = f.df_db;
    }
    if (opts.damping > 0.0) {
      theta_next = (1.0 - opts.damping) * theta_next + opts.damping * s.theta_hat;
      v_next = (1.0 - opts.damping) * v_next + opts.damping * s.v_hat;
    }
    if (!theta_next.allFinite() || !v_next.allFinite() || !s.g.allFinite()) {
      throw DivergenceError("AMP produced a non-finite iterate", t);
    }
    const double change = (theta_next - s.theta_hat).lpNorm<Eigen::Infinity>();
    s.theta_hat.swap(theta_next);
    s.v_hat.swap(v_next);
    s.iterations = t;
    if (change < opts.tol) {
      s.converged = true;
      break;
    }
  }
  return s;
}

namespace {

void require_converged(const AmpState& state, const Dataset& ds) {
  if (!state.converged) throw InvalidArgument("leave-one-out extraction needs a converged AMP state");
  if (state.theta_hat.size() != ds.d() || state.g.size() != ds.n()) {
    throw InvalidArgument("AMP state does not match the dataset dimensions");
  }
}

}  // namespace

Vector loo_predictions(const AmpState& state, const Dataset& ds) {
  require_converged(state, ds);
  const Matrix& X = ds.X();
  Vector quad = X.cwiseAbs2() * state.v_hat;
  Vector p = X * state.theta_hat;
  p -= state.g.cwiseProduct(quad);
  return p;
}

Matrix loo_estimators(const AmpState& state, const Dataset& ds) {
  require_converged(state, ds);
  const Matrix& X = ds.X();
  Matrix out = X;
  out.array().rowwise() *= state.v_hat.transpose().array();
  out.array().colwise() *= state.g.array();
  out = (-out).rowwise() + state.theta_hat.transpose();
  return out;
}

Vector conformity_scores_amp(const Dataset& ds_augmented, const GlmSpec& spec, const AmpOptions& opts) {
  const AmpState state = amp_fit(ds_augmented, spec, opts);
  if (!state.converged) throw ConvergenceError("AMP did not converge for conformity scores");
  return (ds_augmented.y() - loo_predictions(state, ds_augmented)).cwiseAbs();
}

}  // namespace camp
