#include "camp/taylor.hpp"

#include <cmath>

namespace camp {

namespace {

struct FixedPointPartials {
  // sample side
  Vector g_omega, g_V, g_omega2, g_Vomega;
  double g_y_last = 0.0;
  double g_yomega_last = 0.0;
  // coordinate side
  Vector f_b, f_A, f_bb, f_Ab;
  Index kinks = 0;
};

FixedPointPartials evaluate_partials(const AmpState& base, const Dataset& ds, const GlmSpec& spec) {
  const Index n = ds.n();
  const Index d = ds.d();
  FixedPointPartials p;
  p.g_omega.resize(n);
  p.g_V.resize(n);
  p.g_omega2.resize(n);
  p.g_Vomega.resize(n);
  for (Index i = 0; i < n; ++i) {
    const ChannelOutput c = channel_squared(ds.y()(i), base.omega(i), base.V(i));
    p.g_omega(i) = c.dg_domega;
    p.g_V(i) = c.dg_dV;
    p.g_omega2(i) = c.d2g_domega2;
    p.g_Vomega(i) = c.d2g_dVdomega;
    if (i == n - 1) {
      p.g_y_last = c.dg_dy;
      p.g_yomega_last = c.d2g_dydomega;
    }
  }
  p.f_b.resize(d);
  p.f_A.resize(d);
  p.f_bb.resize(d);
  p.f_Ab.resize(d);
  for (Index mu = 0; mu < d; ++mu) {
    const double b = base.b(mu);
    const double A = base.A(mu);
    if (spec.regularizer == Regularizer::Lasso && std::abs(std::abs(b) - spec.lambda) < kKinkTolerance) {
      p.f_b(mu) = p.f_A(mu) = p.f_bb(mu) = p.f_Ab(mu) = 0.0;
      ++p.kinks;
      continue;
    }
    const DenoiserOutput f = denoiser(spec, b, A);
    p.f_b(mu) = f.df_db;
    p.f_A(mu) = f.df_dA;
    p.f_bb(mu) = f.d2f_db2;
    p.f_Ab(mu) = f.d2f_dAdb;
  }
  return p;
}

}  // namespace

TaylorState taylor_fit(const AmpState& base, const Dataset& ds_augmented, const GlmSpec& spec,
                       const TaylorOptions& opts) {
  spec.validate();
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw InvalidArgument("Taylor damping must lie in [0, 1)");
  if (!base.converged) throw InvalidArgument("Taylor-AMP needs a converged base AMP state");
  const Index n = ds_augmented.n();
  const Index d = ds_augmented.d();
  if (base.theta_hat.size() != d || base.g.size() != n) {
    throw InvalidArgument("base AMP state does not match the augmented dataset");
  }
  const Matrix& X = ds_augmented.X();
  const Matrix X2 = X.cwiseAbs2();
  const FixedPointPartials p = evaluate_partials(base, ds_augmented, spec);

  TaylorState ts;
  ts.y_ref = ds_augmented.y()(n - 1);
  ts.kink_coordinates = p.kinks;
  ts.d_theta = Vector::Zero(d);
  ts.d_v = Vector::Zero(d);
  ts.d_g = Vector::Zero(n);
  ts.d_omega = Vector::Zero(n);
  ts.d_V = Vector::Zero(n);
  ts.d_dg = Vector::Zero(n);
  ts.d_b = Vector::Zero(d);
  ts.d_A = Vector::Zero(d);

  Vector theta_next(d);
  Vector v_next(d);
  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    ts.d_V.noalias() = X2 * ts.d_v;
    ts.d_omega.noalias() = X * ts.d_theta;
    ts.d_omega -= ts.d_V.cwiseProduct(base.g) + base.V.cwiseProduct(ts.d_g);

    ts.d_g = p.g_omega.cwiseProduct(ts.d_omega) + p.g_V.cwiseProduct(ts.d_V);
    ts.d_g(n - 1) += p.g_y_last;
    ts.d_dg = p.g_omega2.cwiseProduct(ts.d_omega) + p.g_Vomega.cwiseProduct(ts.d_V);
    ts.d_dg(n - 1) += p.g_yomega_last;

    ts.d_A.noalias() = -(X2.transpose() * ts.d_dg);
    ts.d_b.noalias() = X.transpose() * ts.d_g;
    ts.d_b += base.A.cwiseProduct(ts.d_theta) + ts.d_A.cwiseProduct(base.theta_hat);

    theta_next = p.f_b.cwiseProduct(ts.d_b) + p.f_A.cwiseProduct(ts.d_A);
    v_next = p.f_bb.cwiseProduct(ts.d_b) + p.f_Ab.cwiseProduct(ts.d_A);
    if (!theta_next.allFinite() || !v_next.allFinite()) {
      throw DivergenceError("Taylor-AMP produced a non-finite iterate", t);
    }
    if (opts.damping > 0.0) {
      theta_next = (1.0 - opts.damping) * theta_next + opts.damping * ts.d_theta;
      v_next = (1.0 - opts.damping) * v_next + opts.damping * ts.d_v;
    }
    const double change = std::max((theta_next - ts.d_theta).lpNorm<Eigen::Infinity>(),
                                   (v_next - ts.d_v).lpNorm<Eigen::Infinity>());
    ts.d_theta.swap(theta_next);
    ts.d_v.swap(v_next);
    ts.iterations = t;
    if (change < opts.tol) {
      ts.converged = true;
      break;
    }
  }
  return ts;
}

Vector taylor_loo_derivatives(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented) {
  if (!base.converged || !ts.converged) throw InvalidArgument("Taylor leave-one-out derivative needs converged states");
  const Matrix& X = ds_augmented.X();
  const Matrix X2 = X.cwiseAbs2();
  Vector dp = X * ts.d_theta;
  dp -= base.g.cwiseProduct(X2 * ts.d_v);
  dp -= ts.d_g.cwiseProduct(X2 * base.v_hat);
  return dp;
}

double taylor_loo_derivative(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented, Index i) {
  if (i < 0 || i >= ds_augmented.n()) throw InvalidArgument("sample index out of range");
  if (!base.converged || !ts.converged) throw InvalidArgument("Taylor leave-one-out derivative needs converged states");
  const auto x = ds_augmented.X().row(i);
  const auto x2 = x.cwiseAbs2();
  return x.dot(ts.d_theta) - base.g(i) * x2.dot(ts.d_v) - ts.d_g(i) * x2.dot(base.v_hat);
}

Matrix taylor_scores(const AmpState& base, const TaylorState& ts, const Dataset& ds_augmented, const Vector& labels) {
  if (labels.size() == 0) throw InvalidArgument("taylor_scores needs a non-empty label grid");
  const Index n = ds_augmented.n();
  const Vector p = loo_predictions(base, ds_augmented);
  const Vector dp = taylor_loo_derivatives(base, ts, ds_augmented);
  const Vector& y = ds_augmented.y();
  Matrix scores(labels.size(), n);
  for (Index k = 0; k < labels.size(); ++k) {
    const double offset = labels(k) - ts.y_ref;
    for (Index i = 0; i + 1 < n; ++i) scores(k, i) = std::abs(y(i) - (p(i) + offset * dp(i)));
    scores(k, n - 1) = std::abs(labels(k) - (p(n - 1) + offset * dp(n - 1)));
  }
  return scores;
}

}  // namespace camp
