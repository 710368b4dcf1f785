#include "camp/rbp.hpp"

#include <string>

namespace camp {

RbpState rbp_fit(const Dataset& ds, const GlmSpec& spec, const RbpOptions& opts) {
  spec.validate();
  const Index n = ds.n();
  const Index d = ds.d();
  if (n * d > kRbpMaxEdges) {
    throw InvalidArgument("rBP needs n*d <= " + std::to_string(kRbpMaxEdges) + ", got " + std::to_string(n * d));
  }
  if (!(opts.damping >= 0.0 && opts.damping < 1.0)) throw InvalidArgument("rBP damping must lie in [0, 1)");
  const Matrix& X = ds.X();
  const Vector& y = ds.y();
  const Matrix X2 = X.cwiseAbs2();

  RbpState s;
  s.cavity_mean = Matrix::Zero(d, n);
  s.cavity_var = Matrix::Ones(d, n);
  s.omega_cav.resize(n, d);
  s.V_cav.resize(n, d);
  s.A_cav.resize(d, n);
  s.b_cav.resize(d, n);

  Matrix msg_b(n, d);  // x_{i mu} g_out(y_i, omega_{i->mu}, V_{i->mu})
  Matrix msg_A(n, d);  // -x_{i mu}^2 dg_out/domega
  Matrix next_mean(d, n);
  Matrix next_var(d, n);
  Vector b_total(d);
  Vector A_total(d);

  for (std::size_t t = 1; t <= opts.max_iter; ++t) {
    // Sample-side cavities exclude coordinate mu from the sums over nu.
    s.omega_cav = X.cwiseProduct(s.cavity_mean.transpose());
    s.V_cav = X2.cwiseProduct(s.cavity_var.transpose());
    const Vector omega_full = s.omega_cav.rowwise().sum();
    const Vector V_full = s.V_cav.rowwise().sum();
    s.omega_cav = (-s.omega_cav).colwise() + omega_full;
    s.V_cav = (-s.V_cav).colwise() + V_full;

    for (Index mu = 0; mu < d; ++mu) {
      for (Index i = 0; i < n; ++i) {
        const ChannelOutput c = channel_squared(y(i), s.omega_cav(i, mu), s.V_cav(i, mu));
        msg_b(i, mu) = X(i, mu) * c.g;
        msg_A(i, mu) = -X2(i, mu) * c.dg_domega;
      }
    }
    b_total = msg_b.colwise().sum().transpose();
    A_total = msg_A.colwise().sum().transpose();

    // Coordinate-side cavities exclude sample i from the sums over j.
    s.b_cav = (-msg_b.transpose()).colwise() + b_total;
    s.A_cav = (-msg_A.transpose()).colwise() + A_total;
    for (Index i = 0; i < n; ++i) {
      for (Index mu = 0; mu < d; ++mu) {
        const DenoiserOutput f = denoiser(spec, s.b_cav(mu, i), s.A_cav(mu, i));
        next_mean(mu, i) = f.f;
        next_var(mu, i) = f.df_db;
      }
    }
    if (opts.damping > 0.0) {
      next_mean = (1.0 - opts.damping) * next_mean + opts.damping * s.cavity_mean;
      next_var = (1.0 - opts.damping) * next_var + opts.damping * s.cavity_var;
    }
    if (!next_mean.allFinite() || !next_var.allFinite()) {
      throw DivergenceError("rBP produced a non-finite message", t);
    }
    const double change = (next_mean - s.cavity_mean).lpNorm<Eigen::Infinity>();
    s.cavity_mean.swap(next_mean);
    s.cavity_var.swap(next_var);
    s.iterations = t;
    if (change < opts.tol) {
      s.converged = true;
      break;
    }
  }

  // Marginals use every incoming message, i.e. the full sums over samples.
  s.theta_hat.resize(d);
  s.v_hat.resize(d);
  for (Index mu = 0; mu < d; ++mu) {
    const DenoiserOutput f = denoiser(spec, b_total(mu), A_total(mu));
    s.theta_hat(mu) = f.f;
    s.v_hat(mu) = f.df_db;
  }
  return s;
}

double rbp_loo_prediction(const RbpState& state, const Dataset& ds, Index i) {
  if (i < 0 || i >= ds.n()) throw InvalidArgument("sample index out of range");
  if (!state.converged) throw InvalidArgument("rBP cavity prediction needs a converged state");
  return ds.X().row(i).dot(state.cavity_mean.col(i));
}

}  // namespace camp
