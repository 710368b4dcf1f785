#include "camp/glm.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace camp {

std::string to_string(Regularizer r) { return r == Regularizer::Ridge ? "ridge" : "lasso"; }

Regularizer regularizer_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "ridge") return Regularizer::Ridge;
  if (lower == "lasso") return Regularizer::Lasso;
  throw InvalidArgument("unknown regularizer '" + name + "' (expected ridge or lasso)");
}

void GlmSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and > 0");
}

ChannelOutput channel_gaussian(double y, double omega, double V, double noise) {
  const double s = noise + V;
  if (!(s > 0.0)) throw DomainError("channel requires noise + V > 0");
  const double inv = 1.0 / s;
  const double residual = y - omega;
  ChannelOutput out;
  out.g = residual * inv;
  out.dg_domega = -inv;
  out.dg_dV = -residual * inv * inv;
  out.d2g_domega2 = 0.0;
  out.d2g_dVdomega = inv * inv;
  out.dg_dy = inv;
  out.d2g_dydomega = 0.0;
  return out;
}

ChannelOutput channel_squared(double y, double omega, double V) {
  if (!(1.0 + V > 0.0)) throw DomainError("squared-loss channel requires 1 + V > 0");
  return channel_gaussian(y, omega, V, 1.0);
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

DenoiserOutput denoiser(const GlmSpec& spec, double b, double A) {
  spec.validate();
  const double lambda = spec.lambda;
  DenoiserOutput out;
  if (spec.regularizer == Regularizer::Ridge) {
    const double s = lambda + A;
    if (!(s > 0.0)) throw DomainError("ridge denoiser requires lambda + A > 0");
    const double inv = 1.0 / s;
    out.f = b * inv;
    out.df_db = inv;
    out.df_dA = -b * inv * inv;
    out.d2f_db2 = 0.0;
    out.d2f_dAdb = -inv * inv;
    return out;
  }
  // A = 0 is tolerated inside the threshold, where the minimizer is 0 regardless.
  if (!(A >= 0.0)) throw DomainError("lasso denoiser requires A > 0");
  if (std::abs(b) <= lambda) return out;
  if (A == 0.0) throw DomainError("lasso denoiser requires A > 0 outside the threshold");
  const double inv = 1.0 / A;
  out.f = soft_threshold(b, lambda) * inv;
  out.df_db = inv;
  out.df_dA = -out.f * inv;
  out.d2f_db2 = 0.0;
  out.d2f_dAdb = -inv * inv;
  return out;
}

double prox_generic(const ScalarLoss& loss, double y, double omega, double V, double tol, int max_iter) {
  if (!(V > 0.0)) throw DomainError("prox requires V > 0");
  if (!(tol > 0.0)) throw InvalidArgument("prox tolerance must be > 0");
  const auto objective = [&](double z) { return loss(y, z) + (z - omega) * (z - omega) / (2.0 * V); };

  // Walk downhill from omega with doubling steps until the minimizer is bracketed.
  double center = omega;
  double f_center = objective(center);
  double step = std::max(std::sqrt(V), 1e-3 * (1.0 + std::abs(omega)));
  int iter = 0;
  for (;; ++iter) {
    if (iter >= max_iter) throw ConvergenceError("prox_generic: could not bracket the minimizer");
    const double f_left = objective(center - step);
    const double f_right = objective(center + step);
    if (!std::isfinite(f_left) || !std::isfinite(f_right) || !std::isfinite(f_center)) {
      throw DomainError("prox_generic: objective is not finite");
    }
    if (f_left >= f_center && f_right >= f_center) break;
    if (f_left < f_right) {
      center -= step;
      f_center = f_left;
    } else {
      center += step;
      f_center = f_right;
    }
    step *= 2.0;
  }

  int bits = static_cast<int>(std::ceil(-std::log2(tol / (2.0 * step)))) + 1;
  bits = std::clamp(bits, 8, std::numeric_limits<double>::digits);
  const auto cap = static_cast<std::uintmax_t>(std::max(max_iter - iter, 1));
  std::uintmax_t used = cap;  // in: cap, out: iterations taken
  const auto [z, value] = boost::math::tools::brent_find_minima(objective, center - step, center + step, bits, used);
  (void)value;
  if (used >= cap) {
    throw ConvergenceError("prox_generic: Brent iteration cap reached");
  }
  return z;
}

}  // namespace camp
