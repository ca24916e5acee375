#ifndef LEIBENSON_FLUX_HPP
#define LEIBENSON_FLUX_HPP

// Exponents of d_t u = Delta_p u^q, the truncated (regularized) flux
//   A(u, g) = q^{p-1} chi(u)^{(q-1)(p-1)} |g|^{p-2} g,   chi(u) = min(N, max(u, 1/N)),
// and the degenerate limit flux |w|^{p-2} w applied to w = grad(u^q).

#include <algorithm>
#include <cmath>
#include <string>

#include "leibenson/errors.hpp"

namespace leibenson {

enum class Regime { slow, critical, fast };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::slow: return "slow";
    case Regime::critical: return "critical";
    case Regime::fast: return "fast";
  }
  return "unknown";
}

/// Exponents p > 1, q > 0 with delta = q(p-1) - 1 and the regime frozen at construction.
class LeibensonParams {
 public:
  LeibensonParams(double p, double q) : p_(p), q_(q) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("p must be a finite real > 1");
    if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("q must be a finite real > 0");
    delta_ = q_ * (p_ - 1.0) - 1.0;
    regime_ = delta_ > 0.0 ? Regime::slow : (delta_ < 0.0 ? Regime::fast : Regime::critical);
    pq_ok_ = p_ * q_ >= 1.0;
  }

  double p() const { return p_; }
  double q() const { return q_; }
  double delta() const { return delta_; }
  Regime regime() const { return regime_; }
  /// Hypothesis pq >= 1 required by the existence pipeline.
  bool pq_ok() const { return pq_ok_; }

 private:
  double p_;
  double q_;
  double delta_;
  Regime regime_;
  bool pq_ok_;
};

inline Regime classify(const LeibensonParams& params) { return params.regime(); }

/// Regularization level N > 1.
class RegLevel {
 public:
  explicit RegLevel(double n) : n_(n) {
    if (!(n > 1.0) || !std::isfinite(n)) throw ConfigError("regularization level N must be > 1");
  }
  double N() const { return n_; }
  double floor() const { return 1.0 / n_; }

 private:
  double n_;
};

template <typename Scalar>
Scalar truncate(Scalar u, const RegLevel& reg) {
  return std::min(Scalar(reg.N()), std::max(u, Scalar(1.0 / reg.N())));
}

/// sign(w) |w|^e, finite for every e > 0 including w = 0.
template <typename Scalar>
Scalar signed_power(Scalar w, Scalar e) {
  if (w == Scalar(0)) return Scalar(0);
  const Scalar m = std::pow(std::abs(w), e);
  return w > Scalar(0) ? m : -m;
}

/// |w|^{p-2} w evaluated as sign(w) |w|^{p-1}.
template <typename Scalar>
Scalar limit_flux(Scalar w, const LeibensonParams& params) {
  return signed_power(w, Scalar(params.p() - 1.0));
}

/// Linearization of limit_flux with |w|^2 -> |w|^2 + eps^2 so that p < 2 stays finite at w = 0.
template <typename Scalar>
Scalar limit_flux_derivative(Scalar w, const LeibensonParams& params, Scalar eps) {
  const Scalar p = Scalar(params.p());
  return (p - Scalar(1)) * std::pow(w * w + eps * eps, (p - Scalar(2)) / Scalar(2));
}

/// Diffusivity prefactor q^{p-1} chi(u)^{(q-1)(p-1)} of the regularized flux.
template <typename Scalar>
Scalar reg_coefficient(Scalar u, const RegLevel& reg, const LeibensonParams& params) {
  const Scalar e = Scalar((params.q() - 1.0) * (params.p() - 1.0));
  return std::pow(Scalar(params.q()), Scalar(params.p() - 1.0)) * std::pow(truncate(u, reg), e);
}

/// d/du of reg_coefficient; zero where chi is clamped.
template <typename Scalar>
Scalar reg_coefficient_derivative(Scalar u, const RegLevel& reg, const LeibensonParams& params) {
  if (u <= Scalar(reg.floor()) || u >= Scalar(reg.N())) return Scalar(0);
  const Scalar e = Scalar((params.q() - 1.0) * (params.p() - 1.0));
  return std::pow(Scalar(params.q()), Scalar(params.p() - 1.0)) * e * std::pow(u, e - Scalar(1));
}

template <typename Scalar>
Scalar reg_flux(Scalar u, Scalar g, const RegLevel& reg, const LeibensonParams& params) {
  return reg_coefficient(u, reg, params) * limit_flux(g, params);
}

}  // namespace leibenson

#endif  // LEIBENSON_FLUX_HPP
