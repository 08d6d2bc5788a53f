#pragma once

// Streaming e-process kernels for one ordered model pair (i, j).
//
// Two kernels share PairState:
//  * product (strong hypothesis): E_t = prod (1 + lambda_r d_r) with a
//    predictable lambda_r in [0, 1/c_r];
//  * empirical Bernstein (weak hypotheses):
//    E_t = exp(lambda * sum d - psi(c, lambda) * V_t), V_t = sum (d_r - gamma_r)^2.
// All e-values are held as logarithms.

#include "smcs/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <variant>

namespace smcs {

/// Absolute slack allowed on |d| <= c/2.
inline constexpr double kBoundTolerance = 1e-9;

enum class GammaMode { zero, running_mean };

template <typename Scalar = double>
struct PairState {
  std::int64_t t = 0;
  Scalar log_e = 0;
  Scalar sum_d = 0;
  Scalar v = 0;
  /// Centring value for the next round; depends on rounds 1..t only.
  Scalar gamma = 0;
  Scalar last_d = 0;

  Scalar mean_d() const { return t > 0 ? sum_d / static_cast<Scalar>(t) : Scalar(0); }
};

struct FixedFraction {
  double kappa = 0.5;
};

/// Adaptive scheme for quantile forecasts at level tau.
struct CovidAdaptive {
  double tau = 0.5;
  double epsilon = 1e-6;
};

using BettingScheme = std::variant<FixedFraction, CovidAdaptive>;

template <typename Scalar>
void check_bound(Scalar d, Scalar c) {
  if (!(std::abs(d) <= c / 2 + static_cast<Scalar>(kBoundTolerance))) {
    std::ostringstream msg;
    msg << "loss difference " << d << " exceeds half its bound " << c;
    throw BoundViolation(msg.str());
  }
}

/// Betting fraction for the coming round.
template <typename Scalar>
Scalar lambda_next(const BettingScheme& scheme, Scalar c, Scalar last_d) {
  if (!(c >= 0)) throw DomainError("bound must be nonnegative");
  if (const auto* f = std::get_if<FixedFraction>(&scheme)) {
    if (!(f->kappa > 0 && f->kappa <= 1)) throw DomainError("betting fraction must lie in (0,1]");
    return c > 0 ? static_cast<Scalar>(f->kappa) / c : Scalar(0);
  }
  const auto& a = std::get<CovidAdaptive>(scheme);
  if (!(a.tau > 0 && a.tau < 1) || !(a.epsilon > 0))
    throw DomainError("adaptive betting needs tau in (0,1) and epsilon > 0");
  const Scalar centre = std::abs(static_cast<Scalar>(a.tau) - Scalar(0.5));
  const Scalar level = (2 - centre) / (1 + centre);
  const Scalar recent =
      (Scalar(1.5) * std::numbers::pi_v<Scalar> + std::atan(-last_d)) / std::numbers::pi_v<Scalar>;
  return 1 / (level * recent * c + static_cast<Scalar>(a.epsilon));
}

/// One round of the product e-process. A zero bound forces d = 0 and only
/// advances the clock.
template <typename Scalar>
PairState<Scalar> strong_update(PairState<Scalar> s, Scalar d, Scalar c, Scalar lambda) {
  if (!(c >= 0)) throw DomainError("bound must be nonnegative");
  check_bound(d, c);
  ++s.t;
  s.last_d = d;
  if (c == 0) return s;
  if (!(lambda >= 0) || lambda * c > 1 + 1e-12)
    throw DomainError("product kernel needs 0 <= lambda <= 1/c");
  s.log_e += std::log1p(lambda * d);
  s.sum_d += d;
  return s;
}

/// (-log(1 - c lambda) - c lambda) / c^2 on 0 <= lambda < 1/c.
template <typename Scalar>
Scalar psi_e(Scalar c, Scalar lambda) {
  if (!(c > 0)) throw DomainError("psi needs c > 0");
  if (!(lambda >= 0) || !(c * lambda < 1)) throw DomainError("psi needs 0 <= lambda < 1/c");
  const Scalar x = c * lambda;
  return (-std::log1p(-x) - x) / (c * c);
}

namespace detail {

template <typename Scalar>
void refresh_gamma(PairState<Scalar>& s, GammaMode mode, Scalar c) {
  s.gamma = mode == GammaMode::running_mean ? std::clamp(s.mean_d(), -c / 2, c / 2) : Scalar(0);
}

}  // namespace detail

template <typename Scalar>
PairState<Scalar> bernstein_update(PairState<Scalar> s, Scalar d, Scalar lambda, Scalar c,
                                   GammaMode mode = GammaMode::running_mean) {
  check_bound(d, c);
  const Scalar psi = psi_e(c, lambda);
  const Scalar centred = d - s.gamma;
  s.log_e += lambda * d - psi * centred * centred;
  s.v += centred * centred;
  s.sum_d += d;
  s.last_d = d;
  ++s.t;
  detail::refresh_gamma(s, mode, c);
  return s;
}

/// Round in which the pair carried no information (zero bound): the factor
/// is exactly one, only the clock and the centring advance.
template <typename Scalar>
PairState<Scalar> no_evidence_update(PairState<Scalar> s, Scalar c,
                                     GammaMode mode = GammaMode::running_mean) {
  ++s.t;
  s.last_d = 0;
  detail::refresh_gamma(s, mode, c);
  return s;
}

/// log M_t(x) = lambda sum_d - lambda t x - psi V.
template <typename Scalar>
Scalar log_supermartingale_at(const PairState<Scalar>& s, Scalar x, Scalar lambda, Scalar c) {
  const Scalar psi = psi_e(c, lambda);
  return lambda * s.sum_d - lambda * static_cast<Scalar>(s.t) * x - psi * s.v;
}

template <typename Scalar>
Scalar supermartingale_at(const PairState<Scalar>& s, Scalar x, Scalar lambda, Scalar c) {
  return std::exp(log_supermartingale_at(s, x, lambda, c));
}

/// Time-uniform lower confidence bound for the running mean of conditional
/// expected differences, clipped at -c/2.
template <typename Scalar>
Scalar lower_conf_bound(const PairState<Scalar>& s, Scalar lambda, Scalar c, Scalar alpha) {
  if (s.t < 1) throw StateError("lower confidence bound needs at least one round");
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0,1)");
  if (!(lambda > 0)) throw DomainError("lower confidence bound needs lambda > 0");
  const Scalar psi = psi_e(c, lambda);
  const Scalar t = static_cast<Scalar>(s.t);
  return std::max(-c / 2, s.mean_d() - (psi * s.v + std::log(1 / alpha)) / (lambda * t));
}

}  // namespace smcs
