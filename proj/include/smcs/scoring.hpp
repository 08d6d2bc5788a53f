#pragma once

// Loss functions for probabilistic and quantile forecasts, and bounds on the
// difference of two forecasts' losses that hold for every outcome y.

#include "smcs/normal.hpp"
#include "smcs/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <variant>
#include <vector>

namespace smcs {

template <typename Scalar = double>
struct Normal {
  Scalar mean{0};
  Scalar variance{1};
};

/// Right-continuous step cdf: F(x) = cumprob[k] on [support[k], support[k+1]).
template <typename Scalar = double>
struct StepCdf {
  Vector<Scalar> support;
  Vector<Scalar> cumprob;
};

template <typename Scalar = double>
struct Point {
  Scalar value{0};
};

template <typename Scalar = double>
using Forecast = std::variant<Normal<Scalar>, StepCdf<Scalar>, Point<Scalar>>;

enum class Transform { identity, log };

template <typename Scalar>
void validate(const Normal<Scalar>& f) {
  if (!(f.variance > 0) || !std::isfinite(f.variance) || !std::isfinite(f.mean))
    throw DomainError("normal forecast needs finite mean and positive variance");
}

template <typename Scalar>
void validate(const StepCdf<Scalar>& f) {
  const auto n = f.support.size();
  if (n == 0 || f.cumprob.size() != n)
    throw DomainError("step cdf needs matching, nonempty support and probabilities");
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!std::isfinite(f.support[k])) throw DomainError("step cdf support must be finite");
    if (!(f.cumprob[k] >= 0 && f.cumprob[k] <= 1))
      throw DomainError("step cdf probabilities must lie in [0,1]");
    if (k > 0 && !(f.support[k] > f.support[k - 1]))
      throw DomainError("step cdf support must be strictly increasing");
    if (k > 0 && f.cumprob[k] < f.cumprob[k - 1])
      throw DomainError("step cdf probabilities must be nondecreasing");
  }
  if (f.cumprob[n - 1] != Scalar(1)) throw DomainError("step cdf must end at probability 1");
}

template <typename Scalar>
StepCdf<Scalar> dirac(Scalar at) {
  StepCdf<Scalar> f;
  f.support = Vector<Scalar>::Constant(1, at);
  f.cumprob = Vector<Scalar>::Ones(1);
  return f;
}

/// Quantile levels of the discretization used for mixed normal/step pairs.
inline constexpr std::array<double, 23> kDiscretizationLevels = {
    0.01, 0.025, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
    0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.975, 0.99};

/// Normal discretized at the 23 levels plus atoms at mean -/+ 6 sd.
template <typename Scalar>
StepCdf<Scalar> discretize(const Normal<Scalar>& f) {
  validate(f);
  const Scalar sd = std::sqrt(f.variance);
  const auto n = static_cast<Eigen::Index>(kDiscretizationLevels.size()) + 2;
  StepCdf<Scalar> out;
  out.support.resize(n);
  out.cumprob.resize(n);
  out.support[0] = f.mean - 6 * sd;
  out.cumprob[0] = norm_cdf(Scalar(-6));
  for (std::size_t k = 0; k < kDiscretizationLevels.size(); ++k) {
    const auto p = static_cast<Scalar>(kDiscretizationLevels[k]);
    out.support[k + 1] = f.mean + sd * norm_quantile(p);
    out.cumprob[k + 1] = p;
  }
  out.support[n - 1] = f.mean + 6 * sd;
  out.cumprob[n - 1] = 1;
  return out;
}

template <typename Scalar>
StepCdf<Scalar> to_step(const Forecast<Scalar>& f) {
  if (const auto* n = std::get_if<Normal<Scalar>>(&f)) return discretize(*n);
  if (const auto* p = std::get_if<Point<Scalar>>(&f)) return dirac(p->value);
  return std::get<StepCdf<Scalar>>(f);
}

/// Closed-form CRPS of N(mean, variance) at y.
template <typename Scalar>
Scalar crps_normal(Scalar mean, Scalar variance, Scalar y) {
  validate(Normal<Scalar>{mean, variance});
  const Scalar sd = std::sqrt(variance);
  const Scalar z = (y - mean) / sd;
  const Scalar v = sd * (z * (2 * norm_cdf(z) - 1) + 2 * norm_pdf(z) -
                         std::numbers::inv_sqrtpi_v<Scalar>);
  return std::max(v, Scalar(0));
}

template <typename Scalar>
Scalar crps_normal(const Normal<Scalar>& f, Scalar y) {
  return crps_normal(f.mean, f.variance, y);
}

/// Exact CRPS of a step cdf: integral of F^2 left of y plus (1-F)^2 right of y.
template <typename Scalar>
Scalar crps_step(const StepCdf<Scalar>& f, Scalar y) {
  validate(f);
  const auto n = f.support.size();
  Scalar total = 0;
  // Segment k covers [support[k-1], support[k]) with value cumprob[k-1];
  // segment 0 is (-inf, support[0]) with F = 0 and segment n is [support[n-1], inf) with F = 1.
  if (y < f.support[0]) total += f.support[0] - y;
  if (y > f.support[n - 1]) total += y - f.support[n - 1];
  for (Eigen::Index k = 1; k < n; ++k) {
    const Scalar lo = f.support[k - 1], hi = f.support[k], p = f.cumprob[k - 1];
    const Scalar left = std::max(Scalar(0), std::min(hi, y) - lo);
    const Scalar right = std::max(Scalar(0), hi - std::max(lo, y));
    total += p * p * left + (1 - p) * (1 - p) * right;
  }
  return total;
}

template <typename Scalar>
Scalar crps(const Forecast<Scalar>& f, Scalar y) {
  if (const auto* n = std::get_if<Normal<Scalar>>(&f)) return crps_normal(*n, y);
  if (const auto* p = std::get_if<Point<Scalar>>(&f)) return std::abs(p->value - y);
  return crps_step(std::get<StepCdf<Scalar>>(f), y);
}

namespace detail {

template <typename Scalar>
Scalar apply(Transform g, Scalar x) {
  if (g == Transform::identity) return x;
  if (!(x > 0)) {
    std::ostringstream msg;
    msg << "log transform needs a positive argument, got " << x;
    throw DomainError(msg.str());
  }
  return std::log(x);
}

}  // namespace detail

/// Generalized piecewise-linear quantile score (1{y <= x} - tau)(g(x) - g(y)).
template <typename Scalar>
Scalar quantile_score(Scalar tau, Scalar x, Scalar y, Transform g = Transform::identity) {
  if (!(tau > 0 && tau < 1)) throw DomainError("quantile level must lie in (0,1)");
  const Scalar gx = detail::apply(g, x), gy = detail::apply(g, y);
  return ((y <= x ? Scalar(1) : Scalar(0)) - tau) * (gx - gy);
}

/// Consistent scoring function for the median: (Phi(m) - Phi(y)) / 2.
template <typename Scalar>
Scalar median_score(Scalar m, Scalar y) {
  return Scalar(0.5) * (norm_cdf(m) - norm_cdf(y));
}

/// 2 max(tau, 1 - tau) |g(x1) - g(x2)|, so |score difference| <= bound / 2.
template <typename Scalar>
Scalar quantile_diff_bound(Scalar tau, Scalar x1, Scalar x2, Transform g = Transform::identity) {
  if (!(tau > 0 && tau < 1)) throw DomainError("quantile level must lie in (0,1)");
  return 2 * std::max(tau, 1 - tau) * std::abs(detail::apply(g, x1) - detail::apply(g, x2));
}

/// Bound c with |crps(a, y) - crps(b, y)| <= c/2 for all y. The difference is
/// monotone between cdf crossings, so its extremes sit at the single finite
/// crossing of two normals (if any) or at the limits y -> -inf and y -> +inf.
template <typename Scalar>
Scalar crps_diff_bound(const Normal<Scalar>& a, const Normal<Scalar>& b) {
  validate(a);
  validate(b);
  const Scalar sa = std::sqrt(a.variance), sb = std::sqrt(b.variance);
  const Scalar spread = (sb - sa) * std::numbers::inv_sqrtpi_v<Scalar>;
  Scalar worst = std::max(std::abs(b.mean - a.mean + spread), std::abs(a.mean - b.mean + spread));
  if (sa != sb) {
    const Scalar z = (sb * a.mean - sa * b.mean) / (sb - sa);
    // A crossing far outside both bodies is numerically at infinity.
    if (std::abs(z - a.mean) <= 40 * sa && std::abs(z - b.mean) <= 40 * sb)
      worst = std::max(worst, std::abs(crps_normal(a, z) - crps_normal(b, z)));
  }
  return 2 * worst;
}

/// Same bound for step cdfs. The difference is piecewise linear in y with kinks
/// only at jump points and constant outside their hull, so the union of both
/// jump sets covers the crossings and the limits at -inf and +inf.
template <typename Scalar>
Scalar crps_diff_bound(const StepCdf<Scalar>& a, const StepCdf<Scalar>& b) {
  validate(a);
  validate(b);
  Scalar worst = 0;
  auto visit = [&](const Vector<Scalar>& jumps) {
    for (Eigen::Index k = 0; k < jumps.size(); ++k)
      worst = std::max(worst, std::abs(crps_step(a, jumps[k]) - crps_step(b, jumps[k])));
  };
  visit(a.support);
  visit(b.support);
  return 2 * worst;
}

/// Mixed pairs are compared after mapping both sides to step cdfs.
template <typename Scalar>
Scalar crps_diff_bound(const Forecast<Scalar>& a, const Forecast<Scalar>& b) {
  const auto* na = std::get_if<Normal<Scalar>>(&a);
  const auto* nb = std::get_if<Normal<Scalar>>(&b);
  if (na && nb) return crps_diff_bound(*na, *nb);
  return crps_diff_bound(to_step(a), to_step(b));
}

}  // namespace smcs
