#pragma once

// Averaging pairwise e-values into per-model e-values and the closure
// adjustment with the arithmetic mean as merging function.

#include "smcs/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace smcs {

/// Cap on log e-values before exponentiating. Far above any log(1/alpha).
inline constexpr double kLogCap = 700.0;

template <typename Scalar>
Scalar saturating_exp(Scalar log_e) {
  return std::exp(std::min(log_e, static_cast<Scalar>(kLogCap)));
}

/// Row means over j != i of a square matrix of pairwise e-values. The
/// diagonal is ignored; NaN marks a missing pair.
template <typename Derived>
Vector<typename Derived::Scalar> average_pairwise(const Eigen::MatrixBase<Derived>& e) {
  using Scalar = typename Derived::Scalar;
  const auto m = e.rows();
  if (m < 2 || e.cols() != m) throw DomainError("pairwise e-values need a square matrix with m >= 2");
  Vector<Scalar> out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar sum = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == j) continue;
      const Scalar v = e(i, j);
      if (std::isnan(v)) throw DomainError("missing pairwise e-value");
      if (v < 0) throw DomainError("e-values must be nonnegative");
      sum += v;
    }
    out[i] = sum / static_cast<Scalar>(m - 1);
  }
  return out;
}

/// E*_i = min over subsets I containing i of the mean of raw over I. For a
/// fixed subset size the mean is smallest when the other members are the
/// smallest remaining values, so only the m nested prefixes of the ascending
/// order are candidates. O(m^2) overall.
template <typename Derived>
Vector<typename Derived::Scalar> closure_adjust(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  const auto m = raw.size();
  if (m < 1) throw DomainError("closure adjustment needs at least one e-value");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(raw[i] >= 0)) throw DomainError("e-values must be nonnegative");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return raw[a] < raw[b]; });
  Vector<Scalar> out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar acc = raw[i];
    Scalar best = raw[i];
    Scalar size = 1;
    for (const auto k : order) {
      if (k == i) continue;
      acc += raw[k];
      size += 1;
      best = std::min(best, acc / size);
    }
    out[i] = best;
  }
  return out;
}

/// Checks that adjusting the m(m-1) pairwise e-values directly is dominated by
/// adjusting the row means: E*_{ij} <= E*_{i.} for every j != i.
template <typename Derived>
bool remark1_check(const Eigen::MatrixBase<Derived>& e, Eigen::Index i) {
  using Scalar = typename Derived::Scalar;
  const auto m = e.rows();
  const Vector<Scalar> model_level = closure_adjust(average_pairwise(e));
  Vector<Scalar> flat(m * (m - 1));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> where;
  Eigen::Index n = 0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l)
      if (k != l) {
        flat[n++] = e(k, l);
        where.emplace_back(k, l);
      }
  const Vector<Scalar> pair_level = closure_adjust(flat);
  for (Eigen::Index p = 0; p < n; ++p) {
    if (where[static_cast<std::size_t>(p)].first != i) continue;
    const Scalar rhs = model_level[i];
    if (pair_level[p] > rhs + 1e-12 * std::max(Scalar(1), std::abs(rhs))) return false;
  }
  return true;
}

}  // namespace smcs
