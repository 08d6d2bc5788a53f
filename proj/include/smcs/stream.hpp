#pragma once

// Dense loss streams: one row per round, one column per model, with either a
// time-constant bound matrix or one bound matrix per round.

#include "smcs/panel.hpp"
#include "smcs/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smcs {

struct LossStream {
  std::vector<std::string> models;
  std::vector<std::int64_t> times;
  /// rounds x models; NaN marks a model without a loss in that round.
  Matrix<double> losses;
  /// Per-round bounds. Empty means `fixed_bound` applies to every round.
  std::vector<Matrix<double>> bounds;
  Matrix<double> fixed_bound;

  std::size_t rounds() const { return times.size(); }
  std::size_t size() const { return models.size(); }
  bool per_round_bounds() const { return !bounds.empty(); }
  const Matrix<double>& bound_at(std::size_t r) const { return bounds.empty() ? fixed_bound : bounds[r]; }
};

/// Structural checks: shapes agree, times strictly increase, bounds are
/// symmetric, nonnegative and finite on every active pair.
void check_stream(const LossStream& s);

Round<double> round_at(const LossStream& s, std::size_t r);

/// Averages scaled differences over groups that share models and times.
/// Each group's pair contributes d / c (0 for a zero bound); the result has
/// bound 1, or 0 where no group carried evidence, and a pair is active when
/// at least one group observed it.
std::vector<Round<double>> aggregate_groups(const std::vector<LossStream>& groups);

}  // namespace smcs
