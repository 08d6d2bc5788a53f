#include "smcs/stream.hpp"

#include <cmath>
#include <sstream>

namespace smcs {

namespace {

void check_bound_matrix(const Matrix<double>& c, const LossStream& s, std::size_t r) {
  const auto m = static_cast<Eigen::Index>(s.size());
  if (c.rows() != m || c.cols() != m) throw DomainError("bound matrix does not match the model count");
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const bool active = std::isfinite(s.losses(static_cast<Eigen::Index>(r), i)) &&
                          std::isfinite(s.losses(static_cast<Eigen::Index>(r), j));
      if (!active) continue;
      if (!(c(i, j) >= 0) || !std::isfinite(c(i, j)) || c(i, j) != c(j, i)) {
        std::ostringstream msg;
        msg << "bound for " << s.models[static_cast<std::size_t>(i)] << "/"
            << s.models[static_cast<std::size_t>(j)] << " at t=" << s.times[r]
            << " must be finite, nonnegative and symmetric";
        throw DomainError(msg.str());
      }
    }
}

}  // namespace

void check_stream(const LossStream& s) {
  const auto n = static_cast<Eigen::Index>(s.rounds());
  const auto m = static_cast<Eigen::Index>(s.size());
  if (s.losses.rows() != n || s.losses.cols() != m) throw DomainError("loss matrix shape does not match the stream");
  for (std::size_t r = 1; r < s.rounds(); ++r)
    if (s.times[r] <= s.times[r - 1]) throw DomainError("round times must strictly increase");
  if (s.per_round_bounds() && s.bounds.size() != s.rounds())
    throw DomainError("one bound matrix per round is required");
  for (std::size_t r = 0; r < s.rounds(); ++r) check_bound_matrix(s.bound_at(r), s, r);
}

Round<double> round_at(const LossStream& s, std::size_t r) {
  return make_round<double>(s.times[r], s.losses.row(static_cast<Eigen::Index>(r)).transpose(), s.bound_at(r));
}

std::vector<Round<double>> aggregate_groups(const std::vector<LossStream>& groups) {
  if (groups.empty()) return {};
  const auto& first = groups.front();
  for (const auto& g : groups)
    if (g.models != first.models || g.times != first.times)
      throw DomainError("groups must share models and round times");
  const auto m = static_cast<Eigen::Index>(first.size());
  std::vector<Round<double>> out;
  out.reserve(first.rounds());
  for (std::size_t r = 0; r < first.rounds(); ++r) {
    Matrix<double> sum = Matrix<double>::Zero(m, m);
    Matrix<double> seen = Matrix<double>::Zero(m, m);
    PairMask evidence = PairMask::Constant(m, m, false);
    for (const auto& g : groups) {
      const Round<double> one = round_at(g, r);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
          if (!one.active(i, j)) continue;
          const double c = one.bound(i, j);
          check_bound(one.diff(i, j), c);
          const auto scaled = scale_transform(one.diff(i, j), c);
          sum(i, j) += scaled.value;
          seen(i, j) += 1;
          evidence(i, j) = evidence(i, j) || scaled.evidence;
        }
    }
    Round<double> agg;
    agg.time = first.times[r];
    agg.diff = Matrix<double>::Zero(m, m);
    agg.bound = Matrix<double>::Zero(m, m);
    agg.active = seen.array() > 0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j)
        if (agg.active(i, j)) {
          agg.diff(i, j) = sum(i, j) / seen(i, j);
          agg.bound(i, j) = evidence(i, j) ? 1.0 : 0.0;
        }
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace smcs
