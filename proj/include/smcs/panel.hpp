#pragma once

// Sequential model confidence sets over an m-model panel.
//
// Every round feeds the matrix of loss differences d_ij = L_i - L_j and their
// predictable bounds c_ij. Pair e-processes are updated and the panel emits
// the membership set according to the configured hypothesis:
//
//   strong          product kernel, row means, closure adjustment, keep i iff E*_i <= 1/alpha
//   uniformly-weak  same thresholding on empirical Bernstein e-processes
//   weak            confidence region for the matrix of running mean differences
//   fdr             e-BH on the unadjusted row means

#include "smcs/eprocess.hpp"
#include "smcs/merging.hpp"
#include "smcs/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace smcs {

enum class Hypothesis { strong, uniformly_weak, weak, fdr };

enum class Kernel { product, bernstein };

struct PanelConfig {
  Hypothesis hypothesis = Hypothesis::strong;
  double alpha = 0.1;
  /// Bernstein kernels only accept FixedFraction; lambda_ij = kappa / c_ij.
  BettingScheme betting = FixedFraction{};
  GammaMode gamma = GammaMode::running_mean;
  /// Divide each difference by its round bound and run the kernel with c = 1.
  bool scale = false;
  Kernel fdr_kernel = Kernel::product;
  /// Keep every trace row; otherwise only the latest one.
  bool keep_rows = true;
};

inline Kernel kernel_of(const PanelConfig& cfg) {
  switch (cfg.hypothesis) {
    case Hypothesis::strong:
      return Kernel::product;
    case Hypothesis::uniformly_weak:
    case Hypothesis::weak:
      return Kernel::bernstein;
    case Hypothesis::fdr:
      return cfg.fdr_kernel;
  }
  return Kernel::product;
}

/// Reported set is the running intersection for the two hypotheses whose
/// superior sets can only shrink.
inline bool reports_running_intersection(Hypothesis h) {
  return h == Hypothesis::strong || h == Hypothesis::uniformly_weak;
}

template <typename Scalar>
struct ScaledDifference {
  Scalar value;
  bool evidence;
};

/// d / c, which lies in [-1/2, 1/2]. A zero bound yields 0 and no evidence.
template <typename Scalar>
ScaledDifference<Scalar> scale_transform(Scalar d, Scalar c) {
  if (!(c >= 0)) throw DomainError("bound must be nonnegative");
  if (c == 0) return {Scalar(0), false};
  return {d / c, true};
}

/// One round of input for the panel.
template <typename Scalar = double>
struct Round {
  std::int64_t time = 0;
  Matrix<Scalar> diff;
  Matrix<Scalar> bound;
  /// Pair (i, j) is updated this round; false for pairs involving a missing model.
  PairMask active;
};

/// Builds a round from a loss row (NaN marks a model without a loss).
template <typename Scalar>
Round<Scalar> make_round(std::int64_t time, const Vector<Scalar>& losses, const Matrix<Scalar>& bound) {
  const auto m = losses.size();
  if (bound.rows() != m || bound.cols() != m) throw DomainError("bound matrix does not match the loss row");
  Round<Scalar> r;
  r.time = time;
  r.diff = losses.replicate(1, m) - losses.transpose().replicate(m, 1);
  r.bound = bound;
  r.active = PairMask::Constant(m, m, false);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      r.active(i, j) = i != j && std::isfinite(losses[i]) && std::isfinite(losses[j]);
  return r;
}

/// e-BH on per-model e-values: reject the i* largest, where
/// i* = max{i : i E_[i] / m >= 1/alpha}; keep models strictly below E_[i*].
template <typename Derived>
Membership fdr_step(const Eigen::MatrixBase<Derived>& e, double alpha) {
  using Scalar = typename Derived::Scalar;
  const auto m = e.size();
  std::vector<Scalar> sorted(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) sorted[static_cast<std::size_t>(i)] = e(i);
  std::sort(sorted.begin(), sorted.end(), std::greater<Scalar>());
  const Scalar threshold = static_cast<Scalar>(1 / alpha);
  Eigen::Index rejected = 0;
  for (Eigen::Index i = 1; i <= m; ++i)
    if (static_cast<Scalar>(i) * sorted[static_cast<std::size_t>(i - 1)] / static_cast<Scalar>(m) >= threshold)
      rejected = i;
  Membership keep(static_cast<std::size_t>(m), true);
  if (rejected == 0) return keep;
  const Scalar cutoff = sorted[static_cast<std::size_t>(rejected - 1)];
  for (Eigen::Index i = 0; i < m; ++i) keep[static_cast<std::size_t>(i)] = e(i) < cutoff;
  return keep;
}

template <typename Scalar>
struct MembershipTest {
  Membership member;
  /// Natural-log statistic per model compared against log(1/alpha).
  Vector<Scalar> stat;
};

/// Thresholds closure-adjusted row means of the pairwise log e-values.
template <typename Scalar>
MembershipTest<Scalar> threshold_test(const Matrix<Scalar>& log_e, double alpha) {
  const auto m = log_e.rows();
  Matrix<Scalar> e = log_e.unaryExpr([](Scalar l) { return saturating_exp(l); });
  e.diagonal().setZero();
  const Vector<Scalar> adjusted = closure_adjust(average_pairwise(e));
  MembershipTest<Scalar> out{Membership(static_cast<std::size_t>(m)), Vector<Scalar>(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    out.member[static_cast<std::size_t>(i)] = adjusted[i] <= static_cast<Scalar>(1 / alpha);
    out.stat[i] = std::log(adjusted[i]);
  }
  return out;
}

namespace detail {

template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
  if (a == -std::numeric_limits<Scalar>::infinity()) return b;
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  const Scalar hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace detail

/// Confidence-region test for the weak hypothesis. Model i is excluded iff for
/// some j != i the average supermartingale M_t(X) exceeds 1/alpha on the whole
/// slice {X in box, X_ij = 0}. Each term is decreasing in its own coordinate,
/// so the slice minimum puts every other coordinate at c_kl / 2.
///
/// `pairs` is row-major (i * m + j). Pairs with a zero or unknown bound carry
/// no evidence and contribute M = 1.
template <typename Scalar>
MembershipTest<Scalar> weak_region_test(const std::vector<PairState<Scalar>>& pairs,
                                        const Matrix<Scalar>& lambda, const Matrix<Scalar>& bound,
                                        double alpha) {
  const auto m = lambda.rows();
  auto log_m = [&](Eigen::Index k, Eigen::Index l, bool at_zero) -> Scalar {
    const Scalar c = bound(k, l);
    if (!(c > 0)) return 0;
    const Scalar x = at_zero ? Scalar(0) : c / 2;
    return log_supermartingale_at(pairs[static_cast<std::size_t>(k * m + l)], x, lambda(k, l), c);
  };
  Matrix<Scalar> at_edge = Matrix<Scalar>::Zero(m, m);
  Scalar edge_total = 0;
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l)
      if (k != l) {
        at_edge(k, l) = log_m(k, l, false);
        edge_total += std::exp(at_edge(k, l));
      }
  const Scalar log_pairs = std::log(static_cast<Scalar>(m * (m - 1)));
  const Scalar threshold = std::log(static_cast<Scalar>(1 / alpha));
  MembershipTest<Scalar> out{Membership(static_cast<std::size_t>(m)), Vector<Scalar>(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar worst = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i) continue;
      const Scalar rest = std::max(Scalar(0), edge_total - std::exp(at_edge(i, j)));
      const Scalar log_rest = rest > 0 ? std::log(rest) : -std::numeric_limits<Scalar>::infinity();
      worst = std::max(worst, detail::log_add_exp(log_rest, log_m(i, j, true)) - log_pairs);
    }
    out.stat[i] = worst;
    out.member[static_cast<std::size_t>(i)] = worst <= threshold;
  }
  return out;
}

struct Event {
  enum class Kind { exclusion, reinclusion };
  std::int64_t time = 0;
  std::size_t model = 0;
  Kind kind = Kind::exclusion;
};

template <typename Scalar = double>
struct TraceRow {
  std::int64_t time = 0;
  Membership raw;
  Membership running;
  Membership reported;
  Vector<Scalar> stat;
  std::vector<Event> events;
};

template <typename Scalar = double>
class Panel {
 public:
  Panel(std::size_t m, PanelConfig cfg)
      : m_(static_cast<Eigen::Index>(m)),
        cfg_(std::move(cfg)),
        pairs_(m * m),
        fixed_bound_(Matrix<Scalar>::Constant(m_, m_, std::numeric_limits<Scalar>::quiet_NaN())),
        running_(m, true),
        reported_(m, true) {
    if (m < 2) throw ConfigError("a panel needs at least two models");
    if (!(cfg_.alpha > 0 && cfg_.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
    if (kernel_of(cfg_) == Kernel::bernstein) {
      const auto* f = std::get_if<FixedFraction>(&cfg_.betting);
      if (f == nullptr) throw ConfigError("empirical Bernstein kernels need a fixed betting fraction");
      if (!(f->kappa > 0 && f->kappa < 1)) throw ConfigError("Bernstein betting fraction must lie in (0,1)");
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(m_); }
  const PanelConfig& config() const { return cfg_; }
  std::int64_t rounds() const { return rounds_; }

  const PairState<Scalar>& pair(Eigen::Index i, Eigen::Index j) const {
    return pairs_[static_cast<std::size_t>(i * m_ + j)];
  }

  Matrix<Scalar> log_e() const {
    Matrix<Scalar> out = Matrix<Scalar>::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index j = 0; j < m_; ++j)
        if (i != j) out(i, j) = pair(i, j).log_e;
    return out;
  }

  /// Bound the Bernstein kernel uses for the pair; NaN before the first round.
  Scalar kernel_bound(Eigen::Index i, Eigen::Index j) const {
    return cfg_.scale ? Scalar(1) : fixed_bound_(i, j);
  }

  Scalar bernstein_lambda(Eigen::Index i, Eigen::Index j) const {
    const Scalar c = kernel_bound(i, j);
    return c > 0 ? static_cast<Scalar>(std::get<FixedFraction>(cfg_.betting).kappa) / c : Scalar(0);
  }

  const TraceRow<Scalar>& step(const Round<Scalar>& round) {
    if (round.diff.rows() != m_ || round.diff.cols() != m_ || round.bound.rows() != m_ ||
        round.bound.cols() != m_ || round.active.rows() != m_ || round.active.cols() != m_)
      throw DomainError("round does not match the panel size");
    ++rounds_;
    const Kernel kernel = kernel_of(cfg_);
    for (Eigen::Index i = 0; i < m_; ++i)
      for (Eigen::Index j = 0; j < m_; ++j)
        if (i != j && round.active(i, j)) update_pair(kernel, i, j, round.diff(i, j), round.bound(i, j));

    MembershipTest<Scalar> test = evaluate(kernel);
    TraceRow<Scalar> row;
    row.time = round.time;
    for (std::size_t i = 0; i < size(); ++i) running_[i] = running_[i] && test.member[i];
    row.raw = std::move(test.member);
    row.running = running_;
    row.reported = reports_running_intersection(cfg_.hypothesis) ? running_ : row.raw;
    row.stat = std::move(test.stat);
    for (std::size_t i = 0; i < size(); ++i) {
      if (reported_[i] && !row.reported[i])
        row.events.push_back({round.time, i, Event::Kind::exclusion});
      else if (!reported_[i] && row.reported[i])
        row.events.push_back({round.time, i, Event::Kind::reinclusion});
    }
    reported_ = row.reported;
    if (cfg_.keep_rows) {
      rows_.push_back(std::move(row));
      return rows_.back();
    }
    last_ = std::move(row);
    return last_;
  }

  /// Membership and statistics for the current state without advancing.
  MembershipTest<Scalar> evaluate() const { return evaluate(kernel_of(cfg_)); }

  const std::vector<TraceRow<Scalar>>& rows() const { return rows_; }
  const Membership& reported() const { return reported_; }

 private:
  PairState<Scalar>& pair_mut(Eigen::Index i, Eigen::Index j) {
    return pairs_[static_cast<std::size_t>(i * m_ + j)];
  }

  void update_pair(Kernel kernel, Eigen::Index i, Eigen::Index j, Scalar d, Scalar c) {
    bool evidence = true;
    if (cfg_.scale) {
      // The raw difference must respect its own bound, zero bounds included.
      check_bound(d, c);
      const auto s = scale_transform(d, c);
      d = s.value;
      evidence = s.evidence;
      c = 1;
    }
    auto& st = pair_mut(i, j);
    if (kernel == Kernel::product) {
      if (!evidence) {
        st = strong_update(st, Scalar(0), Scalar(0), Scalar(0));
        return;
      }
      st = strong_update(st, d, c, lambda_next(cfg_.betting, c, st.last_d));
      return;
    }
    if (!cfg_.scale) {
      Scalar& fixed = fixed_bound_(i, j);
      if (std::isnan(fixed)) {
        fixed = c;
      } else if (std::abs(fixed - c) > 1e-12 * std::max(Scalar(1), std::abs(fixed))) {
        throw DomainError("Bernstein kernels need time-constant bounds; enable scaling for predictable bounds");
      }
    }
    if (!evidence || c == 0) {
      check_bound(d, c);
      st = no_evidence_update(st, c, cfg_.gamma);
      return;
    }
    st = bernstein_update(st, d, bernstein_lambda(i, j), c, cfg_.gamma);
  }

  MembershipTest<Scalar> evaluate(Kernel kernel) const {
    if (cfg_.hypothesis == Hypothesis::weak) {
      Matrix<Scalar> lambda(m_, m_), bound(m_, m_);
      for (Eigen::Index i = 0; i < m_; ++i)
        for (Eigen::Index j = 0; j < m_; ++j) {
          bound(i, j) = i == j ? Scalar(0) : kernel_bound(i, j);
          lambda(i, j) = i == j ? Scalar(0) : bernstein_lambda(i, j);
        }
      return weak_region_test(pairs_, lambda, bound, cfg_.alpha);
    }
    if (cfg_.hypothesis == Hypothesis::fdr) {
      Matrix<Scalar> e = log_e().unaryExpr([](Scalar l) { return saturating_exp(l); });
      const Vector<Scalar> raw = average_pairwise(e);
      return {fdr_step(raw, cfg_.alpha), raw.array().log().matrix()};
    }
    (void)kernel;
    return threshold_test(log_e(), cfg_.alpha);
  }

  Eigen::Index m_;
  PanelConfig cfg_;
  std::vector<PairState<Scalar>> pairs_;
  Matrix<Scalar> fixed_bound_;
  Membership running_;
  Membership reported_;
  std::int64_t rounds_ = 0;
  std::vector<TraceRow<Scalar>> rows_;
  TraceRow<Scalar> last_;
};

}  // namespace smcs
