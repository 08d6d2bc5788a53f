#include "smcs/simlab.hpp"

#include "smcs/normal.hpp"
#include "smcs/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <numbers>
#include <thread>

namespace smcs {

namespace {

constexpr std::int64_t kWeek = 7;
constexpr double kSundayShift = 0.3;

bool is_sunday(std::int64_t t) { return t % kWeek == 0; }

std::string short_number(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct GridPoint {
  double eps;
  double delta;
};

std::vector<GridPoint> grid_points(const std::vector<double>& grid) {
  std::vector<GridPoint> out;
  for (double e : grid)
    for (double d : grid) out.push_back({e, d});
  return out;
}

std::size_t grid_ideal(const std::vector<double>& grid) {
  const auto pts = grid_points(grid);
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].eps == 0 && pts[i].delta == 0) return i;
  throw ConfigError("simulation grid must contain 0");
}

/// Forecast parameters at round t; the ideal forecaster shifts on sim2 Sundays.
std::vector<GridPoint> round_params(const std::vector<GridPoint>& base, std::size_t ideal, bool sim2,
                                    std::int64_t t) {
  std::vector<GridPoint> p = base;
  if (sim2 && is_sunday(t)) p[ideal] = {kSundayShift, kSundayShift};
  return p;
}

Matrix<double> normal_bounds(const std::vector<GridPoint>& p) {
  const auto m = static_cast<Eigen::Index>(p.size());
  Matrix<double> c = Matrix<double>::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto& a = p[static_cast<std::size_t>(i)];
      const auto& b = p[static_cast<std::size_t>(j)];
      c(i, j) = c(j, i) = crps_diff_bound(Normal<double>{a.eps, 1 + a.delta}, Normal<double>{b.eps, 1 + b.delta});
    }
  return c;
}

std::vector<std::string> grid_names(const std::vector<double>& grid) {
  std::vector<std::string> out;
  for (const auto& p : grid_points(grid)) out.push_back("b" + short_number(p.eps) + "_s" + short_number(p.delta));
  return out;
}

LossStream gen_normal(std::uint64_t seed, std::size_t n, const std::vector<double>& grid, bool sim2) {
  const auto base = grid_points(grid);
  const std::size_t ideal = grid_ideal(grid);
  const auto m = static_cast<Eigen::Index>(base.size());
  LossStream s;
  s.models = grid_names(grid);
  s.losses.resize(static_cast<Eigen::Index>(n), m);
  s.fixed_bound = normal_bounds(base);
  Matrix<double> sunday_bound;
  if (sim2) sunday_bound = normal_bounds(round_params(base, ideal, true, kWeek));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z_dist;
  for (std::size_t r = 0; r < n; ++r) {
    const auto t = static_cast<std::int64_t>(r + 1);
    s.times.push_back(t);
    const double z = z_dist(rng);
    const auto p = round_params(base, ideal, sim2, t);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& f = p[static_cast<std::size_t>(i)];
      s.losses(static_cast<Eigen::Index>(r), i) = crps_normal(f.eps, 1 + f.delta, z);
    }
    if (sim2) s.bounds.push_back(is_sunday(t) ? sunday_bound : s.fixed_bound);
  }
  return s;
}

}  // namespace

SimConfig default_sim_config(SimVariant v, bool full_scale) {
  SimConfig cfg;
  cfg.variant = v;
  cfg.n = full_scale ? 1000 : 500;
  cfg.grid = full_scale ? std::vector<double>{-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6}
                        : std::vector<double>{-0.4, 0.0, 0.4};
  cfg.replications = 200;
  cfg.panel.alpha = 0.1;
  cfg.panel.gamma = GammaMode::running_mean;
  switch (v) {
    case SimVariant::sim1:
      cfg.panel.hypothesis = Hypothesis::strong;
      cfg.panel.betting = FixedFraction{0.5};
      cfg.panel.scale = false;
      break;
    case SimVariant::sim2:
      // lambda = 1/4 for the bound C = 2 is kappa = 1/2 on the c = 1 scale.
      cfg.panel.hypothesis = Hypothesis::uniformly_weak;
      cfg.panel.betting = FixedFraction{0.5};
      cfg.panel.scale = true;
      break;
    case SimVariant::sim3:
      cfg.n = 800;
      cfg.replications = 100;
      cfg.panel.hypothesis = Hypothesis::weak;
      cfg.panel.betting = FixedFraction{1 / 1.1};
      cfg.panel.scale = false;
      break;
  }
  return cfg;
}

void validate(const SimConfig& cfg) {
  if (cfg.variant == SimVariant::sim3) {
    const auto& p = cfg.sim3;
    if (!(p.beta > 0) || !(p.delta > 0) || !(p.gamma > 0 && p.gamma < 1))
      throw ConfigError("sim3 needs beta > 0, delta > 0 and 0 < gamma < 1");
  } else {
    grid_ideal(cfg.grid);
    for (double d : cfg.grid)
      if (!(d > -1)) throw ConfigError("dispersion values must exceed -1");
  }
  if (!(cfg.panel.alpha > 0 && cfg.panel.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
}

std::size_t model_count(const SimConfig& cfg) {
  return cfg.variant == SimVariant::sim3 ? 3 : cfg.grid.size() * cfg.grid.size();
}

std::vector<std::string> model_names(const SimConfig& cfg) {
  if (cfg.variant == SimVariant::sim3) return {"biased", "improving", "disimproving"};
  return grid_names(cfg.grid);
}

std::size_t ideal_index(const SimConfig& cfg) { return grid_ideal(cfg.grid); }

double expected_crps(double eps, double delta) {
  if (!(delta > -1)) throw DomainError("dispersion must exceed -1");
  // X - Z ~ N(eps, 2 + delta) and E|X - X'| / 2 = sqrt((1 + delta) / pi).
  const double s = std::sqrt(2 + delta);
  const double abs_gap = 2 * s * norm_pdf(eps / s) + eps * (1 - 2 * norm_cdf(-eps / s));
  return abs_gap - std::sqrt((1 + delta) / std::numbers::pi);
}

std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(base) ^ rep);
}

LossStream gen_sim1(std::uint64_t seed, std::size_t n, const std::vector<double>& grid) {
  return gen_normal(seed, n, grid, false);
}

LossStream gen_sim2(std::uint64_t seed, std::size_t n, const std::vector<double>& grid) {
  return gen_normal(seed, n, grid, true);
}

std::vector<double> sim3_biases(const Sim3Params& p, std::int64_t t) {
  const auto tt = static_cast<double>(t);
  return {p.beta, std::pow(p.gamma, tt), p.delta * tt};
}

LossStream gen_sim3(std::uint64_t seed, std::size_t n, const Sim3Params& p) {
  LossStream s;
  s.models = {"biased", "improving", "disimproving"};
  s.losses.resize(static_cast<Eigen::Index>(n), 3);
  s.fixed_bound = Matrix<double>::Ones(3, 3);
  s.fixed_bound.diagonal().setZero();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> y_dist;
  for (std::size_t r = 0; r < n; ++r) {
    const auto t = static_cast<std::int64_t>(r + 1);
    s.times.push_back(t);
    const double y = y_dist(rng);
    const auto eps = sim3_biases(p, t);
    for (Eigen::Index i = 0; i < 3; ++i)
      s.losses(static_cast<Eigen::Index>(r), i) = median_score(y + eps[static_cast<std::size_t>(i)], y);
  }
  return s;
}

LossStream generate(const SimConfig& cfg, std::uint64_t seed) {
  switch (cfg.variant) {
    case SimVariant::sim1:
      return gen_sim1(seed, cfg.n, cfg.grid);
    case SimVariant::sim2:
      return gen_sim2(seed, cfg.n, cfg.grid);
    case SimVariant::sim3:
      return gen_sim3(seed, cfg.n, cfg.sim3);
  }
  throw ConfigError("unknown simulation");
}

Matrix<double> expected_gap(const SimConfig& cfg, std::int64_t t, bool scaled) {
  if (cfg.variant == SimVariant::sim3) {
    const auto eps = sim3_biases(cfg.sim3, t);
    Matrix<double> mu(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        mu(i, j) = 0.5 * (norm_cdf(eps[static_cast<std::size_t>(i)] / std::numbers::sqrt2) -
                          norm_cdf(eps[static_cast<std::size_t>(j)] / std::numbers::sqrt2));
    return mu;  // the bound is 1, so scaling changes nothing
  }
  const auto p = round_params(grid_points(cfg.grid), grid_ideal(cfg.grid), cfg.variant == SimVariant::sim2, t);
  const auto m = static_cast<Eigen::Index>(p.size());
  Vector<double> expected(m);
  for (Eigen::Index i = 0; i < m; ++i)
    expected[i] = expected_crps(p[static_cast<std::size_t>(i)].eps, p[static_cast<std::size_t>(i)].delta);
  Matrix<double> mu = expected.replicate(1, m) - expected.transpose().replicate(m, 1);
  if (scaled) {
    const Matrix<double> c = normal_bounds(p);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) mu(i, j) = c(i, j) > 0 ? mu(i, j) / c(i, j) : 0.0;
  }
  return mu;
}

std::vector<Membership> oracle_sets(const SimConfig& cfg, Hypothesis h, bool scaled) {
  const std::size_t m = model_count(cfg);
  const auto mi = static_cast<Eigen::Index>(m);
  std::vector<Membership> out;
  out.reserve(cfg.n);
  Matrix<double> cumulative = Matrix<double>::Zero(mi, mi);
  Membership strong(m, true), uniform(m, true);
  for (std::size_t r = 0; r < cfg.n; ++r) {
    const auto t = static_cast<std::int64_t>(r + 1);
    const Matrix<double> mu = expected_gap(cfg, t, scaled);
    cumulative += mu;
    Membership weak(m, true);
    for (Eigen::Index i = 0; i < mi; ++i)
      for (Eigen::Index j = 0; j < mi; ++j) {
        if (i == j) continue;
        const auto k = static_cast<std::size_t>(i);
        if (mu(i, j) > 0) strong[k] = false;
        if (cumulative(i, j) > 0) {
          uniform[k] = false;
          weak[k] = false;
        }
      }
    switch (h) {
      case Hypothesis::strong:
      case Hypothesis::fdr:
        out.push_back(strong);
        break;
      case Hypothesis::uniformly_weak:
        out.push_back(uniform);
        break;
      case Hypothesis::weak:
        out.push_back(weak);
        break;
    }
  }
  return out;
}

std::vector<Membership> sim3_oracle(std::size_t n, const Sim3Params& p) {
  SimConfig cfg = default_sim_config(SimVariant::sim3);
  cfg.n = n;
  cfg.sim3 = p;
  return oracle_sets(cfg, Hypothesis::weak, false);
}

Sim2OracleCheck sim2_oracle_check(std::size_t n, const std::vector<double>& grid) {
  SimConfig cfg = default_sim_config(SimVariant::sim2);
  cfg.grid = grid;
  cfg.n = n;
  const auto i0 = static_cast<Eigen::Index>(grid_ideal(grid));
  const auto m = static_cast<Eigen::Index>(model_count(cfg));
  Sim2OracleCheck out;
  out.raw = out.transformed = true;
  Vector<double> raw = Vector<double>::Zero(m), scaled = Vector<double>::Zero(m);
  for (std::size_t r = 0; r < n; ++r) {
    const auto t = static_cast<std::int64_t>(r + 1);
    raw += expected_gap(cfg, t, false).row(i0).transpose();
    scaled += expected_gap(cfg, t, true).row(i0).transpose();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i0) continue;
      if (raw[j] > 0 && out.raw) {
        out.raw = false;
        out.raw_competitor = static_cast<std::size_t>(j);
        out.raw_time = t;
      }
      if (scaled[j] > 0) out.transformed = false;
    }
  }
  return out;
}

ReplicationResult run_replication(const SimConfig& cfg, std::uint64_t rep, const std::vector<Membership>& oracle) {
  const LossStream s = generate(cfg, replication_seed(cfg.seed, rep));
  PanelConfig pc = cfg.panel;
  pc.keep_rows = cfg.keep_traces;
  Panel<double> panel(s.size(), pc);
  ReplicationResult out;
  out.size.reserve(s.rounds() + 1);
  out.size.push_back(s.size());
  for (std::size_t r = 0; r < s.rounds(); ++r) {
    const auto& row = panel.step(round_at(s, r));
    out.size.push_back(count(row.reported));
    if (!is_subset(oracle[r], row.reported)) out.covered = false;
    for (const auto& e : row.events)
      if (e.kind == Event::Kind::reinclusion) ++out.reinclusions;
  }
  if (cfg.keep_traces) out.trace = panel.rows();
  return out;
}

SimSummary run_replications(const SimConfig& cfg) {
  validate(cfg);
  const auto oracle = oracle_sets(cfg, cfg.panel.hypothesis, cfg.panel.scale);
  std::vector<ReplicationResult> results(cfg.replications);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, cfg.replications)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t k = next++; k < cfg.replications && !failed; k = next++) {
      try {
        results[k] = run_replication(cfg, k, oracle);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  SimSummary sum;
  sum.replications = cfg.replications;
  sum.mean_size.assign(cfg.n + 1, 0.0);
  if (cfg.replications == 0) {
    sum.mean_size[0] = static_cast<double>(model_count(cfg));
    return sum;
  }
  std::size_t covered = 0;
  for (const auto& r : results) {
    covered += r.covered ? 1 : 0;
    sum.with_reinclusion += r.reinclusions > 0 ? 1 : 0;
    for (std::size_t t = 0; t < r.size.size(); ++t) sum.mean_size[t] += static_cast<double>(r.size[t]);
  }
  const auto nrep = static_cast<double>(cfg.replications);
  sum.coverage = static_cast<double>(covered) / nrep;
  for (auto& v : sum.mean_size) v /= nrep;
  sum.runs = std::move(results);
  if (!cfg.keep_traces)
    for (auto& r : sum.runs) r.trace.clear();
  return sum;
}

}  // namespace smcs
