#pragma once

// Simulation studies with known superior sets.
//
//   sim1  bias/dispersion grid of normal forecasts, one ideal forecaster
//   sim2  as sim1, but the ideal forecaster is perturbed to (0.3, 0.3) every 7th round
//   sim3  three median forecasters with constant, decaying and growing bias

#include "smcs/panel.hpp"
#include "smcs/stream.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace smcs {

enum class SimVariant { sim1, sim2, sim3 };

struct Sim3Params {
  double beta = 0.6;
  double gamma = 0.998;
  double delta = 0.008;
};

struct SimConfig {
  SimVariant variant = SimVariant::sim1;
  std::size_t n = 500;
  /// Bias and dispersion values; the grid is its square, bias-major.
  std::vector<double> grid = {-0.4, 0.0, 0.4};
  Sim3Params sim3;
  std::size_t replications = 200;
  std::uint64_t seed = 20240607;
  PanelConfig panel;
  bool keep_traces = false;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Settings used for each study: desk scale is the 3x3 grid and n = 500,
/// full scale the 7x7 grid and n = 1000 (sim3 always uses n = 800).
SimConfig default_sim_config(SimVariant v, bool full_scale = false);

void validate(const SimConfig& cfg);

std::size_t model_count(const SimConfig& cfg);
std::vector<std::string> model_names(const SimConfig& cfg);
/// Index of the (0, 0) forecaster on the grid.
std::size_t ideal_index(const SimConfig& cfg);

/// E crps(N(eps, 1 + delta), Z) for Z ~ N(0, 1).
double expected_crps(double eps, double delta);

/// Seed of replication `rep`, derived from the base seed.
std::uint64_t replication_seed(std::uint64_t base, std::uint64_t rep);

LossStream gen_sim1(std::uint64_t seed, std::size_t n, const std::vector<double>& grid);
LossStream gen_sim2(std::uint64_t seed, std::size_t n, const std::vector<double>& grid);
LossStream gen_sim3(std::uint64_t seed, std::size_t n, const Sim3Params& p);
LossStream generate(const SimConfig& cfg, std::uint64_t seed);

/// Bias of the three sim3 forecasters at round t (1-based).
std::vector<double> sim3_biases(const Sim3Params& p, std::int64_t t);

/// Conditional expected loss gaps mu_ij at round t (1-based); divided by the
/// round bound when `scaled` (pairs with a zero bound give 0).
Matrix<double> expected_gap(const SimConfig& cfg, std::int64_t t, bool scaled);

/// Ground-truth superior sets for rounds 1..n under `h`:
/// strong         mu_ij,r <= 0 for all r <= t and all j
/// uniformly-weak Delta_ij,r <= 0 for all r <= t and all j
/// weak           Delta_ij,t <= 0 for all j
/// Delta is the running mean of mu. FDR runs are scored against the strong sets.
std::vector<Membership> oracle_sets(const SimConfig& cfg, Hypothesis h, bool scaled);

std::vector<Membership> sim3_oracle(std::size_t n, const Sim3Params& p);

struct Sim2OracleCheck {
  /// Running averages of mu_{i0 j} stay <= 0 on the loss scale.
  bool raw = false;
  /// Same on the scale of differences divided by their round bound.
  bool transformed = false;
  /// First failing (competitor, round) on the loss scale, if any.
  std::size_t raw_competitor = 0;
  std::int64_t raw_time = 0;
  bool holds() const { return transformed; }
};

Sim2OracleCheck sim2_oracle_check(std::size_t n, const std::vector<double>& grid);

struct ReplicationResult {
  bool covered = true;
  /// Reported set size after each round, index 0 is before the first round.
  std::vector<std::size_t> size;
  std::size_t reinclusions = 0;
  std::vector<TraceRow<double>> trace;
};

struct SimSummary {
  std::size_t replications = 0;
  double coverage = 1.0;
  std::vector<double> mean_size;
  /// Replications with at least one re-inclusion event.
  std::size_t with_reinclusion = 0;
  std::vector<ReplicationResult> runs;
};

/// Runs one replication against precomputed oracle sets.
ReplicationResult run_replication(const SimConfig& cfg, std::uint64_t rep, const std::vector<Membership>& oracle);

SimSummary run_replications(const SimConfig& cfg);

}  // namespace smcs
