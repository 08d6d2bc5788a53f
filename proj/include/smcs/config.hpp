#pragma once

// Run configuration. Loadable from a JSON file; every key has a CLI flag of
// the same name (underscores become dashes).

#include "smcs/panel.hpp"
#include "smcs/scoring.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace smcs {

enum class BoundMode { column, forecasts, constant };
enum class Aggregation { single, groups };
enum class MissingPolicy { freeze, error };
enum class ScaleMode { automatic, on, off };
enum class InputFormat { automatic, long_format, wide };
enum class BettingKind { fixed, adaptive };

struct RunConfig {
  Hypothesis hypothesis = Hypothesis::strong;
  double alpha = 0.1;
  BettingKind betting = BettingKind::fixed;
  double kappa = 0.5;
  /// Quantile level of forecast files and of the adaptive betting scheme.
  double tau = 0.5;
  double epsilon = 1e-6;
  GammaMode gamma = GammaMode::running_mean;
  BoundMode bound_mode = BoundMode::column;
  /// Bound used for every pair when bound_mode is constant.
  double bound = 1.0;
  Transform transform = Transform::identity;
  ScaleMode scale = ScaleMode::automatic;
  Kernel fdr_kernel = Kernel::product;
  Aggregation aggregation = Aggregation::single;
  MissingPolicy missing = MissingPolicy::freeze;
  InputFormat format = InputFormat::automatic;
  std::string input;
  std::string out = "smcs-out";
  /// Recorded in the manifest; runs on files are deterministic regardless.
  std::uint64_t seed = 0;
};

std::string to_string(Hypothesis h);
std::string to_string(GammaMode g);
std::string to_string(BoundMode b);
std::string to_string(Aggregation a);
std::string to_string(MissingPolicy p);
std::string to_string(ScaleMode s);
std::string to_string(InputFormat f);
std::string to_string(BettingKind b);
std::string to_string(Transform t);
std::string to_string(Kernel k);

Hypothesis parse_hypothesis(const std::string& s);
GammaMode parse_gamma(const std::string& s);
BoundMode parse_bound_mode(const std::string& s);
Aggregation parse_aggregation(const std::string& s);
MissingPolicy parse_missing(const std::string& s);
ScaleMode parse_scale(const std::string& s);
InputFormat parse_format(const std::string& s);
BettingKind parse_betting(const std::string& s);
Transform parse_transform(const std::string& s);
Kernel parse_kernel(const std::string& s);

nlohmann::json to_json(const RunConfig& cfg);

/// Unknown keys are rejected, except "version" which manifests carry.
/// Relative `input` and `out` paths resolve against `base_dir` when given.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path);

void validate(const RunConfig& cfg);

/// Panel settings for a run; `per_round_bounds` resolves scale = auto
/// (scaling is on for Bernstein kernels fed with per-round bounds).
PanelConfig panel_config(const RunConfig& cfg, bool per_round_bounds);

}  // namespace smcs
