#include "smcs/config.hpp"

#include <array>
#include <fstream>
#include <set>
#include <utility>

namespace smcs {

namespace {

template <typename Enum, std::size_t N>
std::string name_of(const std::array<std::pair<Enum, const char*>, N>& table, Enum v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  throw ConfigError("unnamed enumerator");
}

template <typename Enum, std::size_t N>
Enum parse_of(const std::array<std::pair<Enum, const char*>, N>& table, const std::string& s, const char* what) {
  std::string options;
  for (const auto& [e, name] : table) {
    if (s == name) return e;
    options += options.empty() ? "" : ", ";
    options += name;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + options + ")");
}

constexpr std::array<std::pair<Hypothesis, const char*>, 4> kHypotheses{{
    {Hypothesis::strong, "strong"},
    {Hypothesis::uniformly_weak, "uniformly-weak"},
    {Hypothesis::weak, "weak"},
    {Hypothesis::fdr, "fdr"},
}};
constexpr std::array<std::pair<GammaMode, const char*>, 2> kGamma{{
    {GammaMode::zero, "zero"},
    {GammaMode::running_mean, "running-mean"},
}};
constexpr std::array<std::pair<BoundMode, const char*>, 3> kBoundModes{{
    {BoundMode::column, "column"},
    {BoundMode::forecasts, "forecasts"},
    {BoundMode::constant, "constant"},
}};
constexpr std::array<std::pair<Aggregation, const char*>, 2> kAggregation{{
    {Aggregation::single, "single"},
    {Aggregation::groups, "groups"},
}};
constexpr std::array<std::pair<MissingPolicy, const char*>, 2> kMissing{{
    {MissingPolicy::freeze, "freeze"},
    {MissingPolicy::error, "error"},
}};
constexpr std::array<std::pair<ScaleMode, const char*>, 3> kScale{{
    {ScaleMode::automatic, "auto"},
    {ScaleMode::on, "on"},
    {ScaleMode::off, "off"},
}};
constexpr std::array<std::pair<InputFormat, const char*>, 3> kFormats{{
    {InputFormat::automatic, "auto"},
    {InputFormat::long_format, "long"},
    {InputFormat::wide, "wide"},
}};
constexpr std::array<std::pair<BettingKind, const char*>, 2> kBetting{{
    {BettingKind::fixed, "fixed"},
    {BettingKind::adaptive, "adaptive"},
}};
constexpr std::array<std::pair<Transform, const char*>, 2> kTransforms{{
    {Transform::identity, "identity"},
    {Transform::log, "log"},
}};
constexpr std::array<std::pair<Kernel, const char*>, 2> kKernels{{
    {Kernel::product, "product"},
    {Kernel::bernstein, "bernstein"},
}};

}  // namespace

std::string to_string(Hypothesis h) { return name_of(kHypotheses, h); }
std::string to_string(GammaMode g) { return name_of(kGamma, g); }
std::string to_string(BoundMode b) { return name_of(kBoundModes, b); }
std::string to_string(Aggregation a) { return name_of(kAggregation, a); }
std::string to_string(MissingPolicy p) { return name_of(kMissing, p); }
std::string to_string(ScaleMode s) { return name_of(kScale, s); }
std::string to_string(InputFormat f) { return name_of(kFormats, f); }
std::string to_string(BettingKind b) { return name_of(kBetting, b); }
std::string to_string(Transform t) { return name_of(kTransforms, t); }
std::string to_string(Kernel k) { return name_of(kKernels, k); }

Hypothesis parse_hypothesis(const std::string& s) { return parse_of(kHypotheses, s, "hypothesis"); }
GammaMode parse_gamma(const std::string& s) { return parse_of(kGamma, s, "gamma mode"); }
BoundMode parse_bound_mode(const std::string& s) { return parse_of(kBoundModes, s, "bound mode"); }
Aggregation parse_aggregation(const std::string& s) { return parse_of(kAggregation, s, "aggregation"); }
MissingPolicy parse_missing(const std::string& s) { return parse_of(kMissing, s, "missing policy"); }
ScaleMode parse_scale(const std::string& s) { return parse_of(kScale, s, "scale mode"); }
InputFormat parse_format(const std::string& s) { return parse_of(kFormats, s, "input format"); }
BettingKind parse_betting(const std::string& s) { return parse_of(kBetting, s, "betting scheme"); }
Transform parse_transform(const std::string& s) { return parse_of(kTransforms, s, "transform"); }
Kernel parse_kernel(const std::string& s) { return parse_of(kKernels, s, "kernel"); }

nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{
      {"hypothesis", to_string(c.hypothesis)},
      {"alpha", c.alpha},
      {"betting", to_string(c.betting)},
      {"kappa", c.kappa},
      {"tau", c.tau},
      {"epsilon", c.epsilon},
      {"gamma", to_string(c.gamma)},
      {"bound_mode", to_string(c.bound_mode)},
      {"bound", c.bound},
      {"transform", to_string(c.transform)},
      {"scale", to_string(c.scale)},
      {"fdr_kernel", to_string(c.fdr_kernel)},
      {"aggregation", to_string(c.aggregation)},
      {"missing", to_string(c.missing)},
      {"format", to_string(c.format)},
      {"input", c.input},
      {"out", c.out},
      {"seed", c.seed},
  };
}

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  static const std::set<std::string> known = {
      "hypothesis", "alpha", "betting", "kappa", "tau", "epsilon", "gamma", "bound_mode", "bound", "transform",
      "scale", "fdr_kernel", "aggregation", "missing", "format", "input", "out", "seed", "version"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown configuration key '" + key + "'");

  RunConfig c;
  try {
    auto str = [&](const char* key, auto parse, auto& field) {
      if (j.contains(key)) field = parse(j.at(key).get<std::string>());
    };
    auto num = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    str("hypothesis", parse_hypothesis, c.hypothesis);
    num("alpha", c.alpha);
    str("betting", parse_betting, c.betting);
    num("kappa", c.kappa);
    num("tau", c.tau);
    num("epsilon", c.epsilon);
    str("gamma", parse_gamma, c.gamma);
    str("bound_mode", parse_bound_mode, c.bound_mode);
    num("bound", c.bound);
    str("transform", parse_transform, c.transform);
    str("scale", parse_scale, c.scale);
    str("fdr_kernel", parse_kernel, c.fdr_kernel);
    str("aggregation", parse_aggregation, c.aggregation);
    str("missing", parse_missing, c.missing);
    str("format", parse_format, c.format);
    num("input", c.input);
    num("out", c.out);
    num("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  auto resolve = [&](std::string& p) {
    if (!p.empty() && !base_dir.empty() && std::filesystem::path(p).is_relative()) p = (base_dir / p).string();
  };
  resolve(c.input);
  resolve(c.out);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate(const RunConfig& c) {
  if (!(c.alpha > 0 && c.alpha < 1)) throw ConfigError("alpha must lie in (0,1)");
  if (!(c.tau > 0 && c.tau < 1)) throw ConfigError("tau must lie in (0,1)");
  if (!(c.epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (!(c.kappa > 0 && c.kappa <= 1)) throw ConfigError("kappa must lie in (0,1]");
  if (c.bound_mode == BoundMode::constant && !(c.bound > 0 && std::isfinite(c.bound)))
    throw ConfigError("a constant bound must be positive and finite");
  PanelConfig probe;
  probe.hypothesis = c.hypothesis;
  probe.fdr_kernel = c.fdr_kernel;
  if (kernel_of(probe) == Kernel::bernstein) {
    if (c.betting != BettingKind::fixed) throw ConfigError("Bernstein kernels need betting = fixed");
    if (!(c.kappa < 1)) throw ConfigError("Bernstein kernels need kappa < 1");
  }
  if (c.transform == Transform::log && c.bound_mode != BoundMode::forecasts)
    throw ConfigError("transform applies to forecast input only (bound_mode = forecasts)");
}

PanelConfig panel_config(const RunConfig& c, bool per_round_bounds) {
  validate(c);
  PanelConfig p;
  p.hypothesis = c.hypothesis;
  p.alpha = c.alpha;
  if (c.betting == BettingKind::fixed)
    p.betting = FixedFraction{c.kappa};
  else
    p.betting = CovidAdaptive{c.tau, c.epsilon};
  p.gamma = c.gamma;
  p.fdr_kernel = c.fdr_kernel;
  switch (c.scale) {
    case ScaleMode::on:
      p.scale = true;
      break;
    case ScaleMode::off:
      p.scale = false;
      break;
    case ScaleMode::automatic:
      p.scale = kernel_of(p) == Kernel::bernstein && per_round_bounds;
      break;
  }
  return p;
}

}  // namespace smcs
