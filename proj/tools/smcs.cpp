// smcs command line: run, simulate, validate.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration error, 3 ingestion
// error, 4 bound violation, 5 numerical domain/state error.
// SMCS_VERBOSE=0 silences progress messages, 2 adds detail.

#include "smcs/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kIngest = 3, kBound = 4, kDomain = 5 };

int verbosity() {
  const char* v = std::getenv("SMCS_VERBOSE");
  if (v == nullptr || *v == '\0') return 1;
  return std::atoi(v);
}

void note(int level, const std::string& msg) {
  if (verbosity() >= level) std::cerr << msg << '\n';
}

/// Flags that mirror RunConfig; each is applied only when given.
struct RunFlags {
  std::string config;
  std::optional<std::string> hypothesis, betting, gamma, bound_mode, transform, scale, fdr_kernel, aggregation,
      missing, format, input, out;
  std::optional<double> alpha, kappa, tau, epsilon, bound;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON configuration file (flags override it)");
    app->add_option("--hypothesis", hypothesis, "strong | uniformly-weak | weak | fdr");
    app->add_option("--alpha", alpha, "level in (0,1)");
    app->add_option("--betting", betting, "fixed | adaptive");
    app->add_option("--kappa", kappa, "betting fraction lambda * c");
    app->add_option("--tau", tau, "quantile level (forecast input, adaptive betting)");
    app->add_option("--epsilon", epsilon, "safeguard of the adaptive scheme");
    app->add_option("--gamma", gamma, "zero | running-mean");
    app->add_option("--bound-mode", bound_mode, "column | forecasts | constant");
    app->add_option("--bound", bound, "bound for every pair when bound-mode is constant");
    app->add_option("--transform", transform, "identity | log (forecast input)");
    app->add_option("--scale", scale, "auto | on | off");
    app->add_option("--fdr-kernel", fdr_kernel, "product | bernstein");
    app->add_option("--aggregation", aggregation, "single | groups");
    app->add_option("--missing", missing, "freeze | error");
    app->add_option("--format", format, "auto | long | wide");
    app->add_option("--input", input, "loss or forecast file");
    app->add_option("--out", out, "output directory");
    app->add_option("--seed", seed, "recorded in the manifest");
  }

  smcs::RunConfig resolve() const {
    smcs::RunConfig c = config.empty() ? smcs::RunConfig{} : smcs::load_config(config);
    if (hypothesis) c.hypothesis = smcs::parse_hypothesis(*hypothesis);
    if (alpha) c.alpha = *alpha;
    if (betting) c.betting = smcs::parse_betting(*betting);
    if (kappa) c.kappa = *kappa;
    if (tau) c.tau = *tau;
    if (epsilon) c.epsilon = *epsilon;
    if (gamma) c.gamma = smcs::parse_gamma(*gamma);
    if (bound_mode) c.bound_mode = smcs::parse_bound_mode(*bound_mode);
    if (bound) c.bound = *bound;
    if (transform) c.transform = smcs::parse_transform(*transform);
    if (scale) c.scale = smcs::parse_scale(*scale);
    if (fdr_kernel) c.fdr_kernel = smcs::parse_kernel(*fdr_kernel);
    if (aggregation) c.aggregation = smcs::parse_aggregation(*aggregation);
    if (missing) c.missing = smcs::parse_missing(*missing);
    if (format) c.format = smcs::parse_format(*format);
    if (input) c.input = *input;
    if (out) c.out = *out;
    if (seed) c.seed = *seed;
    smcs::validate(c);
    return c;
  }
};

int do_run(const RunFlags& flags) {
  const auto cfg = flags.resolve();
  const auto r = smcs::run_to_files(cfg);
  std::size_t final_size = r.models.size();
  if (!r.rows.empty()) final_size = smcs::count(r.rows.back().reported);
  note(1, "rounds: " + std::to_string(r.rows.size()) + ", final set size: " + std::to_string(final_size) +
              ", output: " + cfg.out);
  return kOk;
}

int do_validate(const RunFlags& flags) {
  const auto cfg = flags.resolve();
  if (cfg.input.empty()) throw smcs::ConfigError("no input file given");
  smcs::Ingested in;
  if (cfg.bound_mode == smcs::BoundMode::forecasts) {
    in = smcs::ingest_quantile_forecasts(std::filesystem::path(cfg.input), cfg.tau, cfg.transform, cfg.missing);
  } else {
    smcs::IngestOptions opt;
    opt.format = cfg.format;
    opt.missing = cfg.missing;
    if (cfg.bound_mode == smcs::BoundMode::constant) opt.constant_bound = cfg.bound;
    in = smcs::ingest_losses(std::filesystem::path(cfg.input), opt);
  }
  for (const auto& s : in.streams) smcs::check_stream(s);
  const auto& s = in.streams.front();
  std::cout << "models: " << s.size() << "\nrounds: " << s.rounds() << "\ngroups: " << in.streams.size()
            << "\nrecords: " << in.records << "\nmissing cells: " << in.missing_cells
            << "\nbounds: " << (s.per_round_bounds() ? "per round" : "constant") << '\n';
  return kOk;
}

struct SimFlags {
  std::string variant = "sim1";
  bool full = false;
  std::optional<std::size_t> n, replications;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha, kappa;
  std::optional<std::string> gamma;
  unsigned threads = 0;
  std::uint64_t replay = 0;
  std::string out = "smcs-sim";

  void attach(CLI::App* app) {
    app->add_option("--sim", variant, "sim1 | sim2 | sim3");
    app->add_flag("--full", full, "7x7 grid and n = 1000 (sim1, sim2)");
    app->add_option("--n", n, "rounds");
    app->add_option("--replications", replications, "independent replications");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--alpha", alpha, "level in (0,1)");
    app->add_option("--kappa", kappa, "betting fraction lambda * c");
    app->add_option("--gamma", gamma, "zero | running-mean");
    app->add_option("--threads", threads, "worker threads (0: all cores)");
    app->add_option("--replay", replay, "replication written out as losses.csv / trace.csv");
    app->add_option("--out", out, "output directory");
  }
};

int do_simulate(const SimFlags& f) {
  auto cfg = smcs::default_sim_config(smcs::parse_sim_variant(f.variant), f.full);
  if (f.n) cfg.n = *f.n;
  if (f.replications) cfg.replications = *f.replications;
  if (f.seed) cfg.seed = *f.seed;
  if (f.alpha) cfg.panel.alpha = *f.alpha;
  if (f.kappa) cfg.panel.betting = smcs::FixedFraction{*f.kappa};
  if (f.gamma) cfg.panel.gamma = smcs::parse_gamma(*f.gamma);
  cfg.threads = f.threads;
  smcs::validate(cfg);
  const auto summary = smcs::run_replications(cfg);
  smcs::write_sim_summary(cfg, summary, f.out);
  smcs::write_simulation(cfg, f.replay, f.out);
  note(1, smcs::to_string(cfg.variant) + ": coverage " + smcs::format_number(summary.coverage) +
              ", final mean size " + smcs::format_number(summary.mean_size.back()) + ", output: " + f.out);
  if (cfg.variant == smcs::SimVariant::sim2) {
    const auto check = smcs::sim2_oracle_check(cfg.n, cfg.grid);
    note(2, std::string("sim2 oracle check: loss scale ") + (check.raw ? "holds" : "fails") + ", scaled " +
                (check.transformed ? "holds" : "fails"));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential model confidence sets"};
  app.require_subcommand(1);
  RunFlags run_flags, validate_flags;
  SimFlags sim_flags;
  auto* run = app.add_subcommand("run", "run an SMCS over a loss or forecast file");
  run_flags.attach(run);
  auto* validate = app.add_subcommand("validate", "ingest and check an input file without running");
  validate_flags.attach(validate);
  auto* simulate = app.add_subcommand("simulate", "replicate a simulation study");
  sim_flags.attach(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*run) return do_run(run_flags);
    if (*validate) return do_validate(validate_flags);
    if (*simulate) return do_simulate(sim_flags);
  } catch (const smcs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const smcs::IngestError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kIngest;
  } catch (const smcs::BoundViolation& e) {
    std::cerr << "bound violation: " << e.what() << '\n';
    return kBound;
  } catch (const smcs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}
