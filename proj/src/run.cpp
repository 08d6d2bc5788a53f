#include "smcs/run.hpp"

#include <fstream>
#include <ostream>

namespace smcs {

namespace {

std::string join(const std::vector<std::string>& models, const Membership& set) {
  std::string out;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set[i]) {
      if (!out.empty()) out += ';';
      out += models[i];
    }
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto out = open_out(p);
  out << j.dump(2) << '\n';
}

}  // namespace

RunOutput run_rounds(const std::vector<std::string>& models, const std::vector<Round<double>>& rounds,
                     const PanelConfig& cfg) {
  PanelConfig pc = cfg;
  pc.keep_rows = true;
  RunOutput out{models, pc, {}};
  if (models.size() < 2) {
    if (rounds.empty()) return out;
    throw IngestError("a run needs at least two models");
  }
  Panel<double> panel(models.size(), pc);
  for (const auto& r : rounds) {
    try {
      panel.step(r);
    } catch (const BoundViolation& e) {
      throw BoundViolation("t=" + std::to_string(r.time) + ": " + e.what());
    }
  }
  out.rows = panel.rows();
  return out;
}

RunOutput run_stream(const LossStream& s, const PanelConfig& cfg) {
  check_stream(s);
  std::vector<Round<double>> rounds;
  rounds.reserve(s.rounds());
  for (std::size_t r = 0; r < s.rounds(); ++r) rounds.push_back(round_at(s, r));
  return run_rounds(s.models, rounds, cfg);
}

RunOutput execute(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.input.empty()) throw ConfigError("no input file given");
  Ingested in;
  if (cfg.bound_mode == BoundMode::forecasts) {
    in = ingest_quantile_forecasts(std::filesystem::path(cfg.input), cfg.tau, cfg.transform, cfg.missing);
  } else {
    IngestOptions opt;
    opt.format = cfg.format;
    opt.missing = cfg.missing;
    if (cfg.bound_mode == BoundMode::constant) opt.constant_bound = cfg.bound;
    in = ingest_losses(std::filesystem::path(cfg.input), opt);
  }
  if (cfg.aggregation == Aggregation::groups) {
    const auto rounds = aggregate_groups(in.streams);
    return run_rounds(in.streams.front().models, rounds, panel_config(cfg, true));
  }
  if (in.streams.size() != 1)
    throw ConfigError("input has " + std::to_string(in.streams.size()) + " groups; set aggregation = groups");
  const auto& s = in.streams.front();
  return run_stream(s, panel_config(cfg, s.per_round_bounds()));
}

void write_trace(std::ostream& out, const RunOutput& r) {
  out << "t,size,reported,raw,running,events";
  for (const auto& m : r.models) out << ",stat:" << m;
  out << '\n';
  for (const auto& row : r.rows) {
    out << row.time << ',' << count(row.reported) << ',' << join(r.models, row.reported) << ','
        << join(r.models, row.raw) << ',' << join(r.models, row.running) << ',';
    for (std::size_t k = 0; k < row.events.size(); ++k) {
      const auto& e = row.events[k];
      out << (k ? ";" : "") << (e.kind == Event::Kind::exclusion ? '-' : '+') << r.models[e.model];
    }
    for (Eigen::Index i = 0; i < row.stat.size(); ++i) out << ',' << format_number(row.stat[i]);
    out << '\n';
  }
}

nlohmann::json manifest_json(const RunConfig& cfg, const RunOutput& r) {
  (void)r;
  RunConfig abs = cfg;
  if (!abs.input.empty()) abs.input = std::filesystem::absolute(abs.input).lexically_normal().string();
  if (!abs.out.empty()) abs.out = std::filesystem::absolute(abs.out).lexically_normal().string();
  nlohmann::json j = to_json(abs);
  j["version"] = kVersion;
  return j;
}

nlohmann::json summary_json(const RunConfig& cfg, const RunOutput& r) {
  nlohmann::json j;
  j["rounds"] = r.rows.size();
  j["models"] = r.models;
  j["guarantee"] = cfg.hypothesis == Hypothesis::fdr ? "time-uniform false discovery rate (not an SMCS)"
                                                     : "time-uniform coverage (SMCS)";
  j["reported_set"] = reports_running_intersection(cfg.hypothesis) ? "running intersection" : "raw";
  j["scale_applied"] = r.panel.scale;
  Membership final_set(r.models.size(), true);
  if (!r.rows.empty()) final_set = r.rows.back().reported;
  std::vector<std::string> final_names;
  for (std::size_t i = 0; i < final_set.size(); ++i)
    if (final_set[i]) final_names.push_back(r.models[i]);
  j["final_set"] = final_names;
  nlohmann::json excl = nlohmann::json::object(), reincl = nlohmann::json::object();
  for (const auto& m : r.models) {
    excl[m] = nlohmann::json::array();
    reincl[m] = nlohmann::json::array();
  }
  for (const auto& row : r.rows)
    for (const auto& e : row.events)
      (e.kind == Event::Kind::exclusion ? excl : reincl)[r.models[e.model]].push_back(e.time);
  j["exclusions"] = excl;
  j["reinclusions"] = reincl;
  j["manifest"] = manifest_json(cfg, r);
  return j;
}

RunOutput run_to_files(const RunConfig& cfg) {
  RunOutput r = execute(cfg);
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "trace.csv");
    write_trace(out, r);
  }
  write_json(dir / "summary.json", summary_json(cfg, r));
  write_json(dir / "manifest.json", manifest_json(cfg, r));
  return r;
}

RunConfig replay_config(const SimConfig& sim, const std::string& input, const std::string& out) {
  RunConfig c;
  c.hypothesis = sim.panel.hypothesis;
  c.alpha = sim.panel.alpha;
  if (const auto* f = std::get_if<FixedFraction>(&sim.panel.betting)) {
    c.betting = BettingKind::fixed;
    c.kappa = f->kappa;
  } else {
    const auto& a = std::get<CovidAdaptive>(sim.panel.betting);
    c.betting = BettingKind::adaptive;
    c.tau = a.tau;
    c.epsilon = a.epsilon;
  }
  c.gamma = sim.panel.gamma;
  c.fdr_kernel = sim.panel.fdr_kernel;
  c.bound_mode = BoundMode::column;
  c.scale = sim.panel.scale ? ScaleMode::on : ScaleMode::off;
  c.format = InputFormat::wide;
  c.input = input;
  c.out = out;
  c.seed = sim.seed;
  return c;
}

SimulationFiles write_simulation(const SimConfig& sim, std::uint64_t rep, const std::filesystem::path& dir) {
  validate(sim);
  std::filesystem::create_directories(dir);
  SimulationFiles files{dir / "losses.csv", dir / "config.json", dir / "trace.csv"};
  const LossStream s = generate(sim, replication_seed(sim.seed, rep));
  {
    auto out = open_out(files.losses);
    write_wide(out, s);
  }
  write_json(files.config, to_json(replay_config(sim, "losses.csv", "replay")));
  auto out = open_out(files.trace);
  write_trace(out, run_stream(s, sim.panel));
  return files;
}

void write_sim_summary(const SimConfig& sim, const SimSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["variant"] = to_string(sim.variant);
  j["hypothesis"] = to_string(sim.panel.hypothesis);
  j["alpha"] = sim.panel.alpha;
  j["n"] = sim.n;
  j["models"] = model_names(sim);
  if (sim.variant == SimVariant::sim3)
    j["sim3"] = {{"beta", sim.sim3.beta}, {"gamma", sim.sim3.gamma}, {"delta", sim.sim3.delta}};
  else
    j["grid"] = sim.grid;
  if (const auto* f = std::get_if<FixedFraction>(&sim.panel.betting)) j["kappa"] = f->kappa;
  j["gamma"] = to_string(sim.panel.gamma);
  j["scale"] = sim.panel.scale;
  j["seed"] = sim.seed;
  j["replications"] = s.replications;
  j["coverage"] = s.coverage;
  j["replications_with_reinclusion"] = s.with_reinclusion;
  j["final_mean_size"] = s.mean_size.back();
  j["version"] = kVersion;
  write_json(dir / "summary.json", j);
  auto out = open_out(dir / "sizes.csv");
  out << "t,mean_size\n";
  for (std::size_t t = 0; t < s.mean_size.size(); ++t) out << t << ',' << format_number(s.mean_size[t]) << '\n';
}

std::string to_string(SimVariant v) {
  switch (v) {
    case SimVariant::sim1:
      return "sim1";
    case SimVariant::sim2:
      return "sim2";
    case SimVariant::sim3:
      return "sim3";
  }
  return "sim1";
}

SimVariant parse_sim_variant(const std::string& s) {
  if (s == "sim1" || s == "1") return SimVariant::sim1;
  if (s == "sim2" || s == "2") return SimVariant::sim2;
  if (s == "sim3" || s == "3") return SimVariant::sim3;
  throw ConfigError("unknown simulation '" + s + "' (expected sim1, sim2 or sim3)");
}

}  // namespace smcs
