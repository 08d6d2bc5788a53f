#pragma once

// End-to-end runs: ingest, step a panel over every round, write the trace,
// summary and manifest. Also the simulate -> files path used for replays.

#include "smcs/config.hpp"
#include "smcs/io.hpp"
#include "smcs/simlab.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace smcs {

inline constexpr const char* kVersion = SMCS_VERSION;

struct RunOutput {
  std::vector<std::string> models;
  PanelConfig panel;
  std::vector<TraceRow<double>> rows;
};

RunOutput run_stream(const LossStream& s, const PanelConfig& cfg);
RunOutput run_rounds(const std::vector<std::string>& models, const std::vector<Round<double>>& rounds,
                     const PanelConfig& cfg);

/// Ingests `cfg.input` and runs it without writing anything.
RunOutput execute(const RunConfig& cfg);

/// Header: t,size,reported,raw,running,events,stat:<model>...
/// Sets are ';'-joined model names, events are -name (exclusion) and
/// +name (re-inclusion), stats are natural-log statistics.
void write_trace(std::ostream& out, const RunOutput& r);

nlohmann::json manifest_json(const RunConfig& cfg, const RunOutput& r);
nlohmann::json summary_json(const RunConfig& cfg, const RunOutput& r);

/// Runs and writes trace.csv, summary.json and manifest.json into cfg.out.
RunOutput run_to_files(const RunConfig& cfg);

/// Configuration that replays a simulated stream written by write_simulation.
RunConfig replay_config(const SimConfig& sim, const std::string& input, const std::string& out);

struct SimulationFiles {
  std::filesystem::path losses;
  std::filesystem::path config;
  std::filesystem::path trace;
};

/// Writes replication `rep` as losses.csv, the replay config.json and the
/// in-memory trace.csv into `dir`.
SimulationFiles write_simulation(const SimConfig& sim, std::uint64_t rep, const std::filesystem::path& dir);

/// Writes summary.json and sizes.csv (mean reported set size per round).
void write_sim_summary(const SimConfig& sim, const SimSummary& s, const std::filesystem::path& dir);

std::string to_string(SimVariant v);
SimVariant parse_sim_variant(const std::string& s);

}  // namespace smcs
