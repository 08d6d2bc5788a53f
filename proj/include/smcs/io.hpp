#pragma once

// Delimited-text ingestion and output.
//
// Loss files, comma separated with a header line:
//   long   t,model,loss[,group]          bound rows use model "c:A:B"
//   wide   t[,group],A,B,...[,c:A:B,...] one column per model, then bound columns
// Quantile forecast files:
//   t,model,prediction,outcome[,group]
// Empty cells and NA mark missing losses. Fields are not quoted, so model
// names may not contain commas, semicolons or colons.

#include "smcs/config.hpp"
#include "smcs/stream.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace smcs {

struct IngestOptions {
  InputFormat format = InputFormat::automatic;
  MissingPolicy missing = MissingPolicy::freeze;
  /// Set for bound_mode = constant; otherwise bound columns are required.
  std::optional<double> constant_bound;
};

/// One stream per group, all sharing the union of models and round times.
struct Ingested {
  std::vector<std::string> groups;
  std::vector<LossStream> streams;
  std::size_t records = 0;
  std::size_t missing_cells = 0;
};

Ingested ingest_losses(std::istream& in, const std::string& name, const IngestOptions& opt);
Ingested ingest_losses(const std::filesystem::path& path, const IngestOptions& opt);

/// Losses are quantile scores and bounds the pairwise quantile bounds of each round.
Ingested ingest_quantile_forecasts(std::istream& in, const std::string& name, double tau, Transform g,
                                   MissingPolicy missing);
Ingested ingest_quantile_forecasts(const std::filesystem::path& path, double tau, Transform g,
                                   MissingPolicy missing);

/// Shortest text that parses back to the same double.
std::string format_number(double x);

/// Wide format with one bound column per unordered pair and round.
void write_wide(std::ostream& out, const LossStream& s);
void write_long(std::ostream& out, const LossStream& s);

}  // namespace smcs
