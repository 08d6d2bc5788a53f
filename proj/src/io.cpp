#include "smcs/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace smcs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto piece = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    out.emplace_back(trim(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads non-blank, non-comment lines and keeps their line numbers.
class LineReader {
 public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      fields = split(line);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw IngestError(name_ + ":" + std::to_string(line_) + ": " + what);
  }

  std::size_t line() const { return line_; }
  const std::string& name() const { return name_; }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_ = 0;
};

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan"; }

double parse_double(const LineReader& r, const std::string& s, const char* what) {
  double v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) r.fail(std::string("cannot parse ") + what + " '" + s + "'");
  if (!std::isfinite(v)) r.fail(std::string(what) + " must be finite");
  return v;
}

std::int64_t parse_time(const LineReader& r, const std::string& s) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) r.fail("cannot parse round index '" + s + "'");
  return v;
}

bool is_bound_name(const std::string& s) { return s.rfind("c:", 0) == 0; }

std::pair<std::string, std::string> bound_pair(const LineReader& r, const std::string& s) {
  const auto colon = s.find(':', 2);
  if (colon == std::string::npos || colon == 2 || colon + 1 == s.size())
    r.fail("bound column '" + s + "' must be named c:A:B");
  return {s.substr(2, colon - 2), s.substr(colon + 1)};
}

void check_model_name(const LineReader& r, const std::string& s) {
  if (s.empty() || s.find_first_of(",;:") != std::string::npos)
    r.fail("model name '" + s + "' must be nonempty without ',', ';' or ':'");
}

/// Cells collected while reading, before the dense layout is known.
struct Collected {
  std::vector<std::string> models;
  std::map<std::string, std::size_t> model_index;
  std::vector<std::string> groups;
  std::map<std::string, std::size_t> group_index;
  // group -> t -> model -> loss
  std::vector<std::map<std::int64_t, std::map<std::size_t, double>>> loss;
  // group -> t -> (A, B) -> (bound, line)
  std::vector<std::map<std::int64_t, std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>>>>
      bound;
  std::vector<std::int64_t> last_time;
  std::size_t records = 0;
  bool has_bounds = false;

  std::size_t model(const std::string& name) {
    auto [it, fresh] = model_index.emplace(name, models.size());
    if (fresh) models.push_back(name);
    return it->second;
  }

  std::size_t group(const std::string& name) {
    auto [it, fresh] = group_index.emplace(name, groups.size());
    if (fresh) {
      groups.push_back(name);
      loss.emplace_back();
      bound.emplace_back();
      last_time.push_back(std::numeric_limits<std::int64_t>::min());
    }
    return it->second;
  }

  /// Times within a group may repeat (long format) but not go back.
  void check_time(const LineReader& r, std::size_t g, std::int64_t t, bool strict) {
    if (t < last_time[g] || (strict && t == last_time[g]))
      r.fail("round index " + std::to_string(t) + " is not increasing");
    last_time[g] = t;
  }

  void put_loss(const LineReader& r, std::size_t g, std::int64_t t, std::size_t m, double v) {
    if (!loss[g][t].emplace(m, v).second)
      r.fail("duplicate loss for model " + models[m] + " at t=" + std::to_string(t));
  }

  void put_bound(const LineReader& r, std::size_t g, std::int64_t t, const std::pair<std::string, std::string>& p,
                 double v) {
    if (!(v >= 0)) r.fail("bound must be nonnegative");
    has_bounds = true;
    if (!bound[g][t].emplace(p, std::make_pair(v, r.line())).second)
      r.fail("duplicate bound for " + p.first + "/" + p.second + " at t=" + std::to_string(t));
  }
};

std::string where(const Ingested& out, std::size_t g, std::int64_t t) {
  std::string s = "t=" + std::to_string(t);
  if (out.groups.size() > 1 || !out.groups.front().empty()) s += " (group " + out.groups[g] + ")";
  return s;
}

Ingested densify(Collected& c, const std::string& name, const IngestOptions& opt) {
  Ingested out;
  out.records = c.records;
  if (c.groups.empty()) c.group("");
  out.groups = c.groups;
  std::vector<std::int64_t> times;
  for (const auto& g : c.loss)
    for (const auto& [t, row] : g) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  if (c.has_bounds && opt.constant_bound)
    throw ConfigError(name + ": input carries bound columns but bound_mode is constant");
  if (!c.has_bounds && !opt.constant_bound && !times.empty())
    throw ConfigError(name + ": no bound columns in input; add c:A:B columns or use bound_mode = constant");

  const auto m = static_cast<Eigen::Index>(c.models.size());
  for (std::size_t g = 0; g < c.groups.size(); ++g) {
    LossStream s;
    s.models = c.models;
    s.times = times;
    s.losses = Matrix<double>::Constant(static_cast<Eigen::Index>(times.size()), m, kNaN);
    if (opt.constant_bound) {
      s.fixed_bound = Matrix<double>::Constant(m, m, *opt.constant_bound);
      s.fixed_bound.diagonal().setZero();
    }
    for (std::size_t r = 0; r < times.size(); ++r) {
      const auto t = times[r];
      if (auto it = c.loss[g].find(t); it != c.loss[g].end())
        for (const auto& [k, v] : it->second) s.losses(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
      for (Eigen::Index k = 0; k < m; ++k)
        if (std::isnan(s.losses(static_cast<Eigen::Index>(r), k))) {
          ++out.missing_cells;
          if (opt.missing == MissingPolicy::error)
            throw IngestError(name + ": missing loss for model " + c.models[static_cast<std::size_t>(k)] + " at " +
                              where(out, g, t));
        }
      if (!c.has_bounds) continue;
      Matrix<double> b = Matrix<double>::Constant(m, m, kNaN);
      b.diagonal().setZero();
      if (auto it = c.bound[g].find(t); it != c.bound[g].end())
        for (const auto& [p, entry] : it->second) {
          const auto ia = c.model_index.find(p.first), ib = c.model_index.find(p.second);
          const std::string at = name + ":" + std::to_string(entry.second) + ": ";
          if (ia == c.model_index.end() || ib == c.model_index.end())
            throw IngestError(at + "bound refers to unknown model in c:" + p.first + ":" + p.second);
          const auto i = static_cast<Eigen::Index>(ia->second), j = static_cast<Eigen::Index>(ib->second);
          if (i == j) throw IngestError(at + "bound of a model with itself");
          if (!std::isnan(b(i, j)) && b(i, j) != entry.first)
            throw IngestError(at + "conflicting bounds for " + p.first + "/" + p.second);
          b(i, j) = b(j, i) = entry.first;
        }
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j)
          if (std::isfinite(s.losses(static_cast<Eigen::Index>(r), i)) &&
              std::isfinite(s.losses(static_cast<Eigen::Index>(r), j)) && std::isnan(b(i, j)))
            throw IngestError(name + ": missing bound for " + c.models[static_cast<std::size_t>(i)] + "/" +
                              c.models[static_cast<std::size_t>(j)] + " at " + where(out, g, t));
      s.bounds.push_back(std::move(b));
    }
    out.streams.push_back(std::move(s));
  }
  return out;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t k = 0; k < header.size(); ++k) idx.emplace(header[k], k);
  return idx;
}

void check_width(const LineReader& r, const std::vector<std::string>& fields, std::size_t width) {
  if (fields.size() != width)
    r.fail("expected " + std::to_string(width) + " fields, found " + std::to_string(fields.size()));
}

Ingested read_long(LineReader& r, const std::vector<std::string>& header, const IngestOptions& opt) {
  const auto idx = header_index(header);
  for (const char* col : {"t", "model", "loss"})
    if (!idx.count(col)) r.fail(std::string("long format needs a '") + col + "' column");
  const std::size_t ct = idx.at("t"), cm = idx.at("model"), cl = idx.at("loss");
  const auto cg = idx.count("group") ? std::optional<std::size_t>(idx.at("group")) : std::nullopt;
  if (header.size() != 3 + (cg ? 1u : 0u)) r.fail("long format takes t, model, loss and optionally group");
  Collected c;
  std::vector<std::string> f;
  while (r.next(f)) {
    check_width(r, f, header.size());
    const auto t = parse_time(r, f[ct]);
    const auto g = c.group(cg ? f[*cg] : "");
    c.check_time(r, g, t, false);
    ++c.records;
    if (is_bound_name(f[cm])) {
      if (is_missing(f[cl])) continue;
      c.put_bound(r, g, t, bound_pair(r, f[cm]), parse_double(r, f[cl], "bound"));
      continue;
    }
    check_model_name(r, f[cm]);
    const auto model = c.model(f[cm]);
    if (is_missing(f[cl])) {
      // The model exists but skipped this round.
      c.loss[g][t];
      continue;
    }
    c.put_loss(r, g, t, model, parse_double(r, f[cl], "loss"));
  }
  return densify(c, r.name(), opt);
}

Ingested read_wide(LineReader& r, const std::vector<std::string>& header, const IngestOptions& opt) {
  if (header.empty() || header[0] != "t") r.fail("wide format starts with a 't' column");
  Collected c;
  const bool grouped = header.size() > 1 && header[1] == "group";
  std::vector<std::optional<std::size_t>> model_col(header.size());
  std::vector<std::optional<std::pair<std::string, std::string>>> bound_col(header.size());
  std::map<std::string, bool> seen;
  for (std::size_t k = grouped ? 2 : 1; k < header.size(); ++k) {
    if (!seen.emplace(header[k], true).second) r.fail("duplicate column '" + header[k] + "'");
    if (is_bound_name(header[k])) {
      bound_col[k] = bound_pair(r, header[k]);
    } else {
      check_model_name(r, header[k]);
      model_col[k] = c.model(header[k]);
    }
  }
  std::vector<std::string> f;
  while (r.next(f)) {
    check_width(r, f, header.size());
    const auto t = parse_time(r, f[0]);
    const auto g = c.group(grouped ? f[1] : "");
    c.check_time(r, g, t, true);
    ++c.records;
    c.loss[g][t];
    for (std::size_t k = grouped ? 2 : 1; k < header.size(); ++k) {
      if (is_missing(f[k])) continue;
      if (model_col[k])
        c.put_loss(r, g, t, *model_col[k], parse_double(r, f[k], "loss"));
      else
        c.put_bound(r, g, t, *bound_col[k], parse_double(r, f[k], "bound"));
    }
  }
  return densify(c, r.name(), opt);
}

}  // namespace

Ingested ingest_losses(std::istream& in, const std::string& name, const IngestOptions& opt) {
  LineReader r(in, name);
  std::vector<std::string> header;
  if (!r.next(header)) r.fail("empty input, a header line is required");
  InputFormat fmt = opt.format;
  if (fmt == InputFormat::automatic)
    fmt = std::find(header.begin(), header.end(), "model") != header.end() ? InputFormat::long_format
                                                                           : InputFormat::wide;
  return fmt == InputFormat::long_format ? read_long(r, header, opt) : read_wide(r, header, opt);
}

Ingested ingest_losses(const std::filesystem::path& path, const IngestOptions& opt) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return ingest_losses(in, path.string(), opt);
}

Ingested ingest_quantile_forecasts(std::istream& in, const std::string& name, double tau, Transform g,
                                   MissingPolicy missing) {
  if (!(tau > 0 && tau < 1)) throw ConfigError("quantile level must lie in (0,1)");
  LineReader r(in, name);
  std::vector<std::string> header;
  if (!r.next(header)) r.fail("empty input, a header line is required");
  const auto idx = header_index(header);
  for (const char* col : {"t", "model", "prediction", "outcome"})
    if (!idx.count(col)) r.fail(std::string("forecast files need a '") + col + "' column");
  const auto cg = idx.count("group") ? std::optional<std::size_t>(idx.at("group")) : std::nullopt;
  if (header.size() != 4 + (cg ? 1u : 0u)) r.fail("forecast files take t, model, prediction, outcome and optionally group");
  const std::size_t ct = idx.at("t"), cm = idx.at("model"), cp = idx.at("prediction"), co = idx.at("outcome");

  struct Entry {
    double prediction;
    std::size_t line;
  };
  Collected c;
  // group -> t -> model -> prediction; group -> t -> outcome
  std::vector<std::map<std::int64_t, std::map<std::size_t, Entry>>> pred;
  std::vector<std::map<std::int64_t, double>> outcome;
  std::vector<std::string> f;
  while (r.next(f)) {
    check_width(r, f, header.size());
    const auto t = parse_time(r, f[ct]);
    const auto grp = c.group(cg ? f[*cg] : "");
    if (pred.size() < c.groups.size()) {
      pred.resize(c.groups.size());
      outcome.resize(c.groups.size());
    }
    c.check_time(r, grp, t, false);
    check_model_name(r, f[cm]);
    const auto model = c.model(f[cm]);
    ++c.records;
    c.loss[grp][t];
    if (is_missing(f[cp])) continue;
    const double x = parse_double(r, f[cp], "prediction");
    const double y = parse_double(r, f[co], "outcome");
    if (g == Transform::log && !(x > 0 && y > 0)) r.fail("log transform needs positive prediction and outcome");
    auto [it, fresh] = outcome[grp].emplace(t, y);
    if (!fresh && it->second != y) r.fail("outcome differs from an earlier row of the same round");
    if (!pred[grp][t].emplace(model, Entry{x, r.line()}).second)
      r.fail("duplicate forecast for model " + f[cm] + " at t=" + std::to_string(t));
  }

  // Scores and bounds go through the generic loss path so the dense layout
  // and missing-cell handling are shared.
  for (std::size_t grp = 0; grp < pred.size(); ++grp)
    for (const auto& [t, row] : pred[grp]) {
      const double y = outcome[grp].at(t);
      for (const auto& [model, e] : row) {
        c.loss[grp][t][model] = quantile_score(tau, e.prediction, y, g);
        for (const auto& [other, e2] : row)
          if (other > model)
            c.bound[grp][t][{c.models[model], c.models[other]}] = {
                quantile_diff_bound(tau, e.prediction, e2.prediction, g), e.line};
      }
    }
  c.has_bounds = true;
  IngestOptions opt;
  opt.format = InputFormat::long_format;
  opt.missing = missing;
  return densify(c, name, opt);
}

Ingested ingest_quantile_forecasts(const std::filesystem::path& path, double tau, Transform g,
                                   MissingPolicy missing) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open " + path.string());
  return ingest_quantile_forecasts(in, path.string(), tau, g, missing);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_wide(std::ostream& out, const LossStream& s) {
  const auto m = static_cast<Eigen::Index>(s.size());
  out << "t";
  for (const auto& name : s.models) out << ',' << name;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      out << ",c:" << s.models[static_cast<std::size_t>(i)] << ':' << s.models[static_cast<std::size_t>(j)];
  out << '\n';
  for (std::size_t r = 0; r < s.rounds(); ++r) {
    out << s.times[r];
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = s.losses(static_cast<Eigen::Index>(r), i);
      out << ',' << (std::isnan(v) ? std::string() : format_number(v));
    }
    const auto& b = s.bound_at(r);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) out << ',' << (std::isnan(b(i, j)) ? std::string() : format_number(b(i, j)));
    out << '\n';
  }
}

void write_long(std::ostream& out, const LossStream& s) {
  const auto m = static_cast<Eigen::Index>(s.size());
  out << "t,model,loss\n";
  for (std::size_t r = 0; r < s.rounds(); ++r) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = s.losses(static_cast<Eigen::Index>(r), i);
      if (!std::isnan(v)) out << s.times[r] << ',' << s.models[static_cast<std::size_t>(i)] << ',' << format_number(v) << '\n';
    }
    const auto& b = s.bound_at(r);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j)
        if (!std::isnan(b(i, j)))
          out << s.times[r] << ",c:" << s.models[static_cast<std::size_t>(i)] << ':'
              << s.models[static_cast<std::size_t>(j)] << ',' << format_number(b(i, j)) << '\n';
  }
}

}  // namespace smcs
