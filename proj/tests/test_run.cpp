#include "smcs/io.hpp"
#include "smcs/run.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace smcs;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "smcs-tests" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string trace_of(const RunOutput& r) {
  std::ostringstream out;
  write_trace(out, r);
  return out.str();
}

LossStream random_stream(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  LossStream s;
  s.models = {"a", "b", "c"};
  for (std::size_t r = 0; r < n; ++r) s.times.push_back(static_cast<std::int64_t>(r + 1));
  s.losses.resize(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index r = 0; r < s.losses.rows(); ++r) {
    for (Eigen::Index i = 0; i < 3; ++i) s.losses(r, i) = u(rng) * (1 + 0.3 * static_cast<double>(i));
    const double c = 4 + u(rng);
    Matrix<double> b = Matrix<double>::Constant(3, 3, c);
    b.diagonal().setZero();
    s.bounds.push_back(b);
  }
  return s;
}

}  // namespace

TEST(Run, EmptyStreamReportsTheFullSet) {
  const auto dir = scratch();
  spit(dir / "in.csv", "t,A,B\n");
  RunConfig cfg;
  cfg.bound_mode = BoundMode::constant;
  cfg.input = (dir / "in.csv").string();
  cfg.out = (dir / "out").string();
  const auto r = run_to_files(cfg);
  EXPECT_TRUE(r.rows.empty());
  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_EQ(summary["rounds"], 0);
  EXPECT_EQ(summary["final_set"], (std::vector<std::string>{"A", "B"}));
}

TEST(Run, OneModelWithRoundsIsAnIngestError) {
  const auto dir = scratch();
  spit(dir / "in.csv", "t,A\n1,0.3\n");
  RunConfig cfg;
  cfg.bound_mode = BoundMode::constant;
  cfg.input = (dir / "in.csv").string();
  EXPECT_THROW(execute(cfg), IngestError);
}

TEST(Run, IdenticalGroupsEqualASingleScaledRun) {
  const auto dir = scratch();
  const auto s = random_stream(3, 300);
  std::ostringstream wide;
  write_wide(wide, s);
  // Two copies of the same stream as groups x and y.
  std::istringstream lines(wide.str());
  std::string header, line, grouped;
  std::getline(lines, header);
  grouped = "t,group" + header.substr(1) + "\n";
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    for (const char* g : {"x", "y"}) grouped += line.substr(0, comma) + "," + g + line.substr(comma) + "\n";
  }
  spit(dir / "single.csv", wide.str());
  spit(dir / "groups.csv", grouped);

  RunConfig cfg;
  cfg.hypothesis = Hypothesis::uniformly_weak;
  cfg.input = (dir / "single.csv").string();
  const auto single = execute(cfg);
  cfg.input = (dir / "groups.csv").string();
  EXPECT_THROW(execute(cfg), ConfigError);
  cfg.aggregation = Aggregation::groups;
  const auto agg = execute(cfg);
  ASSERT_EQ(single.rows.size(), agg.rows.size());
  EXPECT_TRUE(single.panel.scale);
  EXPECT_EQ(trace_of(single), trace_of(agg));
}

TEST(Run, ZeroBoundGroupsContributeZero) {
  LossStream a = random_stream(9, 20), b = random_stream(10, 20);
  for (auto& m : b.bounds) m.setZero();
  for (Eigen::Index r = 0; r < 20; ++r) b.losses.row(r).setConstant(b.losses(r, 0));
  const auto rounds = aggregate_groups({a, b});
  ASSERT_EQ(rounds.size(), 20u);
  // Group b's forecasts coincide: its scaled difference is 0 and still counts.
  for (std::size_t r = 0; r < 20; ++r) {
    const auto k = static_cast<Eigen::Index>(r);
    EXPECT_DOUBLE_EQ(rounds[r].bound(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(rounds[r].diff(0, 1), ((a.losses(k, 0) - a.losses(k, 1)) / a.bounds[r](0, 1) + 0.0) / 2);
  }
  // With no evidence anywhere the aggregated bound is 0.
  const auto none = aggregate_groups({b, b});
  EXPECT_DOUBLE_EQ(none[0].bound(0, 1), 0.0);
}

TEST(Run, TraceIsDeterministicAndManifestReplays) {
  const auto dir = scratch();
  std::ostringstream wide;
  write_wide(wide, random_stream(17, 200));
  spit(dir / "in.csv", wide.str());
  RunConfig cfg;
  cfg.hypothesis = Hypothesis::strong;
  cfg.kappa = 1.0;
  cfg.input = (dir / "in.csv").string();
  cfg.out = (dir / "a").string();
  run_to_files(cfg);
  cfg.out = (dir / "b").string();
  run_to_files(cfg);
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));

  auto replay = load_config(dir / "a" / "manifest.json");
  replay.out = (dir / "c").string();
  run_to_files(replay);
  EXPECT_EQ(slurp(dir / "a" / "trace.csv"), slurp(dir / "c" / "trace.csv"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest["version"], kVersion);
  EXPECT_TRUE(fs::path(manifest["input"].get<std::string>()).is_absolute());
}

TEST(Run, BoundViolationNamesTheRound) {
  const auto dir = scratch();
  spit(dir / "in.csv", "t,A,B,c:A:B\n1,0.1,0.2,1\n2,0.1,0.9,1\n");
  RunConfig cfg;
  cfg.input = (dir / "in.csv").string();
  try {
    execute(cfg);
    FAIL() << "expected a bound violation";
  } catch (const BoundViolation& e) {
    EXPECT_EQ(std::string(e.what()).rfind("t=2", 0), 0u) << e.what();
  }
}

TEST(Run, QuantileForecastFile) {
  const auto dir = scratch();
  // Log-transformed median forecasts: a overshoots by a factor e every round.
  std::string text = "t,model,prediction,outcome\n";
  for (int t = 1; t <= 60; ++t) {
    const double y = 1 + 0.1 * t;
    text += std::to_string(t) + ",a," + format_number(std::exp(1.0) * y) + "," + format_number(y) + "\n";
    text += std::to_string(t) + ",b," + format_number(y) + "," + format_number(y) + "\n";
  }
  spit(dir / "q.csv", text);
  RunConfig cfg;
  cfg.bound_mode = BoundMode::forecasts;
  cfg.transform = Transform::log;
  cfg.tau = 0.5;
  cfg.kappa = 1.0;
  cfg.input = (dir / "q.csv").string();
  const auto r = execute(cfg);
  ASSERT_EQ(r.rows.size(), 60u);
  // d = 0.5 against bound 1 with lambda = 1: each round multiplies E_ab by 1.5.
  EXPECT_EQ(r.rows.back().reported, (Membership{false, true}));
  const auto first_out = std::find_if(r.rows.begin(), r.rows.end(), [](const auto& row) { return !row.reported[0]; });
  EXPECT_EQ(first_out->time, 8);
}

TEST(Run, SimulationReplayIsBitIdentical) {
  const auto dir = scratch();
  for (auto v : {SimVariant::sim1, SimVariant::sim2, SimVariant::sim3}) {
    auto sim = default_sim_config(v);
    sim.n = 150;
    const auto sub = dir / to_string(v);
    const auto files = write_simulation(sim, 4, sub);
    run_to_files(load_config(files.config));
    EXPECT_EQ(slurp(files.trace), slurp(sub / "replay" / "trace.csv")) << to_string(v);
  }
}

TEST(Run, SimVariantNames) {
  EXPECT_EQ(parse_sim_variant("2"), SimVariant::sim2);
  EXPECT_EQ(parse_sim_variant(to_string(SimVariant::sim3)), SimVariant::sim3);
  EXPECT_THROW(parse_sim_variant("sim4"), ConfigError);
}
