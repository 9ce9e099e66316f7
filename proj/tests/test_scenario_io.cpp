#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "petc/scenario_io.hpp"
#include "support.hpp"

namespace petc {
namespace {

nlohmann::json case_json() { return nlohmann::json::parse(read_file(test::config_path())); }

TEST(Config, CaseStudyParses) {
  const auto f = test::case_study();
  EXPECT_EQ(f.topology.size(), 8u);
  EXPECT_EQ(f.consensus.mu_convention, MuConvention::aggregate);
  EXPECT_DOUBLE_EQ(f.etm.lambda, 0.2);
  EXPECT_DOUBLE_EQ(f.etm.tau_masp, 0.01);
  EXPECT_EQ(f.etm.tau_miet_by_out_degree.at(2), 0.07);
  EXPECT_EQ(f.etm.tau_miet_by_out_degree.at(3), 0.05);
  EXPECT_EQ(f.reference_timing.size(), 2u);
}

TEST(Config, Rejections) {
  auto j = case_json();
  j["model"]["type"] = "pendulum";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = case_json();
  j["scenario"]["x0"] = {1.0, 2.0};
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = case_json();
  j["scenario"]["delay"] = "exponential";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  j = case_json();
  j["etm"]["tau_miet"] = "large";
  EXPECT_THROW(parse_scenario(j), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/config.json"), ConfigError);
}

TEST(Config, LambdaOutsideUnitIntervalFailsDesign) {
  auto j = case_json();
  j["etm"]["lambda"] = 1.5;
  const auto f = parse_scenario(j);
  try {
    build_scenario(f);
    FAIL() << "lambda = 1.5 accepted";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("lambda"), std::string::npos) << e.what();
  }
}

TEST(Config, InitialStateIsPerAgentStream) {
  const auto f = test::case_study();
  const auto a = initial_x(f, 1);
  const auto b = initial_x(f, 1);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, initial_x(f, 2));
  EXPECT_LE(a.maxCoeff(), 1.0);
  EXPECT_GE(a.minCoeff(), -1.0);
  auto j = case_json();
  j["topology"]["n_agents"] = 9;
  j["topology"]["edges"].push_back({8, 9});
  const auto bigger = initial_x(parse_scenario(j), 1);
  EXPECT_EQ(bigger.head(8), a);
}

TEST(Design, ReportCarriesVerdicts) {
  const auto rep = design_report(test::case_study());
  EXPECT_TRUE(rep.at("certified").get<bool>());
  ASSERT_EQ(rep.at("reference_comparison").size(), 2u);
  for (const auto& c : rep.at("reference_comparison")) {
    EXPECT_EQ(c.at("aggregate").at("verdict"), "match");
    EXPECT_EQ(c.at("per_neighbor").at("verdict"), "discrepancy");
  }
  for (const auto& a : rep.at("agents")) {
    const double miet = a.at("tau_miet");
    EXPECT_EQ(miet, a.at("n_out") == 2 ? 0.07 : 0.05);
  }
}

TEST(Design, AgentsWithSameDegreeShareDesign) {
  const auto f = test::case_study();
  ConsensusModel m(f.topology, f.consensus);
  const auto d = design_all(f, m);
  EXPECT_EQ(d[0], d[3]);
  EXPECT_EQ(d[1], d[2]);
  EXPECT_NE(d[0], d[1]);
}

class TraceIo : public ::testing::Test {
 protected:
  void SetUp() override {
    f = test::case_study();
    RunOverrides o;
    o.horizon = 1.0;
    o.seed = 17;
    sc = build_scenario(f, o);
    ev = std::make_unique<StorageEvaluator>(*sc.system);
    sc.config.trace.store_states = true;
    sc.config.trace.storage = [this](const HybridState& s) { return ev->storage(s); };
  }
  ScenarioFile f;
  Scenario sc;
  std::unique_ptr<StorageEvaluator> ev;
};

TEST_F(TraceIo, FullStateRoundTripReproducesStorageBitForBit) {
  const auto tr = run(*sc.system, sc.config);
  const auto text = trace_csv(tr, *sc.system, true);
  const auto parsed = parse_trace_csv(text, *sc.system);
  ASSERT_EQ(parsed.rows.size(), tr.rows.size());
  for (std::size_t k = 0; k < tr.rows.size(); ++k) {
    const auto& row = parsed.rows[k];
    ASSERT_TRUE(row.state.has_value());
    const double u = ev->storage(*row.state);
    ASSERT_EQ(std::memcmp(&u, &tr.rows[k].U, sizeof u), 0) << k;
    ASSERT_EQ(row.x, tr.rows[k].x);
  }
  EXPECT_EQ(parsed.transmissions.size(), tr.transmissions.size());
  EXPECT_EQ(parsed.deliveries.size(), tr.deliveries.size());
  EXPECT_EQ(parsed.processings.size(), tr.processings.size());
  EXPECT_EQ(trace_csv(parsed, *sc.system, true), text);
}

TEST_F(TraceIo, ParsedTraceReplaysClean) {
  auto parsed = parse_trace_csv(trace_csv(run(*sc.system, sc.config), *sc.system, true), *sc.system);
  reconstruct_pre_states(parsed, *sc.system);
  EXPECT_TRUE(check_jumps(parsed, *ev).ok());
  EXPECT_TRUE(check_timing(parsed, sc.system->topology()).ok());
}

TEST_F(TraceIo, ByteIdenticalAcrossRuns) {
  const auto a = trace_csv(run(*sc.system, sc.config), *sc.system, false);
  const auto b = trace_csv(run(*sc.system, sc.config), *sc.system, false);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("# petc-trace v1", 0), 0u);
}

TEST_F(TraceIo, ReducedTraceCannotBeReplayed) {
  const auto text = trace_csv(run(*sc.system, sc.config), *sc.system, false);
  EXPECT_THROW(parse_trace_csv(text, *sc.system), ConfigError);
  EXPECT_THROW(parse_trace_csv("t,kind\n", *sc.system), ConfigError);
}

TEST(Output, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 0.0, 123456789.125}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Output, CurveCsvColumns) {
  const auto p = test::case_params(2, MuConvention::aggregate);
  const double grid[] = {0.1, 0.2};
  std::vector<std::pair<std::size_t, TradeoffCurve>> curves = {{2, tradeoff_curve(p, grid)}};
  const auto csv = curve_csv(curves, 0.01);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n_out,lambda,tau_max,tau_mad,tau_miet");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Output, AtomicWrite) {
  const auto dir = std::filesystem::temp_directory_path() / "petc_atomic_test";
  std::filesystem::create_directories(dir);
  write_atomic(dir / "a.txt", "hello");
  EXPECT_EQ(read_file(dir / "a.txt"), "hello");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace petc
