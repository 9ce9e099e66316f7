#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "property_suites.hpp"
#include "petc/verification.hpp"
#include "support.hpp"

namespace petc {
namespace {

using test::random_tuple;
using test::SenderTuple;
using test::wt;

// Blocks are disjoint, so the subset maximum separates per receiver.
double w_tilde_oracle(double lambda, const SenderTuple& t) {
  const double d2 = (t.r - t.y).squaredNorm();
  double full = 0.0, best = 0.0;
  for (std::size_t m = 0; m < t.n; ++m) {
    const double em = t.e.segment(static_cast<Eigen::Index>(m) * t.ny, t.ny).squaredNorm();
    const bool pending = std::find(t.out.begin(), t.out.end(), m) != t.out.end() && (t.ell[m] || t.b[m]);
    full += pending ? d2 : em;
    best += pending ? std::max(em, d2) : em;
  }
  return std::max(std::sqrt(full), lambda * std::sqrt(best));
}

TEST(WTilde, NoPendingIsErrorNorm) {
  std::mt19937_64 gen(1);
  for (int k = 0; k < 100; ++k) {
    const auto t = random_tuple(gen, false);
    EXPECT_NEAR(wt(0.2, t), t.e.norm(), 1e-14);
  }
}

TEST(WTilde, MatchesSeparableOracle) {
  std::mt19937_64 gen(2);
  for (int k = 0; k < 10000; ++k) {
    const auto t = random_tuple(gen);
    const double v = wt(0.3, t);
    ASSERT_NEAR(v, w_tilde_oracle(0.3, t), 1e-12 * (1.0 + v));
  }
}

TEST(WTilde, RejectsMoreThanSixteenPendingLinks) {
  SenderTuple t;
  t.n = 18;
  t.ny = 1;
  t.ell.assign(t.n, 1);
  t.b.assign(t.n, 0);
  for (std::size_t m = 1; m < t.n; ++m) t.out.push_back(m);
  t.y = t.r = Eigen::VectorXd::Zero(1);
  t.e = Eigen::VectorXd::Zero(18);
  EXPECT_THROW(wt(0.2, t), std::invalid_argument);
}

TEST(PFlag, Cases) {
  std::vector<std::uint8_t> ell(3, 0), b(3, 0);
  const std::vector<std::size_t> out = {1, 2};
  EXPECT_EQ(p_flag(ell, b, out), 0);
  ell[2] = 1;
  EXPECT_EQ(p_flag(ell, b, out), 1);
  std::swap(ell[2], b[2]);
  EXPECT_EQ(p_flag(ell, b, out), 1);
  b[2] = 0;
  ell[0] = 1;  // not an out-neighbour
  EXPECT_EQ(p_flag(ell, b, out), 0);
}

TEST(WTildeJumps, UpdateInvariance) {
  const auto r = test::w_update_invariance(10000, 11);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(WTildeJumps, SamplingContraction) {
  const auto r = test::w_sampling_contraction(10000, 12);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST(WTildeJumps, TransmissionContraction) {
  const auto r = test::w_transmission_contraction(10000, 13);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

class DesignedAgent : public ::testing::Test {
 protected:
  void SetUp() override {
    for (std::size_t n : {2u, 3u}) {
      DesignOptions o;
      o.tau_miet = n == 2 ? 0.07 : 0.05;
      designs.push_back(
          std::make_shared<AgentDesign>(design_agent(test::case_params(n, MuConvention::aggregate), o)));
    }
  }
  std::vector<std::shared_ptr<const AgentDesign>> designs;
};

TEST_F(DesignedAgent, RhoBound) {
  const auto r = test::rho_bound(designs, 10000, 21);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST_F(DesignedAgent, NuBound) {
  const auto r = test::nu_bound(designs, 10000, 22);
  EXPECT_EQ(r.failures, 0u) << r.worst;
}

TEST_F(DesignedAgent, GammaTildeDominance) {
  const auto r = test::gamma_dominance(designs, 10000, 23);
  EXPECT_EQ(r.failures, 0u) << r.worst;
  EXPECT_GE(r.checked, 10000u);
}

TEST_F(DesignedAgent, PhiBarBranches) {
  const auto& d = *designs[0];
  const double miet = d.timing.tau_miet;
  EXPECT_EQ(phi_bar(0, 0.03, 0.0, d), d.phi.phi0(0.03));
  EXPECT_EQ(phi_bar(1, 0.01, 0.0, d), d.phi.phi1(0.01));
  const double frozen = phi_bar(0, miet + 0.004 + 1e-6, 0.004, d);
  EXPECT_EQ(frozen, d.phi.phi0(miet + 0.004));
  EXPECT_EQ(phi_bar(0, miet + 0.5, 0.004, d), frozen);
  for (double sigma : {0.0, 0.002, 0.0099}) {
    const double at = miet + sigma;
    EXPECT_NEAR(phi_bar(0, at, sigma, d), phi_bar(0, at + 1e-12, sigma, d), 1e-9);
  }
  EXPECT_THROW(d.phi.phi0(d.phi.horizon() + 1.0), DesignError);
}

class MonitorTest : public ::testing::Test {
 protected:
  test::PathSystem ps = test::path_system();
  ScenarioConfig cfg(double horizon, std::uint64_t seed) const {
    ScenarioConfig c;
    c.designs = ps.designs;
    c.x0 = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
    c.horizon = horizon;
    c.seed = seed;
    return c;
  }
};

TEST_F(MonitorTest, StorageZeroOnAttractorAndAboveV) {
  StorageEvaluator ev(*ps.sys);
  const auto s0 = ps.sys->initial_state(Eigen::VectorXd::Constant(3, 0.4), {});
  EXPECT_EQ(ev.storage(s0), 0.0);
  const auto tr = [&] {
    auto c = cfg(2.0, 5);
    c.trace.store_states = true;
    return run(*ps.sys, c);
  }();
  for (const auto& row : tr.rows) {
    if (!row.state) continue;
    ASSERT_GE(ev.storage(*row.state), ps.model->storage(row.state->x));
  }
}

TEST_F(MonitorTest, StationaryFlowRateIsZero) {
  StorageEvaluator ev(*ps.sys);
  const auto s0 = ps.sys->initial_state(Eigen::VectorXd::Constant(3, 0.4), {});
  EXPECT_EQ(ev.etm_flow_bound(s0), 0.0);
  EXPECT_EQ(ev.supply_bound(s0), 0.0);
  const auto s1 = ps.sys->flow(s0, 1e-3);
  EXPECT_EQ(ev.storage(s1), 0.0);
}

TEST_F(MonitorTest, EtaOnlyDynamicsMatchLeakage) {
  StorageEvaluator ev(*ps.sys);
  std::vector<double> eta = {1.0, 2.0, 3.0};
  const auto s0 = ps.sys->initial_state(Eigen::VectorXd::Constant(3, 0.4), eta);
  const double h = 1e-4;
  const double rate = (ev.storage(ps.sys->flow(s0, h)) - ev.storage(s0)) / h;
  EXPECT_NEAR(rate, ev.supply_bound(s0), 1e-6);
  EXPECT_NEAR(ev.supply_bound(s0), -0.05 * 6.0, 1e-15);
}

TEST_F(MonitorTest, ReplayAgreesWithOnlineMonitor) {
  auto c = cfg(3.0, 9);
  SimTrace tr;
  const auto online = monitored_run(*ps.sys, c, {}, &tr);
  EXPECT_TRUE(online.passed());
  c.trace.store_states = true;
  auto stored = run(*ps.sys, c);
  StorageEvaluator ev(*ps.sys);
  const auto jumps = check_jumps(stored, ev);
  EXPECT_TRUE(jumps.ok());
  for (int k = 0; k < 3; ++k) EXPECT_EQ(jumps.checked[k], online.jumps.checked[k]);
  EXPECT_GT(jumps.checked[2], 0u);
  EXPECT_LE(jumps.gc_max_abs, 1e-12);
  const auto flow = check_flow(stored, ev);
  EXPECT_TRUE(flow.ok());
  EXPECT_GT(flow.intervals, 0u);
}

TEST_F(MonitorTest, JumpCheckFlagsInjectedIncrease) {
  auto c = cfg(1.0, 3);
  c.trace.store_states = true;
  auto tr = run(*ps.sys, c);
  StorageEvaluator ev(*ps.sys);
  for (auto& row : tr.rows) {
    if (row.kind == RowKind::receive) {
      row.state->eta[0] += 1.0;
      break;
    }
  }
  EXPECT_FALSE(check_jumps(tr, ev).ok());
}

TEST_F(MonitorTest, TimingCheckDetectsInjectedViolations) {
  auto c = cfg(2.0, 4);
  auto tr = run(*ps.sys, c);
  ASSERT_TRUE(check_timing(tr, ps.sys->topology()).ok());
  ASSERT_FALSE(tr.transmissions.empty());
  auto early = tr;
  auto tx = early.transmissions.front();
  tx.time += 1e-3;
  early.transmissions.insert(early.transmissions.begin() + 1, tx);
  const auto rep = check_timing(early, ps.sys->topology());
  EXPECT_GE(rep.iet_violations, 1u);
  EXPECT_GE(rep.off_sample_transmissions, 1u);
  auto late = tr;
  ASSERT_FALSE(late.processings.empty());
  late.processings.front().time += 1.0;
  EXPECT_GE(check_timing(late, ps.sys->topology()).delay_violations, 1u);
}

TEST_F(MonitorTest, MetricsFlagMissingTransmissions) {
  const auto tr = run(*ps.sys, cfg(0.05, 1));
  const auto m = metrics(tr);
  EXPECT_FALSE(m.flags.empty());
  for (const auto& a : m.agents) EXPECT_TRUE(std::isnan(a.min_iet));
}

TEST_F(MonitorTest, MetricsOnConvergingRun) {
  auto c = cfg(20.0, 2);
  const auto tr = run(*ps.sys, c);
  const auto m = metrics(tr);
  EXPECT_DOUBLE_EQ(m.initial_spread, 2.0);
  EXPECT_LT(m.final_spread, 0.01 * m.initial_spread);
  EXPECT_FALSE(std::isnan(m.time_to_1pct));
  EXPECT_LE(m.max_V_increase, 1e-6);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_GE(m.agents[i].min_iet, ps.designs[i]->timing.tau_miet);
}

}  // namespace
}  // namespace petc
