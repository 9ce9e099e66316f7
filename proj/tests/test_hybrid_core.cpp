#include <gtest/gtest.h>

#include <cmath>

#include "petc/hybrid_core.hpp"
#include "support.hpp"

namespace petc {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double d : v) out(k++) = d;
  return out;
}

class HybridTest : public ::testing::Test {
 protected:
  test::PathSystem ps = test::path_system();
  const HybridSystem& sys() const { return *ps.sys; }
  HybridState start() const { return sys().initial_state(vec({1.0, -2.0, 4.0}), {}); }
};

TEST_F(HybridTest, InitialStateHasTrueEstimates) {
  const auto s = start();
  EXPECT_EQ(s.e.squaredNorm(), 0.0);
  EXPECT_EQ(s.r, s.x);
  const auto est = sys().estimates_in(s, 1);
  EXPECT_DOUBLE_EQ(est(0), 1.0);
  EXPECT_DOUBLE_EQ(est(1), 0.0);
  EXPECT_DOUBLE_EQ(est(2), 4.0);
  const auto view = sys().controller_view(s, 0);
  EXPECT_DOUBLE_EQ(view(0), 1.0);
  EXPECT_DOUBLE_EQ(view(1), -2.0);
  EXPECT_DOUBLE_EQ(view(2), 0.0);
  EXPECT_NO_THROW(sys().check_admissible(s));
}

TEST_F(HybridTest, FlowIsPiecewiseLinearForConsensus) {
  const auto s0 = start();
  const double dt = 0.0037;
  const auto s1 = sys().flow(s0, dt);
  const double u[] = {-3.0, 3.0 + 6.0, -6.0};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s1.x(i), s0.x(i) + u[i] * dt, 1e-14);
  // e_i^m drops by the output change on every out-link; non-edges stay zero.
  EXPECT_NEAR(s1.e_block(0, 1)(0), -u[0] * dt, 1e-14);
  EXPECT_NEAR(s1.e_block(1, 0)(0), -u[1] * dt, 1e-14);
  EXPECT_NEAR(s1.e_block(1, 2)(0), -u[1] * dt, 1e-14);
  EXPECT_EQ(s1.e_block(0, 2)(0), 0.0);
  EXPECT_EQ(s1.e_block(0, 0)(0), 0.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(s1.tau[i], dt);
    EXPECT_DOUBLE_EQ(s1.sigma[i], dt);
  }
}

TEST_F(HybridTest, FlowOnConsensusSetOnlyAdvancesClocksAndEta) {
  std::vector<double> eta0 = {2.0, 1.0, 0.5};
  const auto s0 = sys().initial_state(vec({0.7, 0.7, 0.7}), eta0);
  const auto s1 = sys().flow(s0, 0.008);
  EXPECT_EQ(s1.x, s0.x);
  EXPECT_EQ(s1.e.squaredNorm(), 0.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s1.eta[i], eta0[i] * std::exp(-0.05 * 0.008), 1e-15);
}

TEST_F(HybridTest, FlowSplitsConsistently) {
  const auto s0 = start();
  const auto a = sys().flow(sys().flow(s0, 0.002), 0.003);
  const auto b = sys().flow(s0, 0.005);
  EXPECT_LT((a.x - b.x).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((a.e - b.e).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(sys().flow(s0, -1e-3), HybridError);
}

TEST_F(HybridTest, TransmitUpdatesOnlyProtocolVariables) {
  auto s = sys().flow(start(), 0.005);
  s.tau[1] = 0.2;
  s.eta[1] = 0.0;
  ASSERT_TRUE(sys().trigger_decision(s, 1));
  JumpInfo info;
  const auto post = sys().jump_transmit(s, 1, &info);
  EXPECT_EQ(post.x, s.x);
  EXPECT_EQ(post.e, s.e);
  EXPECT_EQ(post.tau[1], 0.0);
  EXPECT_EQ(post.sigma[1], 0.0);
  EXPECT_DOUBLE_EQ(post.r(1), s.x(1));
  EXPECT_EQ(post.r(0), s.r(0));
  EXPECT_TRUE(post.ell_at(1, 0) && post.ell_at(1, 2));
  EXPECT_FALSE(post.ell_at(0, 1));
  const double rho = sys().trigger(1).rho(sys().e_out_sq(s, 1), s.sigma[1]);
  EXPECT_GT(rho, 0.0);
  EXPECT_DOUBLE_EQ(info.eta_increment, rho);
  EXPECT_DOUBLE_EQ(post.eta[1], s.eta[1] + rho);
  EXPECT_TRUE(info.flushed.empty());
}

TEST_F(HybridTest, TransmitPreconditions) {
  auto s = sys().flow(start(), 0.005);
  EXPECT_FALSE(sys().trigger_decision(s, 1));  // tau below tau_MIET
  EXPECT_THROW(sys().jump_transmit(s, 1), HybridError);
  s.tau[1] = 0.2;
  s.sigma[1] = 1e-4;  // below d
  EXPECT_THROW(sys().jump_transmit(s, 1), HybridError);
  s.sigma[1] = 0.005;
  s.eta[1] = 1e3;
  EXPECT_FALSE(sys().trigger_decision(s, 1));
}

TEST_F(HybridTest, SampleBeforeMietLeavesEtaUnchanged) {
  auto s = sys().flow(start(), 0.005);
  s.eta[0] = 0.3;
  JumpInfo info;
  const auto post = sys().jump_sample(s, 0, &info);
  EXPECT_EQ(post.eta[0], 0.3);
  EXPECT_EQ(post.sigma[0], 0.0);
  EXPECT_EQ(post.tau[0], s.tau[0]);
  EXPECT_EQ(info.eta_increment, 0.0);
}

TEST_F(HybridTest, SampleAfterMietAddsNu) {
  auto s = sys().flow(start(), 0.005);
  s.tau[0] = 0.2;
  s.eta[0] = 5.0;
  JumpInfo info;
  const auto post = sys().jump_sample(s, 0, &info);
  const double nu = sys().trigger(0).nu(sys().e_out_sq(s, 0), s.tau[0], s.sigma[0]);
  EXPECT_LT(nu, 0.0);
  EXPECT_DOUBLE_EQ(post.eta[0], 5.0 + nu);
}

TEST_F(HybridTest, ReceiveMovesPacketToBuffer) {
  auto s = sys().flow(start(), 0.005);
  s.tau[1] = 0.2;
  s.eta[1] = 0.0;
  s = sys().jump_transmit(s, 1);
  s = sys().flow(s, 0.002);
  const auto post = sys().jump_receive(s, 1, 0);
  EXPECT_FALSE(post.ell_at(1, 0));
  EXPECT_TRUE(post.b_at(1, 0));
  EXPECT_TRUE(post.ell_at(1, 2));
  EXPECT_EQ(post.x, s.x);
  EXPECT_EQ(post.e, s.e);
  EXPECT_EQ(post.eta, s.eta);
  EXPECT_THROW(sys().jump_receive(post, 1, 0), HybridError);
  EXPECT_THROW(sys().jump_receive(post, 0, 2), HybridError);
}

TEST_F(HybridTest, ProcessingResetsEstimateToPayload) {
  auto s = sys().flow(start(), 0.005);
  s.tau[1] = 0.2;
  s.eta[1] = 0.0;
  s = sys().jump_transmit(s, 1);
  const double payload = s.r(1);
  s = sys().flow(s, 0.002);
  s = sys().jump_receive(s, 1, 0);
  s = sys().flow(s, 0.003);
  JumpInfo info;
  const auto post = sys().jump_sample(s, 0, &info);
  ASSERT_EQ(info.flushed, std::vector<std::size_t>{1});
  EXPECT_FALSE(post.b_at(1, 0));
  EXPECT_NEAR(post.e_block(1, 0)(0), payload - post.x(1), 1e-15);
  EXPECT_NEAR(sys().estimates_in(post, 0)(1), payload, 1e-15);
  // The other receiver still holds the old estimate.
  EXPECT_EQ(post.e_block(1, 2)(0), s.e_block(1, 2)(0));
}

// Every admissible (ell, b) pattern on the four links of the path.
TEST_F(HybridTest, ExhaustiveIndicatorPatterns) {
  const std::pair<std::size_t, std::size_t> links[] = {{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  const auto base = sys().flow(start(), 0.005);
  std::size_t patterns = 0;
  for (int code = 0; code < 81; ++code) {
    HybridState s = base;
    int c = code;
    for (const auto& [i, m] : links) {
      const int v = c % 3;
      c /= 3;
      s.ell_at(i, m) = v == 1;
      s.b_at(i, m) = v == 2;
    }
    for (std::size_t i = 0; i < 3; ++i) {
      bool busy = false;
      for (std::size_t m : sys().topology().out_neighbors(i)) busy |= s.ell_at(i, m) || s.b_at(i, m);
      s.tau[i] = busy ? 0.006 : 0.2;
    }
    ASSERT_NO_THROW(sys().check_admissible(s));
    ++patterns;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto post = sys().jump_sample(s, i);
      EXPECT_NO_THROW(sys().check_admissible(post));
      for (std::size_t j : sys().topology().in_neighbors(i)) EXPECT_FALSE(post.b_at(j, i));
      bool busy = false;
      for (std::size_t m : sys().topology().out_neighbors(i)) busy |= s.ell_at(i, m) || s.b_at(i, m);
      if (busy) {
        EXPECT_THROW(sys().jump_transmit(s, i), HybridError);
      } else if (sys().trigger_decision(s, i)) {
        const auto tx = sys().jump_transmit(s, i);
        EXPECT_NO_THROW(sys().check_admissible(tx));
      }
    }
    for (const auto& [i, m] : links) {
      if (s.ell_at(i, m)) {
        const auto post = sys().jump_receive(s, i, m);
        EXPECT_EQ(post.ell_at(i, m) + post.b_at(i, m), 1);
        EXPECT_TRUE(post.b_at(i, m));
      } else {
        EXPECT_THROW(sys().jump_receive(s, i, m), HybridError);
      }
    }
  }
  EXPECT_EQ(patterns, 81u);
}

TEST_F(HybridTest, AdmissibilityRejections) {
  const auto base = start();
  auto s = base;
  s.eta[0] = -1e-3;
  EXPECT_THROW(sys().check_admissible(s), HybridError);
  s = base;
  s.sigma[2] = 0.5;
  EXPECT_THROW(sys().check_admissible(s), HybridError);
  s = base;
  s.ell_at(0, 1) = 1;
  s.b_at(0, 1) = 1;
  EXPECT_THROW(sys().check_admissible(s), HybridError);
  s = base;
  s.e_block(0, 2)(0) = 1.0;
  EXPECT_THROW(sys().check_admissible(s), HybridError);
  s = base;
  s.ell_at(0, 1) = 1;
  s.tau[0] = 1.0;
  EXPECT_THROW(sys().check_admissible(s), HybridError);
}

TEST(HybridSystem, RejectsDesignForWrongDegree) {
  auto ps = test::path_system();
  std::vector<std::shared_ptr<const TriggerFunctions>> tf;
  for (std::size_t i = 0; i < 3; ++i) {
    tf.push_back(std::make_shared<TriggerFunctions>(ps.designs[0], TriggerMode::online, 0.05));
  }
  EXPECT_THROW(HybridSystem(ps.model, tf), HybridError);
}

TEST(JumpKind, Names) {
  EXPECT_STREQ(to_string(JumpKind::transmit), "G_a");
  EXPECT_STREQ(to_string(JumpKind::sample), "G_b");
  EXPECT_STREQ(to_string(JumpKind::receive), "G_c");
}

}  // namespace
}  // namespace petc
