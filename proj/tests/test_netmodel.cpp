#include <gtest/gtest.h>

#include <cmath>

#include "sepnet/error.hpp"
#include "sepnet/netmodel.hpp"

using namespace sepnet;

namespace {

NetworkSystem single_link(double flip, std::size_t n = 16, std::size_t latency = 3) {
  auto medium = make_dmc_medium(2, {{UserPair{0, 1}, StochasticMatrix::binary_symmetric(flip)}});
  UncodedModemConfig tx;
  tx.send_to = 1;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 0}};
  return NetworkSystem(medium, {make_uncoded_modem(tx), make_uncoded_modem(rx)},
                       {PairSpec({0, 1}, Pmf::uniform(2), latency)}, {0, 1}, n);
}

NetworkSystem relay_chain(double flip) {
  auto medium = make_dmc_medium(3, {{UserPair{0, 1}, StochasticMatrix::binary_symmetric(flip)},
                                    {UserPair{1, 2}, StochasticMatrix::binary_symmetric(flip)}});
  UncodedModemConfig tx;
  tx.send_to = 2;
  UncodedModemConfig relay;
  relay.forward_from = 0;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 1}};
  return NetworkSystem(medium, {make_uncoded_modem(tx), make_uncoded_modem(relay), make_uncoded_modem(rx)},
                       {PairSpec({0, 2}, Pmf::uniform(2), 5)}, {0, 2}, 16);
}

// Exact Pr(Bin(n, p) > k), summed in log space.
double binomial_upper_tail(int n, double p, int k) {
  double total = 0.0;
  for (int j = k + 1; j <= n; ++j) {
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + j * std::log(p) +
                      (n - j) * std::log1p(-p));
  }
  return total;
}

double flip_rate(const PairTrace& trace, std::size_t start) {
  const Sequence x = trace.aligned_source(start);
  const Sequence y = trace.aligned_reproduction(start);
  double flips = 0;
  for (std::size_t k = 0; k < x.size(); ++k) flips += x[k] != y[k];
  return flips / static_cast<double>(x.size());
}

}  // namespace

TEST(Rollout, NoiselessLinkDeliversAfterThreeSteps) {
  const auto sys = single_link(0.0);
  const auto traj = rollout(sys, 200, RolloutSeeds::from_root({1, 0}));
  const auto& trace = traj.pair({0, 1});
  EXPECT_EQ(trace.aligned_source(), trace.aligned_reproduction());
  EXPECT_EQ(trace.aligned_length(), 197U);
}

TEST(Rollout, NoiselessRelayDeliversAfterFiveSteps) {
  const auto traj = rollout(relay_chain(0.0), 200, RolloutSeeds::from_root({2, 0}));
  const auto& trace = traj.pair({0, 2});
  EXPECT_EQ(trace.aligned_source(), trace.aligned_reproduction());
}

TEST(Rollout, WrongLatencyMisaligns) {
  const auto traj = rollout(single_link(0.0, 16, 2), 2000, RolloutSeeds::from_root({1, 0}));
  EXPECT_NEAR(flip_rate(traj.pair({0, 1}), 0), 0.5, 0.05);
}

TEST(Rollout, DeterministicGivenSeeds) {
  const auto sys = relay_chain(0.1);
  const auto seeds = RolloutSeeds::from_root({42, 0});
  EXPECT_EQ(trajectory_digest(rollout(sys, 500, seeds)), trajectory_digest(rollout(sys, 500, seeds)));
  EXPECT_NE(trajectory_digest(rollout(sys, 500, seeds)),
            trajectory_digest(rollout(sys, 500, RolloutSeeds::from_root({43, 0}))));
}

TEST(Rollout, StrictCausality) {
  // Changing x(t) cannot affect any medium input or reproduction at times <= t.
  const auto sys = relay_chain(0.2);
  const auto seeds = RolloutSeeds::from_root({5, 0});
  const auto base = rollout(sys, 100, seeds);
  for (const std::size_t t : {0UL, 10UL, 57UL}) {
    const Symbol flipped = 1 - base.pair({0, 2}).source[t];
    const SourcePerturbation change{{0, 2}, t, flipped};
    const auto moved = rollout(sys, 100, seeds, std::span(&change, 1));
    for (std::size_t u = 0; u < 3; ++u) {
      for (std::size_t tau = 0; tau <= t; ++tau) {
        EXPECT_EQ(base.medium_inputs[u][tau], moved.medium_inputs[u][tau]) << "user " << u << " t " << t;
        EXPECT_EQ(base.medium_outputs[u][tau], moved.medium_outputs[u][tau]);
      }
    }
    for (std::size_t tau = 0; tau <= t; ++tau) {
      EXPECT_EQ(base.pair({0, 2}).reproduction[tau], moved.pair({0, 2}).reproduction[tau]);
    }
  }
}

TEST(Rollout, FlipArrivesExactlyLatencyStepsLater) {
  const auto sys = relay_chain(0.0);
  const auto seeds = RolloutSeeds::from_root({5, 1});
  const auto base = rollout(sys, 100, seeds);
  for (const std::size_t t : {0UL, 10UL, 57UL}) {
    const SourcePerturbation change{{0, 2}, t, static_cast<Symbol>(1 - base.pair({0, 2}).source[t])};
    const auto moved = rollout(sys, 100, seeds, std::span(&change, 1));
    for (std::size_t tau = 0; tau < 100; ++tau) {
      EXPECT_EQ(base.pair({0, 2}).reproduction[tau] != moved.pair({0, 2}).reproduction[tau], tau == t + 5) << tau;
    }
  }
}

TEST(Rollout, SourceStreamsIgnoreTheMedium) {
  const auto seeds = RolloutSeeds::from_root({6, 0});
  const auto a = rollout(single_link(0.0), 300, seeds);
  const auto b = rollout(single_link(0.3), 300, seeds);
  EXPECT_EQ(a.pair({0, 1}).source, b.pair({0, 1}).source);
}

TEST(Medium, BscFlipFrequency) {
  const auto traj = rollout(single_link(0.11), 200000, RolloutSeeds::from_root({7, 0}));
  EXPECT_NEAR(flip_rate(traj.pair({0, 1}), 0), 0.11, 0.003);
}

TEST(Medium, GilbertElliottStationaryFlipRate) {
  // Symmetric switching: stationary (1/2, 1/2), so 0.5 * 0.01 + 0.5 * 0.3.
  auto medium = make_markov_medium(2, 2, {gilbert_elliott_rule({0, 1}, 0.01, 0.3, 0.1, 0.1)});
  UncodedModemConfig tx;
  tx.send_to = 1;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 0}};
  const NetworkSystem sys(medium, {make_uncoded_modem(tx), make_uncoded_modem(rx)},
                          {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {0, 1}, 16);
  double total = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    total += flip_rate(rollout(sys, 40000, RolloutSeeds::from_root({s, 9})).pair({0, 1}), 100);
  }
  EXPECT_NEAR(total / 10, 0.155, 0.006);
}

TEST(Medium, AbsorbingBadStateFlipsAtBadRate) {
  auto medium = make_markov_medium(2, 2, {gilbert_elliott_rule({0, 1}, 0.01, 0.3, 0.1, 0.0, Symbol{1})});
  UncodedModemConfig tx;
  tx.send_to = 1;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 0}};
  const NetworkSystem sys(medium, {make_uncoded_modem(tx), make_uncoded_modem(rx)},
                          {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {0, 1}, 16);
  EXPECT_NEAR(flip_rate(rollout(sys, 100000, RolloutSeeds::from_root({3, 3})).pair({0, 1}), 0), 0.3, 0.006);
}

TEST(Medium, InterferenceAveragesOverTheInterferer) {
  std::vector<LinkLaw> links(2);
  links[0].link = {0, 1};
  links[0].emissions = {{StochasticMatrix::binary_symmetric(0.11)}};
  links[1].link = {2, 3};
  links[1].interferer = 0;
  links[1].emissions = {{StochasticMatrix::binary_symmetric(0.06), StochasticMatrix::binary_symmetric(0.16)}};
  UncodedModemConfig s0;
  s0.send_to = 1;
  UncodedModemConfig r1;
  r1.deliveries = {{0, 0}};
  UncodedModemConfig s2;
  s2.send_to = 3;
  UncodedModemConfig r3;
  r3.deliveries = {{2, 2}};
  const NetworkSystem sys(make_link_medium(4, std::move(links)),
                          {make_uncoded_modem(s0), make_uncoded_modem(r1), make_uncoded_modem(s2),
                           make_uncoded_modem(r3)},
                          {PairSpec({0, 1}, Pmf::uniform(2), 3), PairSpec({2, 3}, Pmf::uniform(2), 3)}, {0, 1}, 16);
  const auto traj = rollout(sys, 200000, RolloutSeeds::from_root({4, 4}));
  EXPECT_NEAR(flip_rate(traj.pair({2, 3}), 0), 0.11, 0.003);
  // Conditional on the interferer's symbol.
  const auto& trace = traj.pair({2, 3});
  double flips[2] = {0, 0};
  double counts[2] = {0, 0};
  for (std::size_t m = 0; m + 3 < traj.horizon; ++m) {
    // x(m) reaches the medium at step m + 2 together with iota_0(m + 1) = x_{0,1}(m).
    const Symbol i0 = traj.medium_inputs[0][m + 1];
    counts[i0] += 1;
    flips[i0] += trace.source[m] != trace.reproduction[m + 3];
  }
  EXPECT_NEAR(flips[0] / counts[0], 0.06, 0.004);
  EXPECT_NEAR(flips[1] / counts[1], 0.16, 0.005);
}

TEST(Guarantee, MatchesBinomialTail) {
  const std::size_t n = 200;
  const auto sys = single_link(0.11, n);
  const auto g = baseline_guarantee(sys, DistortionBudget(0.125, DistortionMetric::hamming(2)), 4000, {11, 0});
  const double exact = binomial_upper_tail(200, 0.11, 25);
  EXPECT_NEAR(g.excess.estimate, exact, 4 * std::sqrt(exact * (1 - exact) / 4000));
  EXPECT_NEAR(g.mean_distortion, 0.11, 0.002);
  EXPECT_EQ(g.block_length, n);
}

TEST(Guarantee, NoiselessIsPerfect) {
  const auto g =
      baseline_guarantee(single_link(0.0, 64), DistortionBudget(0.0, DistortionMetric::hamming(2)), 200, {1, 1});
  EXPECT_EQ(g.excess.successes, 0U);
}

TEST(Guarantee, NeedsEnoughTrials) {
  EXPECT_THROW((void)baseline_guarantee(single_link(0.1), DistortionBudget(0.1, DistortionMetric::hamming(2)), 10,
                                        {1, 1}),
               ValidationError);
}

TEST(Blocks, WarmupMovesTheFirstBlock) {
  const auto sys = single_link(0.0).with_horizon(0);
  const NetworkSystem warm(sys.medium(), sys.modems(), {sys.pairs().begin(), sys.pairs().end()}, {0, 1}, 16, 0, 20);
  EXPECT_EQ(warm.first_block_start(16), 32U);
  EXPECT_EQ(sys.first_block_start(16), 0U);
}

TEST(Validation, CatchesWiringErrors) {
  const auto sys = single_link(0.1);
  EXPECT_NO_THROW(sys.validate());
  EXPECT_THROW(NetworkSystem(sys.medium(), {sys.modem(0)}, {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {0, 1}, 16)
                   .validate(),
               ValidationError);
  EXPECT_THROW(NetworkSystem(sys.medium(), sys.modems(), {PairSpec({0, 1}, Pmf::uniform(3), 3)}, {0, 1}, 16)
                   .validate(),
               ValidationError);
  EXPECT_THROW(NetworkSystem(sys.medium(), sys.modems(), {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {1, 0}, 16)
                   .validate(),
               ValidationError);
}

TEST(Validation, ModemCannotBothSendAndRelay) {
  UncodedModemConfig both;
  both.send_to = 1;
  both.forward_from = 2;
  EXPECT_THROW((void)make_uncoded_modem(both), ValidationError);
}
