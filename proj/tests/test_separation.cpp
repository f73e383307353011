#include <gtest/gtest.h>

#include <cmath>

#include "sepnet/error.hpp"
#include "sepnet/separation.hpp"

using namespace sepnet;

namespace {

const DistortionMetric kHamming = DistortionMetric::hamming(2);

NetworkSystem single_link(double flip, std::size_t n) {
  auto medium = make_dmc_medium(2, {{UserPair{0, 1}, StochasticMatrix::binary_symmetric(flip)}});
  UncodedModemConfig tx;
  tx.send_to = 1;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 0}};
  return NetworkSystem(medium, {make_uncoded_modem(tx), make_uncoded_modem(rx)},
                       {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {0, 1}, n);
}

NetworkSystem two_pairs(std::size_t n) {
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
  return NetworkSystem(make_link_medium(4, std::move(links)),
                       {make_uncoded_modem(s0), make_uncoded_modem(r1), make_uncoded_modem(s2), make_uncoded_modem(r3)},
                       {PairSpec({0, 1}, Pmf::uniform(2), 3), PairSpec({2, 3}, Pmf::uniform(2), 3)}, {0, 1}, n);
}

SeparationPlan make_plan(const NetworkSystem& sys, UserPair p, double D, double Dp, std::size_t n,
                         const RandomnessHandle& seed, std::optional<Pmf> override_law = std::nullopt) {
  const auto g = baseline_guarantee(sys.with_block_length(n), DistortionBudget(D, kHamming), 200, seed.derive(1), p);
  SeparationOptions opt;
  opt.block_length = n;
  opt.channel_pmf_override = std::move(override_law);
  return plan_separation(sys, g, PairTarget(p, kHamming, D, Dp), opt, pair_codebook_seed(seed, p));
}

}  // namespace

TEST(Plan, RatesAndLatency) {
  const auto sys = single_link(0.11, 32);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {1, 0});
  EXPECT_EQ(plan.block_length(), 32U);
  EXPECT_EQ(plan.inner_latency, 3U);
  EXPECT_EQ(plan.outer_latency, 2 * 32 + 3U);
  EXPECT_NEAR(plan.rates.rate_D, 0.456436, 1e-5);
  EXPECT_NEAR(plan.rates.rate_D_prime, 0.278072, 1e-5);
  EXPECT_EQ(plan.channel_codebook->cardinality(), 5469U);
  EXPECT_EQ(plan.source_codebook->cardinality(), 4167U);
  EXPECT_EQ(plan.channel_codebook->spec().gen_pmf, Pmf::uniform(2));
  EXPECT_EQ(plan.channel_codebook->spec().seed, pair_codebook_seed({1, 0}, {0, 1}).derive("channel"));
}

TEST(Plan, RequiresStrictRateGap) {
  const auto sys = single_link(0.11, 32);
  EXPECT_THROW((void)make_plan(sys, {0, 1}, 0.125, 0.125, 32, {1, 0}), PlanInfeasible);
  EXPECT_THROW((void)make_plan(sys, {0, 1}, 0.2, 0.125, 32, {1, 0}), PlanInfeasible);
}

TEST(Plan, GuaranteeMustMatchTheTarget) {
  const auto sys = single_link(0.11, 32);
  const auto g = baseline_guarantee(sys, DistortionBudget(0.1, kHamming), 100, {1, 1});
  EXPECT_THROW((void)plan_separation(sys, g, PairTarget({0, 1}, kHamming, 0.125, 0.2), {}, {1, 2}), ValidationError);
}

TEST(Plan, CodebookCapIsReported) {
  const auto sys = single_link(0.11, 64);
  const auto g = baseline_guarantee(sys, DistortionBudget(0.125, kHamming), 100, {1, 1});
  SeparationOptions opt;
  opt.block_length = 64;
  EXPECT_THROW((void)plan_separation(sys, g, PairTarget({0, 1}, kHamming, 0.125, 0.2), opt, {1, 2}),
               CodebookTooLarge);
}

TEST(Apply, OnlyTheTwoModemsChange) {
  const auto sys = two_pairs(16);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 16, {2, 0});
  const auto after = apply_separation(sys, plan);
  EXPECT_EQ(after.modem(0), plan.sender);
  EXPECT_EQ(after.modem(1), plan.receiver);
  EXPECT_EQ(after.modem(2), sys.modem(2));
  EXPECT_EQ(after.modem(3), sys.modem(3));
  EXPECT_EQ(after.medium(), sys.medium());
  EXPECT_EQ(after.pair({0, 1}).latency, plan.outer_latency);
  EXPECT_EQ(after.pair({2, 3}).latency, 3U);
  // A plan is bound to the modems it was made for.
  EXPECT_THROW((void)apply_separation(after, plan), ValidationError);
}

TEST(EndToEnd, NoiselessSystemOnlySuffersSourceOvershoot) {
  const auto sys = single_link(0.0, 24);
  const auto plan = make_plan(sys, {0, 1}, 0.05, 0.25, 24, {3, 0});
  const auto after = apply_separation(sys, plan);
  const auto r = measure_end_to_end(after, {0, 1}, DistortionBudget(0.25, kHamming), 1000, {3, 1}, &plan);
  ASSERT_TRUE(r.channel_error && r.source_overshoot);
  EXPECT_EQ(r.channel_error->successes, 0U);
  EXPECT_EQ(r.guarantee.excess.successes, r.source_overshoot->successes);
}

TEST(EndToEnd, FailureIsBoundedByChannelPlusSource) {
  const auto sys = single_link(0.11, 32);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {4, 0});
  const auto after = apply_separation(sys, plan);
  const auto r = measure_end_to_end(after, {0, 1}, DistortionBudget(0.2, kHamming), 1000, {4, 1}, &plan);
  // Union bound holds trial by trial.
  EXPECT_LE(r.guarantee.excess.successes, r.channel_error->successes + r.source_overshoot->successes);
}

TEST(SimulatedSource, StreamMatchesTheSourceLawOverCodebookDraws) {
  // Pooled over 20 independently seeded plans. A single fixed codebook is overdispersed
  // because source messages repeat and favor low indices.
  const auto sys = single_link(0.11, 32);
  Sequence pooled(Alphabet(2));
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {5, s});
    const Sequence part = simulated_source_stream(plan, 5000, {5, 100 + s});
    ASSERT_EQ(part.size(), 5000U);
    pooled.append(part);
  }
  EXPECT_GT(goodness_of_fit(pooled, Pmf::uniform(2)).p_value, 0.01);
}

TEST(SimulatedSource, StreamIsMadeOfChannelCodewords) {
  const auto sys = single_link(0.11, 32);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {5, 0});
  const Sequence s = simulated_source_stream(plan, 320, {5, 1});
  // Segment 0 and the segment at the horizon are filler drawn from the source law.
  for (std::size_t b = 1; b < 9; ++b) {
    const Sequence block = s.slice(32 * b, 32);
    bool found = false;
    for (Message m = 0; m < plan.channel_codebook->cardinality() && !found; ++m) {
      found = plan.channel_codebook->row(m) == block;
    }
    EXPECT_TRUE(found) << "block " << b;
  }
}

TEST(BlockChannel, ReproducesTheUncodedLink) {
  const auto sys = single_link(0.0, 24);
  const auto ch = system_block_channel(sys, {0, 1}, 24);
  Rng rng({6, 0});
  const Sequence in = sample_iid(Pmf::uniform(2), 24, {6, 1});
  EXPECT_EQ(ch(in, rng), in);
}

TEST(Noninterference, SeparatingOnePairLeavesTheOtherAlone) {
  const auto sys = two_pairs(32);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {7, 0});
  const auto report = verify_noninterference(sys, apply_separation(sys, plan), {{2, 3}}, 50000, {7, 1});
  ASSERT_EQ(report.pairs.size(), 1U);
  EXPECT_TRUE(report.passed()) << report.pairs[0].min_p_value();
}

TEST(Noninterference, WrongCodebookLawIsCaught) {
  const auto sys = two_pairs(32);
  const auto plan = make_plan(sys, {0, 1}, 0.125, 0.2, 32, {8, 0}, Pmf({0.9, 0.1}));
  const auto report = verify_noninterference(sys, apply_separation(sys, plan), {{2, 3}}, 50000, {8, 1});
  EXPECT_FALSE(report.passed());
  EXPECT_LT(report.pairs[0].joint.p_value, 1e-4);
}

TEST(Degradation, OneSidedZTest) {
  const auto same = wilson_interval(100, 1000);
  EXPECT_NEAR(degradation_p_value(same, same), 0.5, 1e-12);
  EXPECT_LT(degradation_p_value(wilson_interval(100, 1000), wilson_interval(200, 1000)), 1e-6);
  EXPECT_GT(degradation_p_value(wilson_interval(200, 1000), wilson_interval(100, 1000)), 0.999);
}

TEST(Network, EmptyTargetsLeaveTheSystemUnchanged) {
  const auto sys = two_pairs(16);
  const auto out = separate_network(sys, {}, {}, {9, 0});
  const auto seeds = RolloutSeeds::from_root({9, 1});
  EXPECT_TRUE(out.steps.empty());
  EXPECT_EQ(trajectory_digest(rollout(sys, 300, seeds)), trajectory_digest(rollout(out.system, 300, seeds)));
}

TEST(Network, CodebooksDoNotDependOnOrder) {
  const auto sys = two_pairs(16);
  NetworkSeparationOptions opt;
  opt.separation.block_length = 16;
  opt.remeasure = false;
  opt.guarantee_trials = 200;
  const PairTarget a({0, 1}, kHamming, 0.125, 0.2);
  const PairTarget b({2, 3}, kHamming, 0.125, 0.2);
  const auto ab = separate_network(sys, {a, b}, opt, {10, 0});
  const auto ba = separate_network(sys, {b, a}, opt, {10, 0});
  EXPECT_TRUE(*ab.steps[0].plan.channel_codebook == *ba.steps[1].plan.channel_codebook);
  EXPECT_TRUE(*ab.steps[1].plan.source_codebook == *ba.steps[0].plan.source_codebook);
  for (UserId u = 0; u < 4; ++u) EXPECT_NE(ab.system.modem(u), sys.modem(u));
}

TEST(Network, DuplicateTargetsRejected) {
  const PairTarget a({0, 1}, kHamming, 0.125, 0.2);
  EXPECT_THROW((void)separate_network(two_pairs(16), {a, a}, {}, {1, 1}), ValidationError);
}

TEST(Network, InterferenceAbortsTheStep) {
  NetworkSeparationOptions opt;
  opt.separation.block_length = 32;
  opt.separation.channel_pmf_override = Pmf({0.9, 0.1});
  opt.guarantee_trials = 200;
  opt.noninterference_samples = 50000;
  EXPECT_THROW((void)separate_network(two_pairs(32), {PairTarget({0, 1}, kHamming, 0.125, 0.2)}, opt, {11, 0}),
               InterferenceDetected);
}
