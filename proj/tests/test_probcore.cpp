#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "sepnet/error.hpp"
#include "sepnet/probcore.hpp"

using namespace sepnet;

TEST(Pmf, RejectsNegativeAndUnnormalized) {
  EXPECT_THROW(Pmf({0.5, -0.1, 0.6}), ValidationError);
  EXPECT_THROW(Pmf({0.5, 0.4}), ValidationError);
  EXPECT_THROW(Pmf(std::vector<double>{}), ValidationError);
  EXPECT_THROW(Pmf({0.5, std::nan("")}), ValidationError);
}

TEST(Pmf, RenormalizesTinyDrift) {
  const Pmf p({0.5 + 4e-10, 0.5});
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
}

TEST(Pmf, PointMassAlwaysDrawsItsSymbol) {
  const Pmf p = Pmf::point_mass(4, 2);
  const Sequence s = sample_iid(p, 500, {5, 0});
  for (const Symbol v : s.values()) EXPECT_EQ(v, 2U);
}

TEST(Pmf, EntropyOfUniform) {
  EXPECT_NEAR(Pmf::uniform(8).entropy_bits(), 3.0, 1e-12);
  EXPECT_NEAR(Pmf({0.25, 0.75}).entropy_bits(), 0.8112781244591328, 1e-12);
}

TEST(Sampling, SameHandleSameStream) {
  const Pmf p({0.2, 0.3, 0.5});
  EXPECT_EQ(sample_iid(p, 1000, {9, 1}), sample_iid(p, 1000, {9, 1}));
  EXPECT_NE(sample_iid(p, 1000, {9, 1}), sample_iid(p, 1000, {9, 2}));
  EXPECT_NE(sample_iid(p, 1000, {9, 1}), sample_iid(p, 1000, {10, 1}));
}

TEST(Sampling, DerivedStreamsDiffer) {
  const RandomnessHandle h{1, 0};
  EXPECT_NE(h.derive(1), h.derive(2));
  EXPECT_NE(h.derive("a"), h.derive("b"));
  EXPECT_EQ(h.derive(StreamTag::medium), h.derive(std::uint64_t{2}));
}

TEST(Sampling, PrefixStable) {
  const Pmf p({0.1, 0.9});
  const Sequence a = sample_iid(p, 100, {3, 3});
  const Sequence b = sample_iid(p, 1000, {3, 3});
  EXPECT_EQ(a, b.slice(0, 100));
}

TEST(Sampling, RandomPmfsAreReproducedEmpirically) {
  Rng gen({2024, 0});
  for (int trial = 0; trial < 20; ++trial) {
    const Pmf p = testgen::random_pmf(gen, 2 + gen.below(5));
    const Sequence s = sample_iid(p, 200000, {static_cast<std::uint64_t>(trial), 7});
    EXPECT_LT(tv_distance(empirical_pmf(s), p), 0.01) << "trial " << trial;
  }
}

TEST(Rng, PlugsIntoStandardDistributions) {
  Rng rng({1, 1});
  std::uniform_int_distribution<int> die(1, 6);
  std::vector<int> counts(7, 0);
  for (int k = 0; k < 60000; ++k) ++counts[die(rng)];
  for (int face = 1; face <= 6; ++face) EXPECT_NEAR(counts[face], 10000, 500);
}

TEST(Rng, BelowStaysInRange) {
  Rng rng({4, 4});
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 1000ULL, (1ULL << 63) + 5}) {
    for (int k = 0; k < 1000; ++k) EXPECT_LT(rng.below(bound), bound);
  }
}

TEST(Sequence, RejectsForeignSymbols) {
  Sequence s(Alphabet(2));
  s.push_back(1);
  EXPECT_THROW(s.push_back(2), ValidationError);
  EXPECT_THROW(Sequence(Alphabet(2), {0, 3}), ValidationError);
}

TEST(TvDistance, HandComputed) {
  EXPECT_NEAR(tv_distance(Pmf({0.5, 0.5}), Pmf({0.2, 0.8})), 0.3, 1e-15);
  EXPECT_NEAR(tv_distance(Pmf({1.0, 0.0, 0.0}), Pmf({0.0, 0.5, 0.5})), 1.0, 1e-15);
  EXPECT_THROW((void)tv_distance(Pmf::uniform(2), Pmf::uniform(3)), AlphabetMismatch);
}

TEST(ChiSquare, SurvivalMatchesClosedForms) {
  // df = 2: exp(-x/2); df = 1 at the 5% critical value.
  for (const double x : {0.1, 1.0, 4.0, 13.0}) EXPECT_NEAR(chi_square_sf(x, 2), std::exp(-x / 2), 1e-12);
  EXPECT_NEAR(chi_square_sf(3.841458820694124, 1), 0.05, 1e-10);
  EXPECT_NEAR(chi_square_sf(6.634896601021214, 1), 0.01, 1e-10);
  // df = 4: exp(-x/2)(1 + x/2)
  for (const double x : {0.5, 3.0, 9.0}) EXPECT_NEAR(chi_square_sf(x, 4), std::exp(-x / 2) * (1 + x / 2), 1e-12);
}

TEST(ChiSquare, HomogeneityOfIdenticalTablesIsPerfect) {
  const std::vector<std::uint64_t> a{10, 20, 30};
  const auto r = homogeneity_test(a, a);
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  EXPECT_EQ(r.degrees_of_freedom, 2U);
}

TEST(ChiSquare, HomogeneityHandComputed) {
  // 2x2 table [[30, 70], [50, 50]]: expected 40/60 per row, X^2 = 8.333...
  const std::vector<std::uint64_t> a{30, 70};
  const std::vector<std::uint64_t> b{50, 50};
  const auto r = homogeneity_test(a, b);
  EXPECT_NEAR(r.statistic, 100.0 / 40 + 100.0 / 60 + 100.0 / 40 + 100.0 / 60, 1e-9);
  EXPECT_EQ(r.degrees_of_freedom, 1U);
}

TEST(ChiSquare, EmptyColumnsAreDropped) {
  const std::vector<std::uint64_t> a{10, 0, 10};
  const std::vector<std::uint64_t> b{12, 0, 8};
  EXPECT_EQ(homogeneity_test(a, b).degrees_of_freedom, 1U);
}

TEST(ChiSquare, GoodnessOfFitHandComputed) {
  const std::vector<std::uint64_t> counts{40, 60};
  const auto r = goodness_of_fit(counts, Pmf::uniform(2));
  EXPECT_NEAR(r.statistic, 4.0, 1e-12);
  EXPECT_NEAR(r.p_value, chi_square_sf(4.0, 1), 1e-15);
}

TEST(ChiSquare, ImpossibleCellFailsFit) {
  const std::vector<std::uint64_t> counts{5, 1};
  EXPECT_EQ(goodness_of_fit(counts, Pmf::point_mass(2, 0)).p_value, 0.0);
}

TEST(KGrams, NonOverlappingPairs) {
  const Sequence s(Alphabet(2), {0, 1, 1, 1, 1, 0, 0});
  const auto c2 = kgram_counts(s, 2);
  ASSERT_EQ(c2.size(), 4U);
  EXPECT_EQ(c2[0b01], 1U);  // (0,1)
  EXPECT_EQ(c2[0b11], 1U);  // (1,1)
  EXPECT_EQ(c2[0b10], 1U);  // (1,0)
  EXPECT_EQ(c2[0b00], 0U);  // trailing symbol dropped
  const auto c1 = kgram_counts(s, 1);
  EXPECT_EQ(c1[0], 3U);
  EXPECT_EQ(c1[1], 4U);
}

TEST(TwoSample, CalibratedUnderTheNull) {
  int accepted1 = 0;
  int accepted2 = 0;
  const Pmf p({0.3, 0.7});
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const Sequence a = sample_iid(p, 5000, {rep, 1});
    const Sequence b = sample_iid(p, 5000, {rep, 2});
    accepted1 += two_sample_test(a, b, 1).p_value > 0.05;
    accepted2 += two_sample_test(a, b, 2).p_value > 0.05;
  }
  // Binomial(200, 0.95): 190 +- 3.1
  EXPECT_GE(accepted1, 178);
  EXPECT_GE(accepted2, 178);
}

TEST(TwoSample, DetectsShiftedLaw) {
  const Sequence a = sample_iid(Pmf({0.5, 0.5}), 20000, {1, 1});
  const Sequence b = sample_iid(Pmf({0.47, 0.53}), 20000, {1, 2});
  EXPECT_LT(two_sample_test(a, b, 1).p_value, 1e-4);
}

TEST(TwoSample, Order2SeesDependenceOrder1Misses) {
  // b alternates in pairs (x, 1-x): same marginal, different pair law.
  Rng rng({8, 8});
  Sequence b(Alphabet(2));
  for (int k = 0; k < 10000; ++k) {
    const Symbol x = static_cast<Symbol>(rng.below(2));
    b.push_back(x);
    b.push_back(1 - x);
  }
  const Sequence a = sample_iid(Pmf::uniform(2), 20000, {8, 9});
  EXPECT_GT(two_sample_test(a, b, 1).p_value, 1e-3);
  EXPECT_LT(two_sample_test(a, b, 2).p_value, 1e-10);
}

TEST(JointSequence, EncodesPairs) {
  const Sequence x(Alphabet(2), {0, 1, 1});
  const Sequence y(Alphabet(3), {2, 0, 1});
  const Sequence j = joint_sequence(x, y);
  EXPECT_EQ(j.alphabet().size(), 6U);
  EXPECT_EQ(std::vector<Symbol>(j.values().begin(), j.values().end()), (std::vector<Symbol>{2, 3, 4}));
}

TEST(Wilson, MatchesScoreIntervalFormula) {
  // Independent evaluation of the score interval roots.
  auto roots = [](double k, double n) {
    const double z = 1.959963984540054;
    const double a = n + z * z;
    const double b = -(2 * k + z * z);
    const double c = k * k / n;
    const double disc = std::sqrt(b * b - 4 * a * c);
    return std::pair{(-b - disc) / (2 * a), (-b + disc) / (2 * a)};
  };
  for (const auto& [k, n] : std::vector<std::pair<int, int>>{{0, 10}, {3, 10}, {50, 100}, {999, 1000}, {7, 7}}) {
    const auto p = wilson_interval(k, n);
    const auto [lo, hi] = roots(k, n);
    EXPECT_NEAR(p.lower(), lo, 1e-12) << k << "/" << n;
    EXPECT_NEAR(p.upper(), hi, 1e-12) << k << "/" << n;
    EXPECT_DOUBLE_EQ(p.estimate, static_cast<double>(k) / n);
  }
  EXPECT_EQ(wilson_interval(0, 50).lower(), 0.0);
  EXPECT_EQ(wilson_interval(50, 50).upper(), 1.0);
  EXPECT_THROW((void)wilson_interval(1, 0), ValidationError);
  EXPECT_THROW((void)wilson_interval(3, 2), ValidationError);
}

TEST(StochasticMatrix, BinarySymmetric) {
  const auto m = StochasticMatrix::binary_symmetric(0.11);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.11);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.89);
  EXPECT_THROW(StochasticMatrix({{0.5, 0.5}, {0.2}}), ValidationError);
}

TEST(StochasticMatrix, RandomRowsSampleTheirLaw) {
  Rng gen({77, 0});
  const auto m = testgen::random_matrix(gen, 3, 4);
  Rng rng({77, 1});
  for (Symbol x = 0; x < 3; ++x) {
    std::vector<std::uint64_t> counts(4, 0);
    for (int k = 0; k < 40000; ++k) ++counts[m.draw(x, rng)];
    EXPECT_GT(goodness_of_fit(counts, m.row(x)).p_value, 1e-4);
  }
}
