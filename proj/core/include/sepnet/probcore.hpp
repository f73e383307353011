#pragma once

// Finite-alphabet probability primitives: distributions, seeded sampling,
// empirical statistics and chi-square tests.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sepnet/rng.hpp"

namespace sepnet {

using Symbol = std::uint32_t;

/// Symbols are the indices 0..size-1.
class Alphabet {
 public:
  explicit Alphabet(std::size_t size);

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] bool contains(Symbol s) const noexcept { return s < size_; }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::size_t size_;
};

inline constexpr double kPmfTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

class Pmf {
 public:
  /// Validates and, if the sum is within 1e-9 of one, renormalizes.
  /// Throws ValidationError otherwise.
  explicit Pmf(std::vector<double> probs);

  static Pmf uniform(std::size_t size);
  static Pmf point_mass(std::size_t size, Symbol at);

  [[nodiscard]] const Alphabet& alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }
  [[nodiscard]] double operator[](Symbol s) const { return probs_.at(s); }

  /// Inverse-CDF draw; consumes exactly one 64-bit output of rng.
  [[nodiscard]] Symbol draw(Rng& rng) const noexcept;

  [[nodiscard]] double entropy_bits() const noexcept;

  friend bool operator==(const Pmf& a, const Pmf& b) { return a.probs_ == b.probs_; }

 private:
  Alphabet alphabet_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

class Sequence {
 public:
  explicit Sequence(Alphabet alphabet) : alphabet_(alphabet) {}
  Sequence(Alphabet alphabet, std::vector<Symbol> values);

  [[nodiscard]] const Alphabet& alphabet() const noexcept { return alphabet_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
  [[nodiscard]] std::span<const Symbol> values() const noexcept { return values_; }
  [[nodiscard]] Symbol operator[](std::size_t k) const { return values_[k]; }

  /// Appends one symbol; throws if it is outside the alphabet.
  void push_back(Symbol s);
  void append(const Sequence& other);
  [[nodiscard]] Sequence slice(std::size_t offset, std::size_t length) const;

  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  Alphabet alphabet_;
  std::vector<Symbol> values_;
};

/// Row-stochastic matrix: row x is the conditional pmf of the output given
/// input x. Rows are validated like Pmf.
class StochasticMatrix {
 public:
  explicit StochasticMatrix(const std::vector<std::vector<double>>& rows);

  static StochasticMatrix identity(std::size_t size);
  /// Binary symmetric channel with the given crossover probability.
  static StochasticMatrix binary_symmetric(double crossover);

  [[nodiscard]] std::size_t inputs() const noexcept { return rows_.size(); }
  [[nodiscard]] std::size_t outputs() const noexcept { return outputs_; }
  [[nodiscard]] const Pmf& row(Symbol x) const { return rows_.at(x); }
  [[nodiscard]] double operator()(Symbol x, Symbol y) const { return rows_.at(x)[y]; }
  [[nodiscard]] Symbol draw(Symbol x, Rng& rng) const noexcept { return rows_[x].draw(rng); }

 private:
  std::vector<Pmf> rows_;
  std::size_t outputs_ = 0;
};

/// n i.i.d. draws from pmf. A pure function of (pmf, n, rng).
Sequence sample_iid(const Pmf& pmf, std::size_t n, const RandomnessHandle& rng);

std::vector<std::uint64_t> symbol_counts(const Sequence& seq);

/// Normalized symbol counts over the sequence's own alphabet.
Pmf empirical_pmf(const Sequence& seq);

/// Half the L1 distance. Throws AlphabetMismatch on differing alphabets.
double tv_distance(const Pmf& p, const Pmf& q);

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
  /// More than 20% of cells have expected count below 5.
  bool unreliable = false;
};

/// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, std::size_t degrees_of_freedom);

/// Pearson homogeneity test on a 2 x K table of counts. Columns that are
/// empty in both rows are dropped before counting degrees of freedom.
TestReport homogeneity_test(std::span<const std::uint64_t> a,
                            std::span<const std::uint64_t> b);

/// Pearson goodness-of-fit of observed counts against pmf. Cells with zero
/// probability must have zero counts (otherwise p_value = 0).
TestReport goodness_of_fit(std::span<const std::uint64_t> counts, const Pmf& pmf);
TestReport goodness_of_fit(const Sequence& seq, const Pmf& pmf);

/// Counts of k-grams taken from non-overlapping windows (order 1: symbols,
/// order 2: consecutive disjoint pairs). Index of a k-gram is mixed radix.
std::vector<std::uint64_t> kgram_counts(const Sequence& seq, int order);

/// Chi-square two-sample homogeneity test on empirical k-gram counts.
/// order is 1 or 2. Throws AlphabetMismatch on differing alphabets.
TestReport two_sample_test(const Sequence& a, const Sequence& b, int order);

/// Pairs (x[k], y[k]) encoded as x*|Y|+y over the product alphabet.
Sequence joint_sequence(const Sequence& x, const Sequence& y);

/// Binomial proportion with a 95% Wilson score interval.
struct Proportion {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double estimate = 0.0;  // successes / trials
  double center = 0.0;    // Wilson center
  double half_width = 0.0;

  [[nodiscard]] double lower() const noexcept;
  [[nodiscard]] double upper() const noexcept;
};

inline constexpr double kZ95 = 1.959963984540054;

Proportion wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

}  // namespace sepnet
