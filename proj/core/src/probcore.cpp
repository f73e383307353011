#include "sepnet/probcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "sepnet/error.hpp"

namespace sepnet {

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size == 0) throw ValidationError("alphabet size must be at least 1");
}

Pmf::Pmf(std::vector<double> probs) : alphabet_(probs.size()), probs_(std::move(probs)) {
  double sum = 0.0;
  for (const double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("pmf entries must be finite and nonnegative");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw ValidationError("pmf sums to " + std::to_string(sum) + ", expected 1");
  }
  if (sum != 1.0) {
    for (double& p : probs_) p /= sum;
  }
  cdf_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
  cdf_.back() = 1.0;
}

Pmf Pmf::uniform(std::size_t size) {
  if (size == 0) throw ValidationError("alphabet size must be at least 1");
  return Pmf(std::vector<double>(size, 1.0 / static_cast<double>(size)));
}

Pmf Pmf::point_mass(std::size_t size, Symbol at) {
  std::vector<double> probs(size, 0.0);
  probs.at(at) = 1.0;
  return Pmf(std::move(probs));
}

Symbol Pmf::draw(Rng& rng) const noexcept {
  const double u = rng.uniform();
  if (cdf_.size() == 2) return u < cdf_[0] ? 0U : 1U;
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = static_cast<Symbol>(std::min<std::ptrdiff_t>(
      it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
  return idx;
}

double Pmf::entropy_bits() const noexcept {
  double h = 0.0;
  for (const double p : probs_) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

Sequence::Sequence(Alphabet alphabet, std::vector<Symbol> values)
    : alphabet_(alphabet), values_(std::move(values)) {
  for (const Symbol s : values_) {
    if (!alphabet_.contains(s)) {
      throw ValidationError("symbol " + std::to_string(s) + " outside alphabet of size " +
                            std::to_string(alphabet_.size()));
    }
  }
}

void Sequence::push_back(Symbol s) {
  if (!alphabet_.contains(s)) {
    throw ValidationError("symbol " + std::to_string(s) + " outside alphabet");
  }
  values_.push_back(s);
}

void Sequence::append(const Sequence& other) {
  if (!(other.alphabet_ == alphabet_)) throw AlphabetMismatch("cannot append across alphabets");
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

Sequence Sequence::slice(std::size_t offset, std::size_t length) const {
  if (offset + length > values_.size()) throw ValidationError("slice out of range");
  Sequence out(alphabet_);
  out.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(offset),
                     values_.begin() + static_cast<std::ptrdiff_t>(offset + length));
  return out;
}

StochasticMatrix::StochasticMatrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("stochastic matrix needs at least one row");
  outputs_ = rows.front().size();
  rows_.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != outputs_) throw ValidationError("stochastic matrix rows differ in length");
    rows_.emplace_back(r);
  }
}

StochasticMatrix StochasticMatrix::identity(std::size_t size) {
  std::vector<std::vector<double>> rows(size, std::vector<double>(size, 0.0));
  for (std::size_t k = 0; k < size; ++k) rows[k][k] = 1.0;
  return StochasticMatrix(rows);
}

StochasticMatrix StochasticMatrix::binary_symmetric(double crossover) {
  if (!(crossover >= 0.0 && crossover <= 1.0)) {
    throw ValidationError("crossover probability must lie in [0, 1]");
  }
  return StochasticMatrix({{1.0 - crossover, crossover}, {crossover, 1.0 - crossover}});
}

Sequence sample_iid(const Pmf& pmf, std::size_t n, const RandomnessHandle& handle) {
  if (n == 0) throw ValidationError("sample length must be at least 1");
  Rng rng(handle);
  std::vector<Symbol> values(n);
  for (auto& v : values) v = pmf.draw(rng);
  return Sequence(pmf.alphabet(), std::move(values));
}

std::vector<std::uint64_t> symbol_counts(const Sequence& seq) {
  std::vector<std::uint64_t> counts(seq.alphabet().size(), 0);
  for (const Symbol s : seq.values()) ++counts[s];
  return counts;
}

Pmf empirical_pmf(const Sequence& seq) {
  if (seq.empty()) throw ValidationError("empirical pmf of an empty sequence");
  const auto counts = symbol_counts(seq);
  std::vector<double> probs(counts.size());
  const auto n = static_cast<double>(seq.size());
  std::transform(counts.begin(), counts.end(), probs.begin(),
                 [n](std::uint64_t c) { return static_cast<double>(c) / n; });
  return Pmf(std::move(probs));
}

double tv_distance(const Pmf& p, const Pmf& q) {
  if (!(p.alphabet() == q.alphabet())) {
    throw AlphabetMismatch("tv_distance: distributions live on different alphabets");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) sum += std::abs(p.probs()[k] - q.probs()[k]);
  return 0.5 * sum;
}

double chi_square_sf(double statistic, std::size_t degrees_of_freedom) {
  if (degrees_of_freedom == 0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(degrees_of_freedom), 0.5 * statistic);
}

TestReport homogeneity_test(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  if (a.size() != b.size()) throw AlphabetMismatch("homogeneity test: tables differ in width");
  const double total_a = static_cast<double>(std::accumulate(a.begin(), a.end(), std::uint64_t{0}));
  const double total_b = static_cast<double>(std::accumulate(b.begin(), b.end(), std::uint64_t{0}));
  TestReport report;
  if (total_a == 0.0 || total_b == 0.0) return report;
  const double total = total_a + total_b;

  std::size_t columns = 0;
  std::size_t low_cells = 0;
  double stat = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double col = static_cast<double>(a[k] + b[k]);
    if (col == 0.0) continue;
    ++columns;
    const double ea = col * total_a / total;
    const double eb = col * total_b / total;
    if (ea < 5.0) ++low_cells;
    if (eb < 5.0) ++low_cells;
    const double da = static_cast<double>(a[k]) - ea;
    const double db = static_cast<double>(b[k]) - eb;
    stat += da * da / ea + db * db / eb;
  }
  report.statistic = stat;
  report.degrees_of_freedom = columns > 0 ? columns - 1 : 0;
  report.p_value = chi_square_sf(stat, report.degrees_of_freedom);
  report.unreliable = columns > 0 && 5 * low_cells > 2 * columns;  // > 20% of 2*columns cells
  return report;
}

TestReport goodness_of_fit(std::span<const std::uint64_t> counts, const Pmf& pmf) {
  if (counts.size() != pmf.size()) throw AlphabetMismatch("goodness_of_fit: width mismatch");
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  TestReport report;
  if (n == 0.0) return report;
  std::size_t cells = 0;
  std::size_t low_cells = 0;
  double stat = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = n * pmf.probs()[k];
    if (expected == 0.0) {
      if (counts[k] != 0) {
        report.statistic = std::numeric_limits<double>::infinity();
        report.p_value = 0.0;
        return report;
      }
      continue;
    }
    ++cells;
    if (expected < 5.0) ++low_cells;
    const double d = static_cast<double>(counts[k]) - expected;
    stat += d * d / expected;
  }
  report.statistic = stat;
  report.degrees_of_freedom = cells > 0 ? cells - 1 : 0;
  report.p_value = chi_square_sf(stat, report.degrees_of_freedom);
  report.unreliable = cells > 0 && 5 * low_cells > cells;
  return report;
}

TestReport goodness_of_fit(const Sequence& seq, const Pmf& pmf) {
  if (!(seq.alphabet() == pmf.alphabet())) throw AlphabetMismatch("goodness_of_fit: alphabet mismatch");
  const auto counts = symbol_counts(seq);
  return goodness_of_fit(counts, pmf);
}

std::vector<std::uint64_t> kgram_counts(const Sequence& seq, int order) {
  if (order != 1 && order != 2) throw ValidationError("k-gram order must be 1 or 2");
  const std::size_t k = seq.alphabet().size();
  if (order == 1) return symbol_counts(seq);
  std::vector<std::uint64_t> counts(k * k, 0);
  const auto v = seq.values();
  for (std::size_t i = 0; i + 1 < v.size(); i += 2) ++counts[v[i] * k + v[i + 1]];
  return counts;
}

TestReport two_sample_test(const Sequence& a, const Sequence& b, int order) {
  if (!(a.alphabet() == b.alphabet())) {
    throw AlphabetMismatch("two_sample_test: sequences live on different alphabets");
  }
  const auto ca = kgram_counts(a, order);
  const auto cb = kgram_counts(b, order);
  return homogeneity_test(ca, cb);
}

Sequence joint_sequence(const Sequence& x, const Sequence& y) {
  if (x.size() != y.size()) throw ValidationError("joint_sequence: length mismatch");
  const std::size_t ky = y.alphabet().size();
  std::vector<Symbol> values(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    values[k] = static_cast<Symbol>(x[k] * ky + y[k]);
  }
  return Sequence(Alphabet(x.alphabet().size() * ky), std::move(values));
}

// The Wilson bounds are exactly 0 and 1 at the extremes; rounding leaves dust.
double Proportion::lower() const noexcept { return successes == 0 ? 0.0 : std::max(0.0, center - half_width); }
double Proportion::upper() const noexcept {
  return successes == trials ? 1.0 : std::min(1.0, center + half_width);
}

Proportion wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) throw ValidationError("proportion over zero trials");
  if (successes > trials) throw ValidationError("more successes than trials");
  Proportion out;
  out.successes = successes;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  out.estimate = p;
  out.center = (p + z2 / (2.0 * n)) / denom;
  out.half_width = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return out;
}

}  // namespace sepnet
