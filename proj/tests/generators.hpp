#pragma once

// Small random-object generators for property tests.

#include <cstddef>
#include <vector>

#include "sepnet/probcore.hpp"
#include "sepnet/ratedist.hpp"
#include "sepnet/rng.hpp"

namespace sepnet::testgen {

inline Pmf random_pmf(Rng& rng, std::size_t size, double floor = 0.0) {
  std::vector<double> p(size);
  double total = 0.0;
  for (auto& v : p) {
    v = floor + rng.uniform();
    total += v;
  }
  for (auto& v : p) v /= total;
  return Pmf(p);
}

inline StochasticMatrix random_matrix(Rng& rng, std::size_t inputs, std::size_t outputs) {
  std::vector<std::vector<double>> rows;
  for (std::size_t x = 0; x < inputs; ++x) {
    const Pmf row = random_pmf(rng, outputs, 0.05);
    rows.emplace_back(row.probs().begin(), row.probs().end());
  }
  return StochasticMatrix(rows);
}

inline DistortionMetric random_metric(Rng& rng, std::size_t xs, std::size_t ys) {
  std::vector<std::vector<double>> t(xs, std::vector<double>(ys));
  for (auto& row : t) {
    for (auto& v : row) v = static_cast<double>(rng.below(4));
  }
  return DistortionMetric(Alphabet(xs), Alphabet(ys), t);
}

inline Sequence random_sequence(Rng& rng, std::size_t alphabet, std::size_t length) {
  std::vector<Symbol> v(length);
  for (auto& s : v) s = static_cast<Symbol>(rng.below(alphabet));
  return Sequence(Alphabet(alphabet), v);
}

}  // namespace sepnet::testgen
