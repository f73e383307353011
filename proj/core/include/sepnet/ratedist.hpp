#pragma once

// Additive distortion accounting and the rate-distortion function.

#include <cstddef>
#include <span>
#include <vector>

#include "sepnet/probcore.hpp"

namespace sepnet {

/// Per-letter distortion table d(x, y), all entries finite and >= 0.
class DistortionMetric {
 public:
  DistortionMetric(Alphabet source, Alphabet reproduction, std::vector<std::vector<double>> table);

  static DistortionMetric hamming(std::size_t alphabet_size);

  [[nodiscard]] const Alphabet& source_alphabet() const noexcept { return source_; }
  [[nodiscard]] const Alphabet& repro_alphabet() const noexcept { return repro_; }
  [[nodiscard]] double operator()(Symbol x, Symbol y) const noexcept {
    return table_[x * repro_.size() + y];
  }
  [[nodiscard]] std::span<const double> row(Symbol x) const noexcept {
    return {table_.data() + x * repro_.size(), repro_.size()};
  }
  [[nodiscard]] double max_entry() const noexcept;

  /// D_min = sum_x p(x) min_y d(x,y).
  [[nodiscard]] double min_distortion(const Pmf& source) const;
  /// D_max = min_y sum_x p(x) d(x,y).
  [[nodiscard]] double max_distortion(const Pmf& source) const;

  [[nodiscard]] DistortionMetric scaled(double factor) const;
  [[nodiscard]] DistortionMetric permuted(std::span<const Symbol> source_perm,
                                          std::span<const Symbol> repro_perm) const;

  friend bool operator==(const DistortionMetric&, const DistortionMetric&) = default;

 private:
  Alphabet source_;
  Alphabet repro_;
  std::vector<double> table_;
};

struct DistortionBudget {
  double level = 0.0;
  DistortionMetric metric;

  DistortionBudget(double level, DistortionMetric metric);
};

struct BlockDistortion {
  double total = 0.0;
  double average = 0.0;
};

/// A source block and its reproduction.
struct BlockPair {
  Sequence source;
  Sequence reproduction;
};

BlockDistortion block_distortion(const Sequence& x, const Sequence& y, const DistortionMetric& metric);

/// Fraction of trials whose average distortion is strictly greater than
/// the budget level, with a 95% Wilson interval.
Proportion excess_distortion_prob(std::span<const BlockPair> trials, const DistortionBudget& budget);

/// Same criterion from precomputed per-trial averages.
Proportion excess_distortion_prob(std::span<const double> averages, double level);

/// Mean of the per-trial average distortion.
double expected_distortion(std::span<const BlockPair> trials, const DistortionMetric& metric);

struct RdPoint {
  double distortion = 0.0;  // target D
  double rate = 0.0;        // bits per source symbol
  double lagrange_s = 0.0;  // slope magnitude, nats per unit distortion; +inf at D_min
  std::size_t iterations = 0;
  bool converged = false;
  /// Output marginal q*(y) of the optimizing test channel.
  std::vector<double> repro_marginal;
};

struct BlahutArimotoOptions {
  double tol = 1e-7;                // bound gap on the rate, bits
  std::size_t max_iter = 20000;     // inner iterations per slope
  double distortion_tol = 1e-6;     // outer bisection target
};

/// R(target_D) by alternating minimization, with bisection on the slope so
/// the achieved distortion matches the target. Throws InfeasibleDistortion
/// for target_D < D_min; returns R = 0 for target_D >= D_max.
RdPoint blahut_arimoto(const Pmf& source, const DistortionMetric& metric, double target_D,
                       double tol = 1e-7, std::size_t max_iter = 20000);

/// Rate at every grid point. Points outside [D_min, D_max] throw like
/// blahut_arimoto.
std::vector<RdPoint> rd_sweep(const Pmf& source, const DistortionMetric& metric,
                              std::span<const double> grid, double tol = 1e-7);

/// Binary entropy in bits.
double binary_entropy(double p) noexcept;

}  // namespace sepnet
