#include "sepnet/ratedist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "sepnet/error.hpp"

namespace sepnet {

DistortionMetric::DistortionMetric(Alphabet source, Alphabet reproduction,
                                   std::vector<std::vector<double>> table)
    : source_(source), repro_(reproduction) {
  if (table.size() != source_.size()) {
    throw ValidationError("distortion table must have one row per source symbol");
  }
  table_.reserve(source_.size() * repro_.size());
  for (const auto& row : table) {
    if (row.size() != repro_.size()) {
      throw ValidationError("distortion table row width must equal reproduction alphabet size");
    }
    for (const double d : row) {
      if (!std::isfinite(d) || d < 0.0) {
        throw ValidationError("distortion entries must be finite and nonnegative");
      }
      table_.push_back(d);
    }
  }
}

DistortionMetric DistortionMetric::hamming(std::size_t alphabet_size) {
  std::vector<std::vector<double>> table(alphabet_size, std::vector<double>(alphabet_size, 1.0));
  for (std::size_t k = 0; k < alphabet_size; ++k) table[k][k] = 0.0;
  return DistortionMetric(Alphabet(alphabet_size), Alphabet(alphabet_size), std::move(table));
}

double DistortionMetric::max_entry() const noexcept {
  return *std::max_element(table_.begin(), table_.end());
}

double DistortionMetric::min_distortion(const Pmf& source) const {
  if (!(source.alphabet() == source_)) throw AlphabetMismatch("metric/source alphabet mismatch");
  double sum = 0.0;
  for (Symbol x = 0; x < source_.size(); ++x) {
    const auto r = row(x);
    sum += source[x] * *std::min_element(r.begin(), r.end());
  }
  return sum;
}

double DistortionMetric::max_distortion(const Pmf& source) const {
  if (!(source.alphabet() == source_)) throw AlphabetMismatch("metric/source alphabet mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (Symbol y = 0; y < repro_.size(); ++y) {
    double sum = 0.0;
    for (Symbol x = 0; x < source_.size(); ++x) sum += source[x] * (*this)(x, y);
    best = std::min(best, sum);
  }
  return best;
}

DistortionMetric DistortionMetric::scaled(double factor) const {
  if (!(factor > 0.0)) throw ValidationError("metric scale factor must be positive");
  DistortionMetric out = *this;
  for (double& d : out.table_) d *= factor;
  return out;
}

DistortionMetric DistortionMetric::permuted(std::span<const Symbol> source_perm,
                                            std::span<const Symbol> repro_perm) const {
  if (source_perm.size() != source_.size() || repro_perm.size() != repro_.size()) {
    throw ValidationError("permutation size mismatch");
  }
  // New label source_perm[x] takes the role of old label x.
  std::vector<std::vector<double>> table(source_.size(), std::vector<double>(repro_.size()));
  for (Symbol x = 0; x < source_.size(); ++x) {
    for (Symbol y = 0; y < repro_.size(); ++y) table[source_perm[x]][repro_perm[y]] = (*this)(x, y);
  }
  return DistortionMetric(source_, repro_, std::move(table));
}

DistortionBudget::DistortionBudget(double level_, DistortionMetric metric_)
    : level(level_), metric(std::move(metric_)) {
  if (!(level >= 0.0) || !std::isfinite(level)) {
    throw ValidationError("distortion level must be finite and nonnegative");
  }
}

BlockDistortion block_distortion(const Sequence& x, const Sequence& y, const DistortionMetric& metric) {
  if (x.size() != y.size()) {
    throw ValidationError("block_distortion: length mismatch (" + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()) + ")");
  }
  if (x.empty()) throw ValidationError("block_distortion: empty blocks");
  if (!(x.alphabet() == metric.source_alphabet()) || !(y.alphabet() == metric.repro_alphabet())) {
    throw AlphabetMismatch("block_distortion: alphabets do not match the metric");
  }
  BlockDistortion out;
  for (std::size_t k = 0; k < x.size(); ++k) out.total += metric(x[k], y[k]);
  out.average = out.total / static_cast<double>(x.size());
  return out;
}

Proportion excess_distortion_prob(std::span<const double> averages, double level) {
  if (averages.empty()) throw ValidationError("excess_distortion_prob: no trials");
  const auto exceed = static_cast<std::uint64_t>(
      std::count_if(averages.begin(), averages.end(), [level](double a) { return a > level; }));
  return wilson_interval(exceed, averages.size());
}

Proportion excess_distortion_prob(std::span<const BlockPair> trials, const DistortionBudget& budget) {
  if (trials.empty()) throw ValidationError("excess_distortion_prob: no trials");
  const std::size_t n = trials.front().source.size();
  std::vector<double> averages;
  averages.reserve(trials.size());
  for (const auto& t : trials) {
    if (t.source.size() != n) throw ValidationError("excess_distortion_prob: trials differ in length");
    averages.push_back(block_distortion(t.source, t.reproduction, budget.metric).average);
  }
  return excess_distortion_prob(averages, budget.level);
}

double expected_distortion(std::span<const BlockPair> trials, const DistortionMetric& metric) {
  if (trials.empty()) throw ValidationError("expected_distortion: no trials");
  double sum = 0.0;
  for (const auto& t : trials) sum += block_distortion(t.source, t.reproduction, metric).average;
  return sum / static_cast<double>(trials.size());
}

double binary_entropy(double p) noexcept {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

constexpr double kInfiniteSlope = std::numeric_limits<double>::infinity();

// One fixed-slope solve. Works with exponents shifted by min_y d(x,y) so
// large slopes neither underflow the normalizers nor need special casing;
// an infinite slope restricts each x to its minimum-distortion letters.
struct SlopeSolver {
  const Pmf& source;
  const DistortionMetric& metric;
  std::size_t nx;
  std::size_t ny;
  std::vector<double> row_min;

  SlopeSolver(const Pmf& p, const DistortionMetric& d)
      : source(p), metric(d), nx(d.source_alphabet().size()), ny(d.repro_alphabet().size()),
        row_min(nx) {
    for (Symbol x = 0; x < nx; ++x) {
      const auto r = metric.row(x);
      row_min[x] = *std::min_element(r.begin(), r.end());
    }
  }

  struct Result {
    double distortion = 0.0;
    double rate_bits = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> q;
    std::vector<double> q_out;  // output marginal of the induced test channel
  };

  Result solve(double slope, std::vector<double> q, double tol_bits, std::size_t max_iter) const {
    std::vector<double> kernel(nx * ny);
    for (Symbol x = 0; x < nx; ++x) {
      for (Symbol y = 0; y < ny; ++y) {
        const double excess = metric(x, y) - row_min[x];
        double a;
        if (slope == kInfiniteSlope) {
          a = excess == 0.0 ? 1.0 : 0.0;
        } else {
          a = std::exp(-slope * excess);
        }
        kernel[x * ny + y] = a;
      }
    }

    Result out;
    std::vector<double> lambda(nx);
    std::vector<double> c(ny);
    const double tol_nats = tol_bits * std::log(2.0);
    for (std::size_t it = 0; it < max_iter; ++it) {
      for (Symbol x = 0; x < nx; ++x) {
        double s = 0.0;
        for (Symbol y = 0; y < ny; ++y) s += q[y] * kernel[x * ny + y];
        lambda[x] = s;
      }
      for (Symbol y = 0; y < ny; ++y) {
        double s = 0.0;
        for (Symbol x = 0; x < nx; ++x) {
          if (source[x] > 0.0) s += source[x] * kernel[x * ny + y] / lambda[x];
        }
        c[y] = s;
      }
      // Bound gap: max_y log c(y) - sum_y q(y) c(y) log c(y).
      double max_log = -std::numeric_limits<double>::infinity();
      double avg_log = 0.0;
      for (Symbol y = 0; y < ny; ++y) {
        if (c[y] > 0.0) {
          const double lc = std::log(c[y]);
          max_log = std::max(max_log, lc);
          if (q[y] > 0.0) avg_log += q[y] * c[y] * lc;
        }
      }
      for (Symbol y = 0; y < ny; ++y) q[y] *= c[y];
      const double total = std::accumulate(q.begin(), q.end(), 0.0);
      for (double& v : q) v /= total;
      out.iterations = it + 1;
      if (max_log - avg_log <= tol_nats) {
        out.converged = true;
        break;
      }
    }

    // Evaluate D and I(X;Y) of the test channel induced by q.
    for (Symbol x = 0; x < nx; ++x) {
      double s = 0.0;
      for (Symbol y = 0; y < ny; ++y) s += q[y] * kernel[x * ny + y];
      lambda[x] = s;
    }
    std::vector<double> q_out(ny, 0.0);
    for (Symbol x = 0; x < nx; ++x) {
      if (source[x] == 0.0) continue;
      for (Symbol y = 0; y < ny; ++y) {
        q_out[y] += source[x] * q[y] * kernel[x * ny + y] / lambda[x];
      }
    }
    double distortion = 0.0;
    double info = 0.0;
    for (Symbol x = 0; x < nx; ++x) {
      if (source[x] == 0.0) continue;
      for (Symbol y = 0; y < ny; ++y) {
        const double cond = q[y] * kernel[x * ny + y] / lambda[x];
        if (cond <= 0.0) continue;
        distortion += source[x] * cond * metric(x, y);
        // A letter whose weight decayed to a denormal can leave q_out[y] = 0.
        if (q_out[y] > 0.0) info += source[x] * cond * std::log2(cond / q_out[y]);
      }
    }
    out.distortion = distortion;
    out.rate_bits = std::max(0.0, info);
    out.q = std::move(q);
    out.q_out = std::move(q_out);
    return out;
  }
};

// D(slope) jumps over the target: the optimal output support changes at a
// critical slope s* where R is linear. Solving on each support separately
// converges fast; s* is where the two Lagrangians meet, and R(target) is
// read off that common supporting line.
std::optional<RdPoint> across_jump(const SlopeSolver& solver, double lo, double hi, double target_D, double tol,
                                   std::size_t max_iter) {
  const std::size_t ny = solver.ny;
  const double ln2 = std::log(2.0);
  auto support = [&](const std::vector<double>& q) {
    const double top = *std::max_element(q.begin(), q.end());
    std::vector<double> init(ny, 0.0);
    for (std::size_t y = 0; y < ny; ++y) init[y] = q[y] > 1e-2 * top ? 1.0 : 0.0;
    const double total = std::accumulate(init.begin(), init.end(), 0.0);
    for (double& v : init) v /= total;
    return init;
  };
  // q drifts along the segment close to s*, so read the supports off fresh
  // solves a little way to either side.
  const std::vector<double> uniform(ny, 1.0 / static_cast<double>(ny));
  const double w = std::max(hi - lo, 1e-3 * hi);
  lo = std::max(0.5 * lo, lo - w);
  hi += w;
  const auto left = solver.solve(lo, uniform, tol, 100 * max_iter);
  const auto right = solver.solve(hi, uniform, tol, 100 * max_iter);
  if (!left.converged || !right.converged) return std::nullopt;
  const auto sa = support(left.q);
  const auto sb = support(right.q);
  if (sa == sb) return std::nullopt;
  auto solve = [&](const std::vector<double>& init, double slope) {
    return solver.solve(slope, init, tol * 1e-3, 10 * max_iter);
  };
  auto lagrangian = [&](const SlopeSolver::Result& r, double slope) {
    return r.rate_bits + slope / ln2 * r.distortion;
  };
  std::size_t iterations = left.iterations + right.iterations;
  auto gap = [&](double slope, SlopeSolver::Result& a, SlopeSolver::Result& b) {
    a = solve(sa, slope);
    b = solve(sb, slope);
    iterations += a.iterations + b.iterations;
    return lagrangian(a, slope) - lagrangian(b, slope);
  };
  SlopeSolver::Result a, b;
  // Left of s* the left support wins (smaller Lagrangian).
  double x0 = lo;
  double x1 = hi;
  if (!(gap(x0, a, b) < 0.0) || !(gap(x1, a, b) > 0.0)) return std::nullopt;
  for (int k = 0; k < 100 && x1 - x0 > 1e-14 * x1; ++k) {
    const double mid = 0.5 * (x0 + x1);
    (gap(mid, a, b) < 0.0 ? x0 : x1) = mid;
  }
  const double slope = 0.5 * (x0 + x1);
  (void)gap(slope, a, b);
  if (!a.converged || !b.converged) return std::nullopt;
  if (!(a.distortion >= target_D && target_D >= b.distortion)) return std::nullopt;
  RdPoint p;
  p.rate = std::max(0.0, 0.5 * (lagrangian(a, slope) + lagrangian(b, slope)) - slope / ln2 * target_D);
  p.lagrange_s = slope;
  p.iterations = iterations;
  p.converged = true;
  // Time-sharing the two endpoint test channels meets the target exactly.
  const double t = (a.distortion - target_D) / (a.distortion - b.distortion);
  p.repro_marginal.assign(ny, 0.0);
  for (std::size_t y = 0; y < ny; ++y) p.repro_marginal[y] = (1 - t) * a.q_out[y] + t * b.q_out[y];
  return p;
}

}  // namespace

RdPoint blahut_arimoto(const Pmf& source, const DistortionMetric& metric, double target_D,
                       double tol, std::size_t max_iter) {
  if (!(source.alphabet() == metric.source_alphabet())) {
    throw AlphabetMismatch("blahut_arimoto: source and metric alphabets differ");
  }
  if (!(tol > 0.0)) throw ValidationError("blahut_arimoto: tolerance must be positive");
  const double d_min = metric.min_distortion(source);
  const double d_max = metric.max_distortion(source);
  constexpr double kDistortionTol = 1e-6;
  constexpr double kBoundaryEps = 1e-12;

  RdPoint point;
  point.distortion = target_D;
  const std::size_t ny = metric.repro_alphabet().size();

  if (target_D < d_min - kBoundaryEps) {
    throw InfeasibleDistortion("infeasible distortion: target " + std::to_string(target_D) +
                               " is below D_min = " + std::to_string(d_min));
  }
  if (target_D >= d_max) {
    // A single best reproduction letter meets the budget at zero rate.
    Symbol best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (Symbol y = 0; y < ny; ++y) {
      double sum = 0.0;
      for (Symbol x = 0; x < source.size(); ++x) sum += source[x] * metric(x, y);
      if (sum < best_sum) {
        best_sum = sum;
        best = y;
      }
    }
    point.rate = 0.0;
    point.lagrange_s = 0.0;
    point.converged = true;
    point.repro_marginal.assign(ny, 0.0);
    point.repro_marginal[best] = 1.0;
    return point;
  }

  const SlopeSolver solver(source, metric);
  const std::vector<double> uniform_q(ny, 1.0 / static_cast<double>(ny));
  std::size_t total_iterations = 0;

  auto finish = [&](const SlopeSolver::Result& r, double slope) {
    point.lagrange_s = slope;
    point.iterations = total_iterations;
    point.repro_marginal = r.q;
    // First-order correction along the tangent of slope -s (nats) to land
    // exactly on the target distortion.
    double rate = r.rate_bits;
    if (std::isfinite(slope)) rate -= slope / std::log(2.0) * (target_D - r.distortion);
    point.rate = std::max(0.0, rate);
    point.converged = r.converged && std::abs(r.distortion - target_D) <= kDistortionTol;
    return point;
  };

  if (target_D <= d_min + kDistortionTol) {
    const auto r = solver.solve(kInfiniteSlope, uniform_q, tol, max_iter);
    total_iterations += r.iterations;
    auto p = finish(r, kInfiniteSlope);
    p.converged = r.converged;
    return p;
  }

  // Bracket: D(slope) decreases from D_max (slope -> 0) to D_min (slope -> inf).
  double lo = 0.0;
  double hi = 1.0;
  SlopeSolver::Result at_hi = solver.solve(hi, uniform_q, tol, max_iter);
  total_iterations += at_hi.iterations;
  while (at_hi.distortion > target_D && hi < 1e12) {
    lo = hi;
    hi *= 2.0;
    at_hi = solver.solve(hi, at_hi.q, tol, max_iter);
    total_iterations += at_hi.iterations;
  }
  if (at_hi.distortion > target_D) {
    const auto r = solver.solve(kInfiniteSlope, uniform_q, tol, max_iter);
    total_iterations += r.iterations;
    return finish(r, kInfiniteSlope);
  }

  SlopeSolver::Result best = at_hi;
  double best_slope = hi;
  std::optional<SlopeSolver::Result> at_lo;
  std::vector<double> warm = at_hi.q;
  const double ln2 = std::log(2.0);
  // g(s) = I + s (D - target), in bits with s in nats, is concave in s with
  // its maximum R(target) at the critical slope.
  auto g = [&](const SlopeSolver::Result& r, double s) { return r.rate_bits + s / ln2 * (r.distortion - target_D); };
  for (int step = 0; step < 200; ++step) {
    if (std::abs(best.distortion - target_D) <= kDistortionTol) break;
    if (at_lo && at_hi.converged && at_lo->converged) {
      // Certified bracket from both ends: max g below, crossing of the two
      // tangent lines above. This closes even where D(slope) jumps over the
      // target (R linear there) and q converges only slowly.
      const double a = (at_lo->distortion - target_D) / ln2;
      const double b = (at_hi.distortion - target_D) / ln2;
      const double g_lo = g(*at_lo, lo);
      const double g_hi = g(at_hi, hi);
      const double cross = (g_hi - g_lo + a * lo - b * hi) / (a - b);
      const double upper = g_lo + a * (cross - lo);
      const double lower = std::max(g_lo, g_hi);
      if (upper - lower <= tol) {
        point.rate = std::max(0.0, 0.5 * (upper + lower));
        point.lagrange_s = cross;
        point.iterations = total_iterations;
        point.repro_marginal = (g_lo >= g_hi ? *at_lo : at_hi).q;
        point.converged = true;
        return point;
      }
    }
    const double mid = 0.5 * (lo + hi);
    auto r = solver.solve(mid, warm, tol, max_iter);
    total_iterations += r.iterations;
    // An unconverged q can sit on the wrong side of a jump in D(slope) and
    // send the bisection the wrong way; keep iterating before deciding.
    for (int extra = 0; !r.converged && extra < 3; ++extra) {
      r = solver.solve(mid, r.q, tol, 4 * max_iter);
      total_iterations += r.iterations;
    }
    if (std::abs(r.distortion - target_D) < std::abs(best.distortion - target_D)) {
      best = r;
      best_slope = mid;
    }
    // Warm starts must keep full support; mix in a little uniform mass.
    warm = r.q;
    for (std::size_t y = 0; y < ny; ++y) warm[y] = 0.999 * warm[y] + 0.001 * uniform_q[y];
    if (r.distortion > target_D) {
      lo = mid;
      at_lo = std::move(r);
    } else {
      hi = mid;
      at_hi = std::move(r);
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  if (std::abs(best.distortion - target_D) > kDistortionTol && at_lo) {
    if (auto p = across_jump(solver, lo, hi, target_D, tol, max_iter)) {
      p->distortion = target_D;
      p->iterations += total_iterations;
      return *p;
    }
  }
  return finish(best, best_slope);
}

std::vector<RdPoint> rd_sweep(const Pmf& source, const DistortionMetric& metric,
                              std::span<const double> grid, double tol) {
  std::vector<RdPoint> out;
  out.reserve(grid.size());
  for (const double d : grid) out.push_back(blahut_arimoto(source, metric, d, tol));
  return out;
}

}  // namespace sepnet
