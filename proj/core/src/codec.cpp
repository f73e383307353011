#include "sepnet/codec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "sepnet/error.hpp"

namespace sepnet {

namespace detail {

// Rows bucketed by each of four disjoint bit chunks. A row within Hamming
// distance 4t + 3 of a query agrees with it to within t on some chunk.
struct ChunkIndex {
  static constexpr int kChunks = 4;
  std::array<int, kChunks + 1> start{};
  std::array<std::vector<std::uint32_t>, kChunks> offsets;
  std::array<std::vector<std::uint32_t>, kChunks> rows;

  [[nodiscard]] int width(int j) const { return start[j + 1] - start[j]; }
  [[nodiscard]] std::uint32_t key(std::uint64_t word, int j) const {
    return static_cast<std::uint32_t>((word >> start[j]) & ((std::uint64_t{1} << width(j)) - 1));
  }
};

}  // namespace detail

std::uint64_t message_cardinality(std::size_t block_length, double rate) {
  if (!std::isfinite(rate)) throw ValidationError("message rate must be finite");
  const double exponent = static_cast<double>(block_length) * rate;
  if (exponent <= 0.0) return 1;
  if (exponent > 62.0) {
    throw CodebookTooLarge("message set of 2^" + std::to_string(exponent) + " entries cannot be indexed");
  }
  const double nearest = std::round(exponent);
  if (std::abs(exponent - nearest) < 1e-9) return std::uint64_t{1} << static_cast<int>(nearest);
  return static_cast<std::uint64_t>(std::ceil(std::exp2(exponent)));
}

MessageSet MessageSet::from_rate(std::size_t block_length, double rate) {
  if (block_length == 0) throw ValidationError("message set needs a positive block length");
  return MessageSet{rate, block_length, message_cardinality(block_length, rate)};
}

double RatePlan::default_psi(std::size_t n, std::size_t n_prime, double rate_D, double rate_D_prime) {
  if (!(rate_D > 0.0)) return 0.0;
  const double ratio = static_cast<double>(n) / static_cast<double>(n_prime);
  return 0.5 * (ratio - rate_D_prime / rate_D);
}

double RatePlan::default_alpha(double rate_D, double psi) { return rate_D / (rate_D + psi) * (psi / 2.0); }

RatePlan RatePlan::make(std::size_t n, std::size_t n_prime, double D, double D_prime, double rate_D,
                        double rate_D_prime, std::optional<double> psi, std::optional<double> alpha) {
  if (n == 0 || n_prime == 0) throw ValidationError("rate plan block lengths must be positive");
  RatePlan plan;
  plan.n = n;
  plan.n_prime = n_prime;
  plan.D = D;
  plan.D_prime = D_prime;
  plan.rate_D = rate_D;
  plan.rate_D_prime = rate_D_prime;
  plan.psi = psi.value_or(default_psi(n, n_prime, rate_D, rate_D_prime));
  plan.alpha = alpha.value_or(default_alpha(rate_D, plan.psi));
  plan.channel_rate = rate_D - plan.alpha;
  plan.source_rate = rate_D_prime + plan.psi / 2.0;
  plan.validate();
  return plan;
}

void RatePlan::validate() const {
  if (!(rate_D > 0.0)) throw PlanInfeasible("R(D) must be positive to carry any message");
  if (!(psi > 0.0)) throw PlanInfeasible("psi must be positive (got " + std::to_string(psi) + ")");
  if (!(alpha > 0.0)) throw PlanInfeasible("alpha must be positive (got " + std::to_string(alpha) + ")");
  const double ratio = static_cast<double>(n) / static_cast<double>(n_prime);
  if (!(ratio > rate_D_prime / rate_D + psi)) {
    throw PlanInfeasible("block ratio n/n' = " + std::to_string(ratio) + " does not exceed R(D')/R(D) + psi = " +
                         std::to_string(rate_D_prime / rate_D + psi));
  }
  if (static_cast<double>(n) * channel_rate < static_cast<double>(n_prime) * source_rate) {
    throw PlanInfeasible("source message set (" + std::to_string(n_prime * source_rate) +
                         " bits) does not fit in the channel message set (" +
                         std::to_string(n * channel_rate) + " bits)");
  }
}

namespace {

bool fair_binary(const Pmf& pmf) { return pmf.size() == 2 && pmf[0] == 0.5 && pmf[1] == 0.5; }

}  // namespace

void Codebook::allocate() {
  const std::size_t n = spec_.block_length;
  const std::uint64_t rows = spec_.cardinality;
  packed_ = alphabet().size() == 2;
  if (packed_) {
    words_per_row_ = (n + 63) / 64;
    bits_.assign(rows * words_per_row_, 0);
  } else {
    words_per_row_ = 0;
    symbols_.assign(rows * n, 0);
  }
}

Codebook Codebook::generate(const CodebookSpec& spec, const CodebookLimits& limits) {
  if (spec.block_length == 0) throw ValidationError("codebook block length must be positive");
  if (spec.cardinality == 0) throw ValidationError("codebook needs at least one codeword");
  if (spec.cardinality > limits.max_cardinality) {
    throw CodebookTooLarge("codebook needs " + std::to_string(spec.cardinality) + " codewords, above the cap of " +
                           std::to_string(limits.max_cardinality) +
                           "; use a smaller block length or rate, a larger D', or raise the cap");
  }
  Codebook cb;
  cb.spec_ = spec;
  cb.allocate();
  const std::size_t n = spec.block_length;
  const bool fair = fair_binary(spec.gen_pmf);
  for (Message m = 0; m < spec.cardinality; ++m) {
    Rng rng(spec.seed.derive(m));
    if (cb.packed_) {
      std::uint64_t* words = cb.bits_.data() + m * cb.words_per_row_;
      for (std::size_t w = 0; w < cb.words_per_row_; ++w) {
        const std::size_t len = std::min<std::size_t>(64, n - 64 * w);
        const std::uint64_t mask = len == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << len) - 1;
        if (fair) {
          words[w] = rng() & mask;
        } else {
          std::uint64_t word = 0;
          for (std::size_t k = 0; k < len; ++k) word |= std::uint64_t{spec.gen_pmf.draw(rng)} << k;
          words[w] = word;
        }
      }
    } else {
      Symbol* row = cb.symbols_.data() + m * n;
      for (std::size_t k = 0; k < n; ++k) row[k] = spec.gen_pmf.draw(rng);
    }
  }
  cb.build_index(limits);
  return cb;
}

void Codebook::build_index(const CodebookLimits& limits) {
  const std::uint64_t rows = cardinality();
  if (!packed_ || words_per_row_ != 1 || block_length() < 16 || rows < limits.index_from ||
      rows > std::numeric_limits<std::uint32_t>::max()) {
    return;
  }
  auto ix = std::make_shared<detail::ChunkIndex>();
  const int n = static_cast<int>(block_length());
  for (int j = 0; j <= detail::ChunkIndex::kChunks; ++j) ix->start[j] = j * n / detail::ChunkIndex::kChunks;
  for (int j = 0; j < detail::ChunkIndex::kChunks; ++j) {
    auto& offsets = ix->offsets[j];
    offsets.assign((std::size_t{1} << ix->width(j)) + 1, 0);
    for (Message m = 0; m < rows; ++m) ++offsets[ix->key(bits_[m], j) + 1];
    for (std::size_t b = 1; b < offsets.size(); ++b) offsets[b] += offsets[b - 1];
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    ix->rows[j].resize(rows);
    for (Message m = 0; m < rows; ++m) ix->rows[j][fill[ix->key(bits_[m], j)]++] = static_cast<std::uint32_t>(m);
  }
  index_ = std::move(ix);
}

Sequence Codebook::generate_row(const CodebookSpec& spec, Message m) {
  if (m >= spec.cardinality) {
    throw ValidationError("message " + std::to_string(m) + " out of range (cardinality " +
                          std::to_string(spec.cardinality) + ")");
  }
  const std::size_t n = spec.block_length;
  std::vector<Symbol> out(n);
  Rng rng(spec.seed.derive(m));
  if (fair_binary(spec.gen_pmf)) {
    for (std::size_t w = 0; 64 * w < n; ++w) {
      const std::uint64_t word = rng();
      for (std::size_t k = 64 * w; k < std::min(n, 64 * w + 64); ++k) out[k] = (word >> (k % 64)) & 1U;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) out[k] = spec.gen_pmf.draw(rng);
  }
  return Sequence(spec.gen_pmf.alphabet(), std::move(out));
}

Codebook Codebook::from_rows(CodebookKind kind, const Pmf& gen_pmf, const std::vector<Sequence>& rows) {
  if (rows.empty()) throw ValidationError("codebook needs at least one codeword");
  Codebook cb;
  cb.spec_ = CodebookSpec{kind, rows.front().size(), rows.size(), gen_pmf, RandomnessHandle{}};
  if (cb.spec_.block_length == 0) throw ValidationError("codebook block length must be positive");
  cb.allocate();
  for (Message m = 0; m < rows.size(); ++m) {
    const auto& r = rows[m];
    if (r.size() != cb.block_length() || !(r.alphabet() == gen_pmf.alphabet())) {
      throw ValidationError("codebook rows must share length and alphabet");
    }
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (cb.packed_) {
        cb.bits_[m * cb.words_per_row_ + k / 64] |= std::uint64_t{r[k]} << (k % 64);
      } else {
        cb.symbols_[m * cb.block_length() + k] = r[k];
      }
    }
  }
  return cb;
}

Symbol Codebook::at(Message m, std::size_t k) const {
  if (m >= cardinality() || k >= block_length()) throw ValidationError("codebook index out of range");
  if (packed_) return static_cast<Symbol>((bits_[m * words_per_row_ + k / 64] >> (k % 64)) & 1U);
  return symbols_[m * block_length() + k];
}

Sequence Codebook::row(Message m) const {
  if (m >= cardinality()) {
    throw ValidationError("message " + std::to_string(m) + " out of range (cardinality " +
                          std::to_string(cardinality()) + ")");
  }
  std::vector<Symbol> out(block_length());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(m, k);
  return Sequence(alphabet(), std::move(out));
}

std::span<const std::uint64_t> Codebook::packed_row(Message m) const {
  if (!packed_) throw ValidationError("codebook is not bit-packed");
  return {bits_.data() + m * words_per_row_, words_per_row_};
}

std::span<const Symbol> Codebook::symbol_row(Message m) const {
  if (packed_) throw ValidationError("codebook is bit-packed");
  return {symbols_.data() + m * block_length(), block_length()};
}

namespace {

constexpr double kLevelSlack = 1e-9;

std::vector<std::uint64_t> pack(const Sequence& s) {
  std::vector<std::uint64_t> words((s.size() + 63) / 64, 0);
  for (std::size_t k = 0; k < s.size(); ++k) words[k / 64] |= std::uint64_t{s[k]} << (k % 64);
  return words;
}

void consider(ScanResult& r, Message m, double total, double threshold, bool& first) {
  if (first || total < r.min_average) {
    r.min_average = total;
    r.argmin = m;
    first = false;
  }
  if (total <= threshold) {
    if (r.within == 0) r.first_within = m;
    if (r.within < 2) ++r.within;
  }
}

// Hamming scan through the chunk index. A pass at chunk radius t sees every
// row within 4t + 3; t grows until the nearest row is inside that radius.
// Returns false when t = 3 does not certify it, and the caller scans everything.
bool indexed_scan(const detail::ChunkIndex& ix, const std::uint64_t* base, std::uint64_t y, std::int64_t limit,
                  std::int64_t& best, Message& argmin, std::uint64_t& within, Message& first_within) {
  constexpr std::int64_t kMaxRadius = 3;
  std::array<std::uint32_t, detail::ChunkIndex::kChunks> yk{};
  for (int j = 0; j < detail::ChunkIndex::kChunks; ++j) yk[j] = ix.key(y, j);
  std::uint64_t count = 0;
  std::int64_t t = 0;
  const auto visit = [&](int j, std::uint32_t key) {
    const auto& rows = ix.rows[j];
    const std::uint32_t end = ix.offsets[j][key + 1];
    for (std::uint32_t at = ix.offsets[j][key]; at < end; ++at) {
      if (at + 8 < end) __builtin_prefetch(base + rows[at + 8]);
      const Message m = rows[at];
      const std::uint64_t w = base[m];
      bool seen = false;
      for (int i = 0; i < j && !seen; ++i) seen = std::popcount(ix.key(w, i) ^ yk[i]) <= t;
      if (seen) continue;
      const std::int64_t dist = std::popcount(w ^ y);
      if (dist < best || (dist == best && m < argmin)) {
        best = dist;
        argmin = m;
      }
      if (dist <= limit) {
        if (count == 0 || m < first_within) first_within = m;
        ++count;
      }
    }
  };
  // Every row within the limit has to be seen, so start at the smallest t with 4t + 3 >= limit.
  for (t = std::max<std::int64_t>(0, limit / 4); t <= kMaxRadius; ++t) {
    best = std::numeric_limits<std::int64_t>::max();
    count = 0;
    for (int j = 0; j < detail::ChunkIndex::kChunks; ++j) {
      const int width = ix.width(j);
      visit(j, yk[j]);
      for (int a = 0; a < width && t >= 1; ++a) {
        const std::uint32_t ka = yk[j] ^ (1U << a);
        visit(j, ka);
        for (int b = a + 1; b < width && t >= 2; ++b) {
          const std::uint32_t kb = ka ^ (1U << b);
          visit(j, kb);
          for (int c = b + 1; c < width && t >= 3; ++c) visit(j, kb ^ (1U << c));
        }
      }
    }
    if (best <= 4 * t + 3) {
      within = std::min<std::uint64_t>(count, 2);
      return true;
    }
  }
  return false;
}

ScanResult scan_packed(const Codebook& cb, const Sequence& block, const DistortionMetric& metric,
                       CodewordSide side, double threshold) {
  const std::vector<std::uint64_t> y = pack(block);
  const std::size_t words = cb.words_per_row();
  const double d00 = metric(0, 0);
  const double d01 = metric(0, 1);
  const double d10 = metric(1, 0);
  const double d11 = metric(1, 1);
  const auto n = static_cast<double>(cb.block_length());
  ScanResult r;
  bool first = true;

  if (d00 == 0.0 && d11 == 0.0 && d01 == d10 && d01 > 0.0) {
    // Hamming shape: distortion is a scaled popcount, compared in integers.
    const auto limit = static_cast<std::int64_t>(std::floor(threshold / d01));
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    std::uint64_t within = 0;
    Message first_within = 0;
    Message argmin = 0;
    const std::uint64_t rows = cb.cardinality();
    if (words == 1) {
      const std::uint64_t yw = y[0];
      const std::uint64_t* base = cb.packed_row(0).data();
      if (cb.chunk_index() != nullptr &&
          indexed_scan(*cb.chunk_index(), base, yw, limit, best, argmin, within, first_within)) {
        r.argmin = argmin;
        r.min_average = static_cast<double>(best) * d01 / n;
        r.within = within;
        r.first_within = first_within;
        return r;
      }
      best = std::numeric_limits<std::int64_t>::max();
      within = 0;
      for (Message m = 0; m < rows; ++m) {
        const std::int64_t dist = std::popcount(base[m] ^ yw);
        if (dist < best) {
          best = dist;
          argmin = m;
        }
        if (dist <= limit) {
          if (within == 0) first_within = m;
          if (within < 2) ++within;
        }
      }
    } else {
      for (Message m = 0; m < rows; ++m) {
        const auto row = cb.packed_row(m);
        std::int64_t dist = 0;
        for (std::size_t w = 0; w < words; ++w) dist += std::popcount(row[w] ^ y[w]);
        if (dist < best) {
          best = dist;
          argmin = m;
        }
        if (dist <= limit) {
          if (within == 0) first_within = m;
          if (within < 2) ++within;
        }
      }
    }
    r.argmin = argmin;
    r.min_average = static_cast<double>(best) * d01 / n;
    r.within = within;
    r.first_within = first_within;
    return r;
  }

  for (Message m = 0; m < cb.cardinality(); ++m) {
    const auto row = cb.packed_row(m);
    std::int64_t c11 = 0;
    std::int64_t c10 = 0;
    std::int64_t c01 = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t s = side == CodewordSide::source ? row[w] : y[w];
      const std::uint64_t t = side == CodewordSide::source ? y[w] : row[w];
      c11 += std::popcount(s & t);
      c10 += std::popcount(s & ~t);
      c01 += std::popcount(~s & t);
    }
    const auto c00 = static_cast<std::int64_t>(cb.block_length()) - c11 - c10 - c01;
    const double total = d00 * static_cast<double>(c00) + d01 * static_cast<double>(c01) +
                         d10 * static_cast<double>(c10) + d11 * static_cast<double>(c11);
    consider(r, m, total, threshold, first);
  }
  r.min_average /= n;
  return r;
}

ScanResult scan_symbols(const Codebook& cb, const Sequence& block, const DistortionMetric& metric,
                        CodewordSide side, double threshold) {
  const std::size_t n = cb.block_length();
  const auto y = block.values();
  ScanResult r;
  bool first = true;
  for (Message m = 0; m < cb.cardinality(); ++m) {
    const auto row = cb.symbol_row(m);
    double total = 0.0;
    if (side == CodewordSide::source) {
      for (std::size_t k = 0; k < n; ++k) total += metric(row[k], y[k]);
    } else {
      for (std::size_t k = 0; k < n; ++k) total += metric(y[k], row[k]);
    }
    consider(r, m, total, threshold, first);
  }
  r.min_average /= static_cast<double>(n);
  return r;
}

}  // namespace

ScanResult scan_codebook(const Codebook& cb, const Sequence& block, const DistortionMetric& metric,
                         CodewordSide side, double level) {
  if (block.size() != cb.block_length()) {
    throw ValidationError("block length " + std::to_string(block.size()) + " does not match codebook length " +
                          std::to_string(cb.block_length()));
  }
  const Alphabet& src = metric.source_alphabet();
  const Alphabet& rep = metric.repro_alphabet();
  const bool ok = side == CodewordSide::source ? (cb.alphabet() == src && block.alphabet() == rep)
                                               : (cb.alphabet() == rep && block.alphabet() == src);
  if (!ok) throw AlphabetMismatch("codebook, block and metric alphabets disagree");
  const double threshold = level * static_cast<double>(cb.block_length()) + kLevelSlack;
  if (cb.is_packed() && src.size() == 2 && rep.size() == 2) return scan_packed(cb, block, metric, side, threshold);
  if (cb.is_packed()) {
    // Binary codewords against a wider alphabet: unpack once.
    std::vector<Sequence> rows;
    rows.reserve(cb.cardinality());
    for (Message m = 0; m < cb.cardinality(); ++m) rows.push_back(cb.row(m));
    ScanResult r;
    bool first = true;
    for (Message m = 0; m < rows.size(); ++m) {
      const auto& x = side == CodewordSide::source ? rows[m] : block;
      const auto& y = side == CodewordSide::source ? block : rows[m];
      double total = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) total += metric(x[k], y[k]);
      consider(r, m, total, threshold, first);
    }
    r.min_average /= static_cast<double>(cb.block_length());
    return r;
  }
  return scan_symbols(cb, block, metric, side, threshold);
}

Codebook build_channel_codebook(const MessageSet& messages, const Pmf& p_X, const RandomnessHandle& seed,
                                const CodebookLimits& limits) {
  if (!(messages.rate > 0.0)) throw ValidationError("channel rate must be positive");
  return Codebook::generate(
      CodebookSpec{CodebookKind::channel_embedding, messages.block_length, messages.cardinality, p_X, seed}, limits);
}

Codebook build_channel_codebook(const RatePlan& plan, const Pmf& p_X, const RandomnessHandle& seed,
                                const CodebookLimits& limits) {
  plan.validate();
  return build_channel_codebook(plan.channel_messages(), p_X, seed, limits);
}

Sequence channel_encode(const Codebook& cb, Message m) { return cb.row(m); }

const char* to_string(DecodeRule rule) noexcept {
  return rule == DecodeRule::unique_within_distortion ? "unique_within_distortion" : "min_distortion";
}

const char* to_string(DecodeFailure failure) noexcept {
  switch (failure) {
    case DecodeFailure::none:
      return "none";
    case DecodeFailure::none_within_distortion:
      return "none_within_distortion";
    case DecodeFailure::ambiguous:
      return "ambiguous";
  }
  return "unknown";
}

ChannelDecision channel_decode(const Codebook& cb, const Sequence& y, const DistortionMetric& metric, double D,
                               DecodeRule rule) {
  const ScanResult scan = scan_codebook(cb, y, metric, CodewordSide::source, D);
  ChannelDecision out;
  out.nearest = scan.argmin;
  out.nearest_average = scan.min_average;
  if (rule == DecodeRule::min_distortion) {
    out.message = scan.argmin;
  } else if (scan.within == 1) {
    out.message = scan.first_within;
  } else {
    out.failure = scan.within == 0 ? DecodeFailure::none_within_distortion : DecodeFailure::ambiguous;
  }
  return out;
}

BlockChannel memoryless_block_channel(StochasticMatrix matrix) {
  return [matrix = std::move(matrix)](const Sequence& input, Rng& rng) {
    if (input.alphabet().size() != matrix.inputs()) throw AlphabetMismatch("channel input alphabet mismatch");
    std::vector<Symbol> out(input.size());
    for (std::size_t k = 0; k < input.size(); ++k) out[k] = matrix.draw(input[k], rng);
    return Sequence(Alphabet(matrix.outputs()), std::move(out));
  };
}

MbpReport mbp_estimate(const Codebook& cb, const BlockChannel& channel, const DistortionMetric& metric, double D,
                       std::size_t trials_per_message, const RandomnessHandle& root, DecodeRule rule,
                       std::optional<std::vector<Message>> messages) {
  if (trials_per_message < 100) throw ValidationError("mbp_estimate needs at least 100 trials per message");
  MbpReport report;
  report.trials_per_message = trials_per_message;
  if (messages) {
    report.messages = std::move(*messages);
    for (const Message m : report.messages) {
      if (m >= cb.cardinality()) throw ValidationError("mbp_estimate: message out of range");
    }
  } else {
    report.messages.resize(cb.cardinality());
    for (Message m = 0; m < cb.cardinality(); ++m) report.messages[m] = m;
  }
  if (report.messages.empty()) throw ValidationError("mbp_estimate: no messages to test");

  double sum = 0.0;
  bool first = true;
  for (const Message m : report.messages) {
    const Sequence codeword = channel_encode(cb, m);
    Rng rng(root.derive(m));
    std::uint64_t errors = 0;
    for (std::size_t t = 0; t < trials_per_message; ++t) {
      const auto decision = channel_decode(cb, channel(codeword, rng), metric, D, rule);
      if (decision.failure == DecodeFailure::none_within_distortion) {
        ++report.none_within;
        ++errors;
      } else if (decision.failure == DecodeFailure::ambiguous) {
        ++report.ambiguous;
        ++errors;
      } else if (*decision.message != m) {
        ++report.wrong;
        ++errors;
      }
    }
    const Proportion p = wilson_interval(errors, trials_per_message);
    report.per_message.push_back(p);
    sum += p.estimate;
    if (first || p.estimate > report.sup.estimate) {
      report.sup = p;
      report.sup_message = m;
      first = false;
    }
  }
  report.average = sum / static_cast<double>(report.messages.size());
  return report;
}

std::vector<Message> draw_messages(std::uint64_t cardinality, std::size_t count, MessageLaw law,
                                   const RandomnessHandle& handle, double zipf_exponent) {
  if (cardinality == 0) throw ValidationError("draw_messages: empty message set");
  Rng rng(handle);
  std::vector<Message> out(count);
  if (law == MessageLaw::uniform) {
    for (auto& m : out) m = rng.below(cardinality);
    return out;
  }
  if (!(zipf_exponent > 0.0)) throw ValidationError("zipf exponent must be positive");
  std::vector<double> cdf(cardinality);
  double acc = 0.0;
  for (std::uint64_t k = 0; k < cardinality; ++k) {
    acc += std::pow(static_cast<double>(k + 1), -zipf_exponent);
    cdf[k] = acc;
  }
  for (auto& m : out) {
    const double u = rng.uniform() * acc;
    m = static_cast<Message>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (m >= cardinality) m = cardinality - 1;
  }
  return out;
}

Sequence encode_stream(const Codebook& cb, std::span<const Message> messages) {
  Sequence out(cb.alphabet());
  for (const Message m : messages) out.append(channel_encode(cb, m));
  return out;
}

Sequence ensemble_encode_stream(const CodebookSpec& spec, std::span<const Message> messages) {
  Sequence out(spec.gen_pmf.alphabet());
  CodebookSpec draw = spec;
  for (std::size_t b = 0; b < messages.size(); ++b) {
    draw.seed = spec.seed.derive(static_cast<std::uint64_t>(b));
    out.append(Codebook::generate_row(draw, messages[b]));
  }
  return out;
}

Codebook build_source_codebook(const MessageSet& messages, const Pmf& generation_marginal,
                               const RandomnessHandle& seed, const CodebookLimits& limits) {
  return Codebook::generate(CodebookSpec{CodebookKind::source_compression, messages.block_length,
                                         messages.cardinality, generation_marginal, seed},
                            limits);
}

Codebook build_source_codebook(const RatePlan& plan, const Pmf& x_pmf, const DistortionMetric& metric,
                               const RandomnessHandle& seed, const CodebookLimits& limits) {
  plan.validate();
  const RdPoint point = blahut_arimoto(x_pmf, metric, plan.D_prime);
  std::vector<double> q = point.repro_marginal;
  for (double& v : q) v = std::max(v, 0.0);
  return build_source_codebook(plan.source_messages(), Pmf(std::move(q)), seed, limits);
}

Message source_encode(const Codebook& cb, const Sequence& x, const DistortionMetric& metric) {
  return scan_codebook(cb, x, metric, CodewordSide::reproduction, 0.0).argmin;
}

Sequence source_decode(const Codebook& cb, Message m) { return cb.row(m); }

}  // namespace sepnet
