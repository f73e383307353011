#pragma once

// Random codebooks: the embedding channel code, whose codewords are drawn
// i.i.d. from the source law so they can stand in for the source, and the
// lossy source code drawn from the optimal reproduction marginal.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sepnet/probcore.hpp"
#include "sepnet/ratedist.hpp"

namespace sepnet {

using Message = std::uint64_t;

/// ceil(2^(n R)); 1 when n R <= 0. Throws CodebookTooLarge past 2^62.
std::uint64_t message_cardinality(std::size_t block_length, double rate);

struct MessageSet {
  double rate = 0.0;
  std::size_t block_length = 0;
  std::uint64_t cardinality = 1;

  static MessageSet from_rate(std::size_t block_length, double rate);
};

struct RatePlan {
  std::size_t n = 0;        // channel block length
  std::size_t n_prime = 0;  // source block length
  double D = 0.0;
  double D_prime = 0.0;
  double rate_D = 0.0;        // R_X(D), bits
  double rate_D_prime = 0.0;  // R_X'(D'), bits
  double psi = 0.0;
  double alpha = 0.0;
  double channel_rate = 0.0;  // rate_D - alpha
  double source_rate = 0.0;   // rate_D_prime + psi / 2

  /// Half the slack in n/n' > R'/R; reduces to (R - R') / (2R) when n = n'.
  static double default_psi(std::size_t n, std::size_t n_prime, double rate_D, double rate_D_prime);
  static double default_alpha(double rate_D, double psi);

  /// Fills defaults, then validate()s.
  static RatePlan make(std::size_t n, std::size_t n_prime, double D, double D_prime, double rate_D,
                       double rate_D_prime, std::optional<double> psi = std::nullopt,
                       std::optional<double> alpha = std::nullopt);

  /// Throws PlanInfeasible unless psi > 0, alpha > 0, n/n' > R'/R + psi and
  /// n * channel_rate >= n' * source_rate.
  void validate() const;

  [[nodiscard]] MessageSet channel_messages() const { return MessageSet::from_rate(n, channel_rate); }
  [[nodiscard]] MessageSet source_messages() const { return MessageSet::from_rate(n_prime, source_rate); }
};

enum class CodebookKind { channel_embedding, source_compression };

struct CodebookLimits {
  std::uint64_t max_cardinality = std::uint64_t{1} << 20;
  /// Binary codebooks of at most 64 symbols and at least this many rows get a
  /// chunk index for Hamming scans. Results are identical either way.
  std::uint64_t index_from = std::uint64_t{1} << 20;
};

namespace detail {
struct ChunkIndex;
}

/// Everything needed to regenerate a codebook bit-exactly.
struct CodebookSpec {
  CodebookKind kind = CodebookKind::channel_embedding;
  std::size_t block_length = 0;
  std::uint64_t cardinality = 1;
  Pmf gen_pmf = Pmf::point_mass(1, 0);
  RandomnessHandle seed;
};

class Codebook {
 public:
  /// Row m is drawn from its own stream seed.derive(m).
  static Codebook generate(const CodebookSpec& spec, const CodebookLimits& limits = {});
  /// Explicit rows; for tests and controlled experiments.
  static Codebook from_rows(CodebookKind kind, const Pmf& gen_pmf, const std::vector<Sequence>& rows);
  /// Row m of generate(spec) without building the rest of the codebook.
  static Sequence generate_row(const CodebookSpec& spec, Message m);

  [[nodiscard]] const CodebookSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] CodebookKind kind() const noexcept { return spec_.kind; }
  [[nodiscard]] std::size_t block_length() const noexcept { return spec_.block_length; }
  [[nodiscard]] std::uint64_t cardinality() const noexcept { return spec_.cardinality; }
  [[nodiscard]] const Alphabet& alphabet() const noexcept { return spec_.gen_pmf.alphabet(); }

  [[nodiscard]] Sequence row(Message m) const;
  [[nodiscard]] Symbol at(Message m, std::size_t k) const;

  /// Binary codebooks are stored one bit per symbol, symbol k of a row in
  /// bit k % 64 of word k / 64.
  [[nodiscard]] bool is_packed() const noexcept { return packed_; }
  [[nodiscard]] std::size_t words_per_row() const noexcept { return words_per_row_; }
  [[nodiscard]] std::span<const std::uint64_t> packed_row(Message m) const;
  [[nodiscard]] std::span<const Symbol> symbol_row(Message m) const;
  [[nodiscard]] const detail::ChunkIndex* chunk_index() const noexcept { return index_.get(); }

  friend bool operator==(const Codebook& a, const Codebook& b) {
    return a.packed_ == b.packed_ && a.spec_.block_length == b.spec_.block_length &&
           a.spec_.cardinality == b.spec_.cardinality && a.bits_ == b.bits_ && a.symbols_ == b.symbols_;
  }

 private:
  Codebook() = default;
  void allocate();
  void build_index(const CodebookLimits& limits);

  CodebookSpec spec_;
  bool packed_ = false;
  std::size_t words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
  std::vector<Symbol> symbols_;
  std::shared_ptr<const detail::ChunkIndex> index_;
};

/// Which side of the metric the codewords sit on: channel codewords are
/// source-side symbols, source codewords are reproductions.
enum class CodewordSide { source, reproduction };

/// Exhaustive distortion scan of a block against every codeword.
struct ScanResult {
  Message argmin = 0;  // lowest index among minimisers
  double min_average = 0.0;
  std::uint64_t within = 0;  // codewords at average distortion <= level, capped at 2
  Message first_within = 0;
};

ScanResult scan_codebook(const Codebook& cb, const Sequence& block, const DistortionMetric& metric,
                         CodewordSide side, double level);

Codebook build_channel_codebook(const MessageSet& messages, const Pmf& p_X, const RandomnessHandle& seed,
                                const CodebookLimits& limits = {});
Codebook build_channel_codebook(const RatePlan& plan, const Pmf& p_X, const RandomnessHandle& seed,
                                const CodebookLimits& limits = {});

Sequence channel_encode(const Codebook& cb, Message m);

enum class DecodeRule { unique_within_distortion, min_distortion };
enum class DecodeFailure { none, none_within_distortion, ambiguous };

const char* to_string(DecodeRule rule) noexcept;
const char* to_string(DecodeFailure failure) noexcept;

struct ChannelDecision {
  std::optional<Message> message;
  DecodeFailure failure = DecodeFailure::none;
  Message nearest = 0;  // min-distortion codeword, always available
  double nearest_average = 0.0;
};

ChannelDecision channel_decode(const Codebook& cb, const Sequence& y, const DistortionMetric& metric, double D,
                               DecodeRule rule = DecodeRule::unique_within_distortion);

/// A block-level channel: maps an input block to an output block.
using BlockChannel = std::function<Sequence(const Sequence& input, Rng& rng)>;

/// Memoryless channel applying `matrix` to every symbol.
BlockChannel memoryless_block_channel(StochasticMatrix matrix);

struct MbpReport {
  std::vector<Message> messages;
  std::vector<Proportion> per_message;
  Message sup_message = 0;
  Proportion sup;          // the worst message's estimate and interval
  double average = 0.0;    // mean over tested messages
  std::uint64_t none_within = 0;
  std::uint64_t ambiguous = 0;
  std::uint64_t wrong = 0;  // decoded to a different message
  std::size_t trials_per_message = 0;
};

/// Monte Carlo per-message block error rates. Message m's trials use the
/// stream root.derive(m). `messages` defaults to every message.
MbpReport mbp_estimate(const Codebook& cb, const BlockChannel& channel, const DistortionMetric& metric, double D,
                       std::size_t trials_per_message, const RandomnessHandle& root,
                       DecodeRule rule = DecodeRule::unique_within_distortion,
                       std::optional<std::vector<Message>> messages = std::nullopt);

/// Message laws used to drive the encoder in distribution tests.
enum class MessageLaw { uniform, zipf };

std::vector<Message> draw_messages(std::uint64_t cardinality, std::size_t count, MessageLaw law,
                                   const RandomnessHandle& handle, double zipf_exponent = 1.1);

/// Concatenation of channel_encode over a message stream.
Sequence encode_stream(const Codebook& cb, std::span<const Message> messages);
/// Like encode_stream, but block b is encoded with its own codebook draw,
/// seeded spec.seed.derive(b): the codebook ensemble rather than one codebook.
Sequence ensemble_encode_stream(const CodebookSpec& spec, std::span<const Message> messages);

Codebook build_source_codebook(const RatePlan& plan, const Pmf& x_pmf, const DistortionMetric& metric,
                               const RandomnessHandle& seed, const CodebookLimits& limits = {});
/// Variant with an explicit generation marginal.
Codebook build_source_codebook(const MessageSet& messages, const Pmf& generation_marginal,
                               const RandomnessHandle& seed, const CodebookLimits& limits = {});

/// Index of the codeword closest to x; lowest index wins ties.
Message source_encode(const Codebook& cb, const Sequence& x, const DistortionMetric& metric);
Sequence source_decode(const Codebook& cb, Message m);

}  // namespace sepnet
