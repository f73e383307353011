#pragma once

// The N-user system: medium, modems, i.i.d. sources per ordered pair, and
// a discrete-time rollout engine.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sepnet/medium.hpp"
#include "sepnet/modem.hpp"
#include "sepnet/probcore.hpp"
#include "sepnet/ratedist.hpp"

namespace sepnet {

/// An ordered pair that carries an i.i.d. source. Pairs not listed carry
/// the constant source 0 over a one-letter alphabet.
struct PairSpec {
  UserPair pair;
  Pmf source;
  Alphabet reproduction;
  /// Reproduction delay: x[m] is reproduced as y(m + latency).
  std::size_t latency = 0;

  PairSpec(UserPair pair, Pmf source, std::size_t latency);
  PairSpec(UserPair pair, Pmf source, Alphabet reproduction, std::size_t latency);
};

class NetworkSystem {
 public:
  NetworkSystem(std::shared_ptr<const MediumKernel> medium, std::vector<std::shared_ptr<const Modem>> modems,
                std::vector<PairSpec> pairs, UserPair pair_of_interest, std::size_t block_length,
                std::size_t horizon = 0, std::size_t warmup = 0);

  [[nodiscard]] std::size_t num_users() const noexcept { return modems_.size(); }
  [[nodiscard]] const std::shared_ptr<const MediumKernel>& medium() const noexcept { return medium_; }
  [[nodiscard]] const std::vector<std::shared_ptr<const Modem>>& modems() const noexcept { return modems_; }
  [[nodiscard]] const std::shared_ptr<const Modem>& modem(UserId user) const { return modems_.at(user); }
  [[nodiscard]] std::span<const PairSpec> pairs() const noexcept { return pairs_; }
  [[nodiscard]] const PairSpec& pair(UserPair p) const;
  [[nodiscard]] bool has_pair(UserPair p) const noexcept;
  [[nodiscard]] UserPair pair_of_interest() const noexcept { return pair_of_interest_; }
  [[nodiscard]] std::size_t block_length() const noexcept { return block_length_; }
  [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }
  [[nodiscard]] std::size_t warmup() const noexcept { return warmup_; }

  [[nodiscard]] NetworkSystem with_modem(UserId user, std::shared_ptr<const Modem> modem) const;
  [[nodiscard]] NetworkSystem with_latency(UserPair p, std::size_t latency) const;
  [[nodiscard]] NetworkSystem with_pair_of_interest(UserPair p) const;
  [[nodiscard]] NetworkSystem with_block_length(std::size_t n) const;
  [[nodiscard]] NetworkSystem with_horizon(std::size_t horizon) const;

  /// Builds the context each modem is started with.
  [[nodiscard]] ModemContext modem_context(UserId user, std::size_t horizon, const RandomnessHandle& common,
                                           const RandomnessHandle& local) const;

  /// Alphabet and wiring checks; throws ValidationError before any
  /// simulation starts.
  void validate() const;

  /// First source time of the first complete block at or after warmup.
  [[nodiscard]] std::size_t first_block_start(std::size_t block_length) const noexcept;

 private:
  std::shared_ptr<const MediumKernel> medium_;
  std::vector<std::shared_ptr<const Modem>> modems_;
  std::vector<PairSpec> pairs_;
  UserPair pair_of_interest_;
  std::size_t block_length_;
  std::size_t horizon_;
  std::size_t warmup_;
};

/// Distinct streams for sources, medium noise, common randomness C and the
/// modems' private randomness.
struct RolloutSeeds {
  RandomnessHandle sources;
  RandomnessHandle medium;
  RandomnessHandle common;
  RandomnessHandle modems;

  static RolloutSeeds from_root(const RandomnessHandle& root);
};

/// Raw source and reproduction streams of one pair over the whole horizon.
struct PairTrace {
  PairSpec spec;
  Sequence source;        // x(t), t = 0..T-1
  Sequence reproduction;  // y(t), t = 0..T-1

  /// Number of source times m with m + latency < T.
  [[nodiscard]] std::size_t aligned_length() const noexcept;
  /// x[m] for m in [start, aligned_length()).
  [[nodiscard]] Sequence aligned_source(std::size_t start = 0) const;
  /// y(m + latency) for m in [start, aligned_length()).
  [[nodiscard]] Sequence aligned_reproduction(std::size_t start = 0) const;
  /// Block b of length n: source times [b n, (b+1) n), aligned.
  [[nodiscard]] BlockPair block(std::size_t b, std::size_t n) const;
  /// Every complete aligned block starting at or after `start`.
  [[nodiscard]] std::vector<BlockPair> blocks(std::size_t n, std::size_t start = 0) const;
};

struct Trajectory {
  std::size_t horizon = 0;
  std::vector<PairTrace> pairs;
  std::vector<Sequence> medium_inputs;   // iota_i(t)
  std::vector<Sequence> medium_outputs;  // o_i(t)

  [[nodiscard]] const PairTrace& pair(UserPair p) const;
};

/// Replaces one source symbol. Used for causality experiments and to push
/// a chosen block through an existing system.
struct SourcePerturbation {
  UserPair pair;
  std::size_t time = 0;
  Symbol value = 0;
};

/// Simulates tau = 0..horizon-1. Each step every modem fires on strictly
/// past information, then the medium fires on iota(tau-1).
Trajectory rollout(const NetworkSystem& system, std::size_t horizon, const RolloutSeeds& seeds,
                   std::span<const SourcePerturbation> overrides = {});
/// Uses system.horizon().
Trajectory rollout(const NetworkSystem& system, const RolloutSeeds& seeds);

/// Monte Carlo estimate of the excess-distortion probability for one pair:
/// the guarantee the existing system delivers.
struct GuaranteeReport {
  UserPair pair;
  std::size_t block_length = 0;
  double level = 0.0;
  Proportion excess;
  double mean_distortion = 0.0;
  RandomnessHandle root;
};

/// One independent rollout per trial, measuring the first complete block of
/// `pair` (defaults to the pair of interest) at the system's block length.
std::vector<BlockPair> sample_blocks(const NetworkSystem& system, UserPair pair, std::size_t block_length,
                                     std::size_t trials, const RandomnessHandle& root);

GuaranteeReport baseline_guarantee(const NetworkSystem& system, const DistortionBudget& budget,
                                   std::size_t trials, const RandomnessHandle& root,
                                   std::optional<UserPair> pair = std::nullopt);

/// Stable 64-bit fingerprint of every stream in a trajectory.
std::uint64_t trajectory_digest(const Trajectory& trajectory);

}  // namespace sepnet
