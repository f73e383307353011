#pragma once

// Separation transform: wraps the sender and receiver modems of one pair
// in a source code and an embedding channel code, leaving every other modem
// and the medium untouched.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sepnet/codec.hpp"
#include "sepnet/netmodel.hpp"

namespace sepnet {

struct PairTarget {
  UserPair pair;
  DistortionMetric metric;
  double level = 0.0;   // D, the level the existing system guarantees
  double target = 0.0;  // D', the level the separated system aims for

  PairTarget(UserPair pair, DistortionMetric metric, double level, double target);
};

struct SeparationOptions {
  std::size_t block_length = 32;  // n = n'
  std::optional<double> psi;
  std::optional<double> alpha;
  DecodeRule rule = DecodeRule::unique_within_distortion;
  CodebookLimits limits;
  /// Generation law of the channel codebook. Anything other than the
  /// source law breaks the construction; only negative controls set it.
  std::optional<Pmf> channel_pmf_override;
};

struct SeparationPlan {
  PairTarget target;
  RatePlan rates;
  Pmf source_pmf;
  GuaranteeReport guarantee;
  DecodeRule rule = DecodeRule::unique_within_distortion;
  std::shared_ptr<const Codebook> channel_codebook;
  std::shared_ptr<const Codebook> source_codebook;
  std::shared_ptr<const Modem> original_sender;
  std::shared_ptr<const Modem> original_receiver;
  std::shared_ptr<const Modem> sender;
  std::shared_ptr<const Modem> receiver;
  std::size_t inner_latency = 0;  // latency of the existing pair
  std::size_t outer_latency = 0;  // 2n + inner_latency

  [[nodiscard]] std::size_t block_length() const noexcept { return rates.n; }
};

/// Builds the plan from the guarantee and the pair's source statistics only;
/// the medium is never consulted. Codebooks are drawn from `codebook_seed`,
/// the shared randomness both ends regenerate them from.
SeparationPlan plan_separation(const NetworkSystem& system, const GuaranteeReport& guarantee,
                               const PairTarget& target, const SeparationOptions& options,
                               const RandomnessHandle& codebook_seed);

/// Wraps an arbitrary modem as the sender or receiver of `plan`.
std::shared_ptr<const Modem> make_separated_sender(const SeparationPlan& plan, std::shared_ptr<const Modem> inner);
std::shared_ptr<const Modem> make_separated_receiver(const SeparationPlan& plan,
                                                     std::shared_ptr<const Modem> inner);

/// Installs plan.sender and plan.receiver. Every other modem is kept as the
/// same object; the pair's latency becomes plan.outer_latency.
NetworkSystem apply_separation(const NetworkSystem& system, const SeparationPlan& plan);

struct NoninterferenceResult {
  UserPair pair;
  std::size_t samples = 0;
  TestReport order1;  // reproduction stream, single symbols
  TestReport order2;  // reproduction stream, non-overlapping pairs
  TestReport joint;   // (source, reproduction) letter pairs
  double tv_reproduction = 0.0;
  double tv_joint = 0.0;
  /// order-1 and order-2 reproduction tests both above the threshold.
  bool reproduction_passed = false;
  bool joint_passed = false;
  [[nodiscard]] bool passed() const noexcept { return reproduction_passed && joint_passed; }
  [[nodiscard]] double min_p_value() const noexcept;
};

struct NoninterferenceReport {
  double threshold = 0.01;
  RandomnessHandle root;
  std::vector<NoninterferenceResult> pairs;
  [[nodiscard]] bool passed() const noexcept;
};

/// Two-sample comparison of each untouched pair's streams in `before`
/// and `after`, each simulated for `samples` aligned symbols on
/// independent seeds.
NoninterferenceReport verify_noninterference(const NetworkSystem& before, const NetworkSystem& after,
                                             const std::vector<UserPair>& untouched, std::size_t samples,
                                             const RandomnessHandle& root, double threshold = 0.01);

struct EndToEndReport {
  GuaranteeReport guarantee;
  /// Separated pairs only: channel failures (delivered block differs from
  /// the source-coder round trip) and source overshoot (the round trip
  /// itself misses the level).
  std::optional<Proportion> channel_error;
  std::optional<Proportion> source_overshoot;
};

EndToEndReport measure_end_to_end(const NetworkSystem& system, UserPair pair, const DistortionBudget& budget,
                                  std::size_t trials, const RandomnessHandle& root,
                                  const SeparationPlan* plan = nullptr);

/// The stream the separated sender feeds its inner modem, for `length`
/// steps of i.i.d. source input.
Sequence simulated_source_stream(const SeparationPlan& plan, std::size_t length, const RandomnessHandle& root);

/// The existing system seen as a block channel for one pair: the input
/// block replaces the source over one aligned block.
BlockChannel system_block_channel(const NetworkSystem& system, UserPair pair, std::size_t block_length);

/// One-sided two-proportion z-test p-value for "after is worse than before".
double degradation_p_value(const Proportion& before, const Proportion& after);

struct SeparationStep {
  SeparationPlan plan;
  NoninterferenceReport noninterference;
  std::vector<GuaranteeReport> remaining_before;
  std::vector<GuaranteeReport> remaining_after;
  std::vector<double> degradation_p;
};

struct NetworkSeparationOptions {
  SeparationOptions separation;
  std::size_t guarantee_trials = 1000;
  bool remeasure = true;
  std::size_t noninterference_samples = 100000;
  double report_threshold = 0.01;
  /// A step aborts when any check falls below this p-value.
  double abort_threshold = 1e-4;
};

struct NetworkSeparation {
  NetworkSystem system;
  std::vector<SeparationStep> steps;
};

/// Separates the targets one pair at a time, re-checking the remaining
/// pairs after each step. Throws InterferenceDetected on a failed check.
NetworkSeparation separate_network(const NetworkSystem& system, const std::vector<PairTarget>& targets,
                                   const NetworkSeparationOptions& options, const RandomnessHandle& root);

/// Codebook seed used for a pair; independent of the order pairs are
/// processed in.
RandomnessHandle pair_codebook_seed(const RandomnessHandle& root, UserPair pair);

}  // namespace sepnet
