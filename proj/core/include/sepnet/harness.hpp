#pragma once

// Experiment configuration, orchestration and result persistence behind
// the sepnet command line tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sepnet/error.hpp"
#include "sepnet/separation.hpp"

namespace sepnet {

/// A configuration problem; the message names the offending key.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct PairConfig {
  UserPair pair;
  Pmf source = Pmf::point_mass(1, 0);
  std::size_t latency = 0;
  DistortionMetric metric = DistortionMetric::hamming(1);
  double D = 0.0;
  std::optional<double> D_prime;
};

struct RdConfig {
  Pmf source = Pmf::point_mass(1, 0);
  DistortionMetric metric = DistortionMetric::hamming(1);
  std::vector<double> grid;
};

struct ExperimentConfig {
  std::string name;
  std::string canonical;  // key-sorted JSON text
  std::string digest;     // 16 hex digits over `canonical`
  std::uint64_t seed = 0;
  std::size_t users = 0;
  std::string medium_kind;
  std::shared_ptr<const MediumKernel> medium;
  std::vector<std::shared_ptr<const Modem>> modems;
  std::size_t warmup = 0;
  std::vector<PairConfig> pairs;
  std::vector<UserPair> separate;
  std::vector<std::size_t> block_lengths;
  std::size_t baseline_block_length = 0;
  std::size_t trials = 1000;
  std::size_t guarantee_trials = 1000;
  std::size_t noninterference_samples = 100000;
  std::size_t distribution_samples = 20000;
  std::size_t mbp_messages = 8;
  std::size_t mbp_trials_per_message = 100;
  CodebookLimits limits;
  DecodeRule rule = DecodeRule::unique_within_distortion;
  bool remeasure = true;
  RdConfig rd;

  [[nodiscard]] const PairConfig& pair(UserPair p) const;
  /// The configured network measured at block length n.
  [[nodiscard]] NetworkSystem system(std::size_t block_length) const;
};

/// Parses JSON text; `origin` is used in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stable under key reordering and whitespace.
std::string config_digest(const std::string& json_text);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::filesystem::path out_dir = "results";
  bool overwrite = false;
};

struct RunOutcome {
  int status = 0;  // process exit code
  std::string experiment_id;
  std::filesystem::path directory;
  std::string record;  // deterministic JSON document
  std::string summary;
};

namespace exit_code {
inline constexpr int success = 0;
inline constexpr int validation = 1;
inline constexpr int runtime = 2;
inline constexpr int acceptance = 3;
}  // namespace exit_code

/// Rate-distortion sweep; rows with infeasible D are reported, not fatal.
std::string rd_csv(const RdConfig& rd);

/// The deterministic record of each command, without touching the disk.
std::string baseline_record(const ExperimentConfig& config, const RunOptions& options);
std::string separate_record(const ExperimentConfig& config, const RunOptions& options);

RunOutcome cmd_rd(const ExperimentConfig& config, const RunOptions& options);
RunOutcome cmd_baseline(const ExperimentConfig& config, const RunOptions& options);
RunOutcome cmd_separate(const ExperimentConfig& config, const RunOptions& options);
/// Built-in property suites; also plan-checks the config when one is given.
RunOutcome cmd_verify(const std::optional<ExperimentConfig>& config, const RunOptions& options);

}  // namespace sepnet
