#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sepnet/harness.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out = "results";
  bool overwrite = false;
};

void add_common(CLI::App* cmd, Flags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "override the configured root seed");
  cmd->add_option("--trials", f.trials, "override the configured Monte Carlo trial count")
      ->check(CLI::Range(std::size_t{1}, std::size_t{100'000'000}));
  cmd->add_option("--out", f.out, "results directory")->capture_default_str();
  cmd->add_flag("--overwrite", f.overwrite, "reuse an existing experiment directory");
}

sepnet::RunOptions to_options(const Flags& f) {
  sepnet::RunOptions o;
  o.seed = f.seed;
  o.trials = f.trials;
  o.out_dir = f.out;
  o.overwrite = f.overwrite;
  return o;
}

void report(const sepnet::RunOutcome& out) {
  std::cout << out.summary;
  std::cout << "wrote " << out.directory.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sepnet: separation of source and channel coding on simulated networks"};
  app.require_subcommand(1);
  Flags flags;
  auto* rd = app.add_subcommand("rd", "rate-distortion sweep of a source");
  auto* baseline = app.add_subcommand("baseline", "measure the existing system's distortion guarantees");
  auto* separate = app.add_subcommand("separate", "apply the separation transform and measure the result");
  auto* verify = app.add_subcommand("verify", "run the built-in property suites");
  for (auto* cmd : {rd, baseline, separate}) add_common(cmd, flags, true);
  add_common(verify, flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sepnet::exit_code::success : sepnet::exit_code::validation;
  }

  try {
    const sepnet::RunOptions options = to_options(flags);
    std::optional<sepnet::ExperimentConfig> config;
    if (!flags.config.empty()) config = sepnet::load_config(flags.config);

    sepnet::RunOutcome out;
    if (rd->parsed()) {
      out = sepnet::cmd_rd(*config, options);
    } else if (baseline->parsed()) {
      out = sepnet::cmd_baseline(*config, options);
    } else if (separate->parsed()) {
      out = sepnet::cmd_separate(*config, options);
    } else {
      out = sepnet::cmd_verify(config, options);
    }
    report(out);
    return out.status;
  } catch (const sepnet::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sepnet::exit_code::validation;
  } catch (const sepnet::InterferenceDetected& e) {
    std::cerr << "interference detected: " << e.what() << "\n";
    return sepnet::exit_code::acceptance;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return sepnet::exit_code::runtime;
  }
}
