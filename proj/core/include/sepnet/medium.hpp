#pragma once

// Medium kernels: the stochastic law mapping every user's past medium
// inputs (and a hidden state) to current medium outputs.

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepnet/probcore.hpp"

namespace sepnet {

using UserId = std::size_t;

/// Ordered (sender, receiver) pair.
struct UserPair {
  UserId from = 0;
  UserId to = 0;

  friend auto operator<=>(const UserPair&, const UserPair&) = default;
};

std::string to_string(const UserPair& pair);

/// One incoming link as seen from the receiving user.
struct IncomingPort {
  UserId from = 0;
  std::size_t alphabet_size = 1;
};

/// The public face of a medium: alphabets and the layout of each user's
/// output symbol. Modems may read this; the transition law stays hidden.
class MediumPorts {
 public:
  MediumPorts(std::vector<Alphabet> inputs, std::vector<std::vector<IncomingPort>> incoming);

  [[nodiscard]] std::size_t num_users() const noexcept { return inputs_.size(); }
  [[nodiscard]] const Alphabet& input_alphabet(UserId user) const { return inputs_.at(user); }
  [[nodiscard]] const Alphabet& output_alphabet(UserId user) const { return outputs_.at(user); }
  [[nodiscard]] std::span<const IncomingPort> incoming(UserId user) const { return incoming_.at(user); }

  /// Position of the link from `from` inside user's output, if present.
  [[nodiscard]] std::optional<std::size_t> port_index(UserId user, UserId from) const;

  /// Output symbols are mixed radix over incoming ports (first port least
  /// significant).
  [[nodiscard]] Symbol component(UserId user, Symbol output, std::size_t port) const;
  [[nodiscard]] Symbol compose(UserId user, std::span<const Symbol> components) const;

 private:
  std::vector<Alphabet> inputs_;
  std::vector<std::vector<IncomingPort>> incoming_;
  std::vector<Alphabet> outputs_;
};

/// A running medium instance. step() receives iota(tau-1) for all users and
/// writes o(tau); hidden state is threaded internally.
class MediumRun {
 public:
  virtual ~MediumRun() = default;
  virtual void step(std::span<const Symbol> previous_inputs, std::span<Symbol> outputs) = 0;
};

class MediumKernel {
 public:
  virtual ~MediumKernel() = default;

  [[nodiscard]] virtual const MediumPorts& ports() const = 0;
  [[nodiscard]] virtual std::unique_ptr<MediumRun> start(const RandomnessHandle& noise) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;

  [[nodiscard]] std::size_t num_users() const { return ports().num_users(); }
};

/// A directed link whose output law may depend on a hidden per-link Markov
/// state and on the previous input of one interfering user.
struct LinkLaw {
  UserPair link;
  std::optional<UserId> interferer;
  /// emissions[state][interferer symbol] maps the sender's input to the
  /// link output. Without an interferer the inner vector has one entry.
  std::vector<std::vector<StochasticMatrix>> emissions;
  /// Hidden state chain (1x1 identity for memoryless links).
  StochasticMatrix state_transition = StochasticMatrix::identity(1);
  Pmf initial_state = Pmf::point_mass(1, 0);
};

/// General link-based medium. The factories below build its common cases.
std::shared_ptr<const MediumKernel> make_link_medium(std::size_t num_users,
                                                     std::vector<LinkLaw> links,
                                                     std::vector<std::size_t> input_alphabet_sizes = {});

/// Memoryless medium applying each link's matrix independently per step.
std::shared_ptr<const MediumKernel> make_dmc_medium(std::size_t num_users,
                                                    const std::map<UserPair, StochasticMatrix>& links,
                                                    std::vector<std::size_t> input_alphabet_sizes = {});

/// Per-link hidden-state rule for make_markov_medium.
struct MarkovLinkRule {
  UserPair link;
  StochasticMatrix state_transition;
  std::vector<StochasticMatrix> emissions;  // one per state
  Pmf initial_state;
};

/// Stateful medium; every rule must use `state_count` states.
std::shared_ptr<const MediumKernel> make_markov_medium(std::size_t num_users, std::size_t state_count,
                                                       std::vector<MarkovLinkRule> rules,
                                                       std::vector<std::size_t> input_alphabet_sizes = {});

/// Two-state Gilbert-Elliott flip channel rule (state 0 good, 1 bad).
MarkovLinkRule gilbert_elliott_rule(UserPair link, double good_flip, double bad_flip,
                                    double good_to_bad, double bad_to_good,
                                    std::optional<Symbol> initial_state = std::nullopt);

}  // namespace sepnet
