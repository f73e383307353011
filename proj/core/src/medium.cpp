#include "sepnet/medium.hpp"

#include <algorithm>
#include <sstream>

#include "sepnet/error.hpp"

namespace sepnet {

std::string to_string(const UserPair& pair) {
  return "(" + std::to_string(pair.from) + "," + std::to_string(pair.to) + ")";
}

MediumPorts::MediumPorts(std::vector<Alphabet> inputs, std::vector<std::vector<IncomingPort>> incoming)
    : inputs_(std::move(inputs)), incoming_(std::move(incoming)) {
  if (inputs_.size() != incoming_.size()) throw ValidationError("medium ports: user count mismatch");
  outputs_.reserve(inputs_.size());
  for (const auto& ports : incoming_) {
    std::size_t size = 1;
    for (const auto& p : ports) {
      if (p.alphabet_size == 0) throw ValidationError("medium ports: empty link alphabet");
      size *= p.alphabet_size;
    }
    outputs_.emplace_back(size);
  }
}

std::optional<std::size_t> MediumPorts::port_index(UserId user, UserId from) const {
  const auto& ports = incoming_.at(user);
  for (std::size_t k = 0; k < ports.size(); ++k) {
    if (ports[k].from == from) return k;
  }
  return std::nullopt;
}

Symbol MediumPorts::component(UserId user, Symbol output, std::size_t port) const {
  const auto& ports = incoming_.at(user);
  Symbol rest = output;
  for (std::size_t k = 0; k < port; ++k) rest /= static_cast<Symbol>(ports[k].alphabet_size);
  return rest % static_cast<Symbol>(ports.at(port).alphabet_size);
}

Symbol MediumPorts::compose(UserId user, std::span<const Symbol> components) const {
  const auto& ports = incoming_.at(user);
  Symbol out = 0;
  Symbol radix = 1;
  for (std::size_t k = 0; k < ports.size(); ++k) {
    out += components[k] * radix;
    radix *= static_cast<Symbol>(ports[k].alphabet_size);
  }
  return out;
}

namespace {

class LinkMediumKernel;

class LinkMediumRun final : public MediumRun {
 public:
  LinkMediumRun(const LinkMediumKernel& kernel, const RandomnessHandle& noise);
  void step(std::span<const Symbol> previous_inputs, std::span<Symbol> outputs) override;

 private:
  const LinkMediumKernel& kernel_;
  std::vector<Rng> link_rngs_;
  std::vector<Symbol> states_;
  std::vector<std::vector<Symbol>> components_;
};

class LinkMediumKernel final : public MediumKernel {
 public:
  LinkMediumKernel(std::size_t num_users, std::vector<LinkLaw> links, std::vector<std::size_t> input_sizes)
      : links_(std::move(links)), ports_(build_ports(num_users, links_, std::move(input_sizes))) {
    // Port position of each link inside its receiver's output.
    slot_.reserve(links_.size());
    for (const auto& law : links_) slot_.push_back(*ports_.port_index(law.link.to, law.link.from));
  }

  const MediumPorts& ports() const override { return ports_; }

  std::unique_ptr<MediumRun> start(const RandomnessHandle& noise) const override {
    return std::make_unique<LinkMediumRun>(*this, noise);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "link medium, " << ports_.num_users() << " users, " << links_.size() << " links";
    return os.str();
  }

  const std::vector<LinkLaw>& links() const noexcept { return links_; }
  std::size_t slot(std::size_t link) const noexcept { return slot_[link]; }

 private:
  static MediumPorts build_ports(std::size_t num_users, std::vector<LinkLaw>& links,
                                 std::vector<std::size_t> input_sizes) {
    if (num_users == 0) throw ValidationError("medium needs at least one user");
    if (!input_sizes.empty() && input_sizes.size() != num_users) {
      throw ValidationError("input alphabet sizes must be given for every user");
    }
    std::vector<std::size_t> inferred(num_users, 0);
    auto claim = [&](UserId user, std::size_t size) {
      if (inferred[user] != 0 && inferred[user] != size) {
        throw ValidationError("user " + std::to_string(user) +
                              " has links disagreeing on its input alphabet size");
      }
      inferred[user] = size;
    };

    std::sort(links.begin(), links.end(),
              [](const LinkLaw& a, const LinkLaw& b) { return a.link < b.link; });
    for (std::size_t k = 0; k + 1 < links.size(); ++k) {
      if (links[k].link == links[k + 1].link) {
        throw ValidationError("duplicate link " + to_string(links[k].link));
      }
    }

    std::vector<std::vector<IncomingPort>> incoming(num_users);
    for (const auto& law : links) {
      const auto [from, to] = law.link;
      if (from >= num_users || to >= num_users) {
        throw ValidationError("link " + to_string(law.link) + " references an unknown user");
      }
      if (from == to) throw ValidationError("self link " + to_string(law.link));
      const std::size_t states = law.state_transition.inputs();
      if (law.state_transition.outputs() != states || law.initial_state.size() != states) {
        throw ValidationError("link " + to_string(law.link) + ": state chain dimensions disagree");
      }
      if (law.emissions.size() != states) {
        throw ValidationError("link " + to_string(law.link) + ": need one emission set per state");
      }
      const std::size_t variants = law.emissions.front().size();
      if (variants == 0) throw ValidationError("link " + to_string(law.link) + ": no emission matrix");
      if (law.interferer) {
        if (*law.interferer >= num_users) {
          throw ValidationError("link " + to_string(law.link) + ": unknown interferer");
        }
        claim(*law.interferer, variants);
      } else if (variants != 1) {
        throw ValidationError("link " + to_string(law.link) + ": several matrices but no interferer");
      }
      const std::size_t in = law.emissions.front().front().inputs();
      const std::size_t out = law.emissions.front().front().outputs();
      for (const auto& per_state : law.emissions) {
        if (per_state.size() != variants) {
          throw ValidationError("link " + to_string(law.link) + ": ragged emission sets");
        }
        for (const auto& m : per_state) {
          if (m.inputs() != in || m.outputs() != out) {
            throw ValidationError("link " + to_string(law.link) + ": emission shapes disagree");
          }
        }
      }
      claim(from, in);
      incoming[to].push_back(IncomingPort{from, out});
    }

    std::vector<Alphabet> inputs;
    inputs.reserve(num_users);
    for (UserId u = 0; u < num_users; ++u) {
      std::size_t size = inferred[u] == 0 ? 1 : inferred[u];
      if (!input_sizes.empty()) {
        if (inferred[u] != 0 && input_sizes[u] != inferred[u]) {
          throw ValidationError("user " + std::to_string(u) +
                                ": declared input alphabet disagrees with its links");
        }
        size = input_sizes[u];
      }
      inputs.emplace_back(size);
    }
    return MediumPorts(std::move(inputs), std::move(incoming));
  }

  std::vector<LinkLaw> links_;
  MediumPorts ports_;
  std::vector<std::size_t> slot_;
};

LinkMediumRun::LinkMediumRun(const LinkMediumKernel& kernel, const RandomnessHandle& noise)
    : kernel_(kernel) {
  const auto& links = kernel.links();
  link_rngs_.reserve(links.size());
  states_.reserve(links.size());
  for (const auto& law : links) {
    // One stream per link keyed by the link itself, so adding links never
    // perturbs the noise of existing ones.
    link_rngs_.emplace_back(noise.derive(law.link.from * 1'000'003ULL + law.link.to));
    states_.push_back(law.initial_state.draw(link_rngs_.back()));
  }
  const auto& ports = kernel.ports();
  components_.resize(ports.num_users());
  for (UserId u = 0; u < ports.num_users(); ++u) components_[u].assign(ports.incoming(u).size(), 0);
}

void LinkMediumRun::step(std::span<const Symbol> previous_inputs, std::span<Symbol> outputs) {
  const auto& links = kernel_.links();
  for (std::size_t k = 0; k < links.size(); ++k) {
    const auto& law = links[k];
    Rng& rng = link_rngs_[k];
    const std::size_t variant = law.interferer ? previous_inputs[*law.interferer] : 0;
    const auto& matrix = law.emissions[states_[k]][variant];
    components_[law.link.to][kernel_.slot(k)] = matrix.draw(previous_inputs[law.link.from], rng);
    states_[k] = law.state_transition.draw(states_[k], rng);
  }
  const auto& ports = kernel_.ports();
  for (UserId u = 0; u < ports.num_users(); ++u) outputs[u] = ports.compose(u, components_[u]);
}

}  // namespace

std::shared_ptr<const MediumKernel> make_link_medium(std::size_t num_users, std::vector<LinkLaw> links,
                                                     std::vector<std::size_t> input_alphabet_sizes) {
  return std::make_shared<LinkMediumKernel>(num_users, std::move(links), std::move(input_alphabet_sizes));
}

std::shared_ptr<const MediumKernel> make_dmc_medium(std::size_t num_users,
                                                    const std::map<UserPair, StochasticMatrix>& links,
                                                    std::vector<std::size_t> input_alphabet_sizes) {
  std::vector<LinkLaw> laws;
  laws.reserve(links.size());
  for (const auto& [pair, matrix] : links) {
    LinkLaw law;
    law.link = pair;
    law.emissions = {{matrix}};
    laws.push_back(std::move(law));
  }
  return make_link_medium(num_users, std::move(laws), std::move(input_alphabet_sizes));
}

std::shared_ptr<const MediumKernel> make_markov_medium(std::size_t num_users, std::size_t state_count,
                                                       std::vector<MarkovLinkRule> rules,
                                                       std::vector<std::size_t> input_alphabet_sizes) {
  if (state_count == 0) throw ValidationError("markov medium needs at least one state");
  std::vector<LinkLaw> laws;
  laws.reserve(rules.size());
  for (auto& rule : rules) {
    if (rule.state_transition.inputs() != state_count || rule.emissions.size() != state_count ||
        rule.initial_state.size() != state_count) {
      throw ValidationError("markov rule for link " + to_string(rule.link) + " does not use " +
                            std::to_string(state_count) + " states");
    }
    LinkLaw law;
    law.link = rule.link;
    law.state_transition = std::move(rule.state_transition);
    law.initial_state = std::move(rule.initial_state);
    for (auto& m : rule.emissions) law.emissions.push_back({std::move(m)});
    laws.push_back(std::move(law));
  }
  return make_link_medium(num_users, std::move(laws), std::move(input_alphabet_sizes));
}

MarkovLinkRule gilbert_elliott_rule(UserPair link, double good_flip, double bad_flip, double good_to_bad,
                                    double bad_to_good, std::optional<Symbol> initial_state) {
  StochasticMatrix transition({{1.0 - good_to_bad, good_to_bad}, {bad_to_good, 1.0 - bad_to_good}});
  Pmf initial = Pmf::uniform(2);
  if (initial_state) {
    initial = Pmf::point_mass(2, *initial_state);
  } else if (good_to_bad + bad_to_good > 0.0) {
    // Start from the stationary law of the state chain.
    const double pi_bad = good_to_bad / (good_to_bad + bad_to_good);
    initial = Pmf({1.0 - pi_bad, pi_bad});
  }
  return MarkovLinkRule{link,
                        std::move(transition),
                        {StochasticMatrix::binary_symmetric(good_flip), StochasticMatrix::binary_symmetric(bad_flip)},
                        std::move(initial)};
}

}  // namespace sepnet
