#pragma once

// Modems: each user's stochastic protocol box. At step tau a modem sees its
// sources and medium output up to tau-1 and emits its medium input and the
// reproductions of the sources destined for it.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepnet/medium.hpp"
#include "sepnet/probcore.hpp"

namespace sepnet {

struct ModemView {
  std::int64_t time = 0;                 // tau; nothing is known at tau = 0
  std::span<const Symbol> prev_sources;  // x_{i,j}(tau-1), indexed by j
  Symbol prev_output = 0;                // o_i(tau-1)
};

struct ModemEmit {
  Symbol medium_input = 0;            // iota_i(tau)
  std::span<Symbol> reproductions;    // y_{j,i}(tau), indexed by j
};

/// What a modem may know about its surroundings when it starts.
struct ModemContext {
  UserId user = 0;
  std::size_t horizon = 0;  // number of steps in this run
  const MediumPorts* ports = nullptr;
  std::vector<Alphabet> source_alphabets;  // x_{i,j} alphabets, indexed by j
  std::vector<Alphabet> repro_alphabets;   // y_{j,i} alphabets, indexed by j
  RandomnessHandle common;                 // shared randomness C
  RandomnessHandle local;                  // this modem's private randomness
};

class ModemRun {
 public:
  virtual ~ModemRun() = default;
  virtual void step(const ModemView& view, ModemEmit& emit) = 0;
};

/// Immutable modem definition; start() creates per-run state.
class Modem {
 public:
  virtual ~Modem() = default;
  /// Throws ValidationError if the modem cannot operate in this context.
  virtual void validate(const ModemContext& context) const = 0;
  [[nodiscard]] virtual std::unique_ptr<ModemRun> start(const ModemContext& context) const = 0;
  [[nodiscard]] virtual std::string describe() const = 0;
};

/// Uncoded forwarding modem. Optionally transmits one of its sources
/// verbatim, or relays one incoming link, and delivers incoming link
/// symbols as reproductions.
struct UncodedModemConfig {
  struct Delivery {
    UserId origin = 0;  // reproduce x_{origin, me}
    UserId via = 0;     // taken from the incoming link from `via`
  };
  std::optional<UserId> send_to;
  std::optional<UserId> forward_from;
  std::vector<Delivery> deliveries;
};

std::shared_ptr<const Modem> make_uncoded_modem(UncodedModemConfig config);

/// Emits nothing useful: input 0 and all-zero reproductions.
std::shared_ptr<const Modem> make_idle_modem();

}  // namespace sepnet
