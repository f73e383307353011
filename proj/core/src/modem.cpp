#include "sepnet/modem.hpp"

#include <algorithm>
#include <sstream>

#include "sepnet/error.hpp"

namespace sepnet {

namespace {

class UncodedRun final : public ModemRun {
 public:
  UncodedRun(const UncodedModemConfig& config, const ModemContext& context)
      : config_(config), ports_(*context.ports), user_(context.user) {
    if (config_.forward_from) forward_port_ = *ports_.port_index(user_, *config_.forward_from);
    for (const auto& d : config_.deliveries) delivery_ports_.push_back(*ports_.port_index(user_, d.via));
  }

  void step(const ModemView& view, ModemEmit& emit) override {
    std::fill(emit.reproductions.begin(), emit.reproductions.end(), 0U);
    emit.medium_input = 0;
    if (view.time == 0) return;
    if (config_.send_to) {
      emit.medium_input = view.prev_sources[*config_.send_to];
    } else if (forward_port_) {
      emit.medium_input = ports_.component(user_, view.prev_output, *forward_port_);
    }
    for (std::size_t k = 0; k < config_.deliveries.size(); ++k) {
      emit.reproductions[config_.deliveries[k].origin] =
          ports_.component(user_, view.prev_output, delivery_ports_[k]);
    }
  }

 private:
  UncodedModemConfig config_;
  const MediumPorts& ports_;
  UserId user_;
  std::optional<std::size_t> forward_port_;
  std::vector<std::size_t> delivery_ports_;
};

class UncodedModem final : public Modem {
 public:
  explicit UncodedModem(UncodedModemConfig config) : config_(std::move(config)) {
    if (config_.send_to && config_.forward_from) {
      throw ValidationError("uncoded modem cannot both send a source and relay a link");
    }
  }

  void validate(const ModemContext& ctx) const override {
    const auto& ports = *ctx.ports;
    const std::string who = "modem " + std::to_string(ctx.user) + ": ";
    const std::size_t input_size = ports.input_alphabet(ctx.user).size();
    if (config_.send_to) {
      const UserId j = *config_.send_to;
      if (j >= ctx.source_alphabets.size() || j == ctx.user) {
        throw ValidationError(who + "send_to names an invalid user");
      }
      if (ctx.source_alphabets[j].size() > input_size) {
        throw ValidationError(who + "source alphabet of pair " + to_string({ctx.user, j}) +
                              " does not fit the medium input alphabet");
      }
    }
    if (config_.forward_from) {
      const auto port = ports.port_index(ctx.user, *config_.forward_from);
      if (!port) throw ValidationError(who + "no incoming link to forward from");
      if (ports.incoming(ctx.user)[*port].alphabet_size > input_size) {
        throw ValidationError(who + "forwarded link alphabet does not fit the medium input alphabet");
      }
    }
    for (const auto& d : config_.deliveries) {
      if (d.origin >= ctx.repro_alphabets.size() || d.origin == ctx.user) {
        throw ValidationError(who + "delivery names an invalid origin");
      }
      const auto port = ports.port_index(ctx.user, d.via);
      if (!port) {
        throw ValidationError(who + "no incoming link from user " + std::to_string(d.via));
      }
      if (ports.incoming(ctx.user)[*port].alphabet_size > ctx.repro_alphabets[d.origin].size()) {
        throw ValidationError(who + "link alphabet does not fit the reproduction alphabet of pair " +
                              to_string({d.origin, ctx.user}));
      }
    }
  }

  std::unique_ptr<ModemRun> start(const ModemContext& context) const override {
    return std::make_unique<UncodedRun>(config_, context);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "uncoded";
    if (config_.send_to) os << " send->" << *config_.send_to;
    if (config_.forward_from) os << " relay<-" << *config_.forward_from;
    for (const auto& d : config_.deliveries) os << " deliver(" << d.origin << " via " << d.via << ")";
    return os.str();
  }

 private:
  UncodedModemConfig config_;
};

class IdleRun final : public ModemRun {
 public:
  void step(const ModemView&, ModemEmit& emit) override {
    emit.medium_input = 0;
    std::fill(emit.reproductions.begin(), emit.reproductions.end(), 0U);
  }
};

class IdleModem final : public Modem {
 public:
  void validate(const ModemContext&) const override {}
  std::unique_ptr<ModemRun> start(const ModemContext&) const override { return std::make_unique<IdleRun>(); }
  std::string describe() const override { return "idle"; }
};

}  // namespace

std::shared_ptr<const Modem> make_uncoded_modem(UncodedModemConfig config) {
  return std::make_shared<UncodedModem>(std::move(config));
}

std::shared_ptr<const Modem> make_idle_modem() { return std::make_shared<IdleModem>(); }

}  // namespace sepnet
