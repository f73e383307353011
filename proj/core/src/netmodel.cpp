#include "sepnet/netmodel.hpp"

#include <algorithm>

#include "sepnet/error.hpp"

namespace sepnet {

PairSpec::PairSpec(UserPair pair_, Pmf source_, std::size_t latency_)
    : pair(pair_), source(std::move(source_)), reproduction(source.alphabet()), latency(latency_) {}

PairSpec::PairSpec(UserPair pair_, Pmf source_, Alphabet reproduction_, std::size_t latency_)
    : pair(pair_), source(std::move(source_)), reproduction(reproduction_), latency(latency_) {}

NetworkSystem::NetworkSystem(std::shared_ptr<const MediumKernel> medium,
                             std::vector<std::shared_ptr<const Modem>> modems, std::vector<PairSpec> pairs,
                             UserPair pair_of_interest, std::size_t block_length, std::size_t horizon,
                             std::size_t warmup)
    : medium_(std::move(medium)),
      modems_(std::move(modems)),
      pairs_(std::move(pairs)),
      pair_of_interest_(pair_of_interest),
      block_length_(block_length),
      horizon_(horizon),
      warmup_(warmup) {
  if (!medium_) throw ValidationError("network needs a medium");
  if (block_length_ == 0) throw ValidationError("block length must be at least 1");
  std::sort(pairs_.begin(), pairs_.end(), [](const PairSpec& a, const PairSpec& b) { return a.pair < b.pair; });
  for (std::size_t k = 0; k + 1 < pairs_.size(); ++k) {
    if (pairs_[k].pair == pairs_[k + 1].pair) {
      throw ValidationError("pair " + to_string(pairs_[k].pair) + " declared twice");
    }
  }
}

const PairSpec& NetworkSystem::pair(UserPair p) const {
  const auto it = std::lower_bound(pairs_.begin(), pairs_.end(), p,
                                   [](const PairSpec& s, const UserPair& q) { return s.pair < q; });
  if (it == pairs_.end() || !(it->pair == p)) throw ValidationError("no source declared for pair " + to_string(p));
  return *it;
}

bool NetworkSystem::has_pair(UserPair p) const noexcept {
  return std::any_of(pairs_.begin(), pairs_.end(), [&](const PairSpec& s) { return s.pair == p; });
}

NetworkSystem NetworkSystem::with_modem(UserId user, std::shared_ptr<const Modem> modem) const {
  NetworkSystem out = *this;
  out.modems_.at(user) = std::move(modem);
  return out;
}

NetworkSystem NetworkSystem::with_latency(UserPair p, std::size_t latency) const {
  NetworkSystem out = *this;
  for (auto& s : out.pairs_) {
    if (s.pair == p) {
      s.latency = latency;
      return out;
    }
  }
  throw ValidationError("no source declared for pair " + to_string(p));
}

NetworkSystem NetworkSystem::with_pair_of_interest(UserPair p) const {
  NetworkSystem out = *this;
  out.pair_of_interest_ = p;
  return out;
}

NetworkSystem NetworkSystem::with_block_length(std::size_t n) const {
  if (n == 0) throw ValidationError("block length must be at least 1");
  NetworkSystem out = *this;
  out.block_length_ = n;
  return out;
}

NetworkSystem NetworkSystem::with_horizon(std::size_t horizon) const {
  NetworkSystem out = *this;
  out.horizon_ = horizon;
  return out;
}

ModemContext NetworkSystem::modem_context(UserId user, std::size_t horizon, const RandomnessHandle& common,
                                          const RandomnessHandle& local) const {
  ModemContext ctx;
  ctx.user = user;
  ctx.horizon = horizon;
  ctx.ports = &medium_->ports();
  ctx.common = common;
  ctx.local = local;
  const std::size_t n = num_users();
  ctx.source_alphabets.assign(n, Alphabet(1));
  ctx.repro_alphabets.assign(n, Alphabet(1));
  for (const auto& s : pairs_) {
    if (s.pair.from == user) ctx.source_alphabets[s.pair.to] = s.source.alphabet();
    if (s.pair.to == user) ctx.repro_alphabets[s.pair.from] = s.reproduction;
  }
  return ctx;
}

void NetworkSystem::validate() const {
  if (medium_->num_users() != modems_.size()) {
    throw ValidationError("medium has " + std::to_string(medium_->num_users()) + " users but " +
                          std::to_string(modems_.size()) + " modems were given");
  }
  for (std::size_t i = 0; i < modems_.size(); ++i) {
    if (!modems_[i]) throw ValidationError("modem " + std::to_string(i) + " is missing");
  }
  for (const auto& s : pairs_) {
    if (s.pair.from >= num_users() || s.pair.to >= num_users() || s.pair.from == s.pair.to) {
      throw ValidationError("pair " + to_string(s.pair) + " does not name two distinct users");
    }
  }
  if (!has_pair(pair_of_interest_)) {
    throw ValidationError("pair of interest " + to_string(pair_of_interest_) + " has no declared source");
  }
  for (UserId u = 0; u < num_users(); ++u) {
    modems_[u]->validate(modem_context(u, horizon_, RandomnessHandle{}, RandomnessHandle{}));
  }
}

std::size_t NetworkSystem::first_block_start(std::size_t n) const noexcept {
  return ((warmup_ + n - 1) / n) * n;
}

RolloutSeeds RolloutSeeds::from_root(const RandomnessHandle& root) {
  return RolloutSeeds{root.derive(StreamTag::sources), root.derive(StreamTag::medium),
                      root.derive(StreamTag::common), root.derive(StreamTag::modem_private)};
}

std::size_t PairTrace::aligned_length() const noexcept {
  return source.size() > spec.latency ? source.size() - spec.latency : 0;
}

Sequence PairTrace::aligned_source(std::size_t start) const {
  const std::size_t len = aligned_length();
  if (start > len) throw ValidationError("aligned_source: start beyond aligned range");
  return source.slice(start, len - start);
}

Sequence PairTrace::aligned_reproduction(std::size_t start) const {
  const std::size_t len = aligned_length();
  if (start > len) throw ValidationError("aligned_reproduction: start beyond aligned range");
  return reproduction.slice(start + spec.latency, len - start);
}

BlockPair PairTrace::block(std::size_t b, std::size_t n) const {
  if ((b + 1) * n > aligned_length()) throw ValidationError("block beyond the simulated horizon");
  return BlockPair{source.slice(b * n, n), reproduction.slice(b * n + spec.latency, n)};
}

std::vector<BlockPair> PairTrace::blocks(std::size_t n, std::size_t start) const {
  std::vector<BlockPair> out;
  const std::size_t first = (start + n - 1) / n;
  for (std::size_t b = first; (b + 1) * n <= aligned_length(); ++b) out.push_back(block(b, n));
  return out;
}

const PairTrace& Trajectory::pair(UserPair p) const {
  for (const auto& t : pairs) {
    if (t.spec.pair == p) return t;
  }
  throw ValidationError("trajectory has no pair " + to_string(p));
}

Trajectory rollout(const NetworkSystem& system, std::size_t horizon, const RolloutSeeds& seeds,
                   std::span<const SourcePerturbation> overrides) {
  system.validate();
  const std::size_t users = system.num_users();
  const auto& ports = system.medium()->ports();

  auto medium = system.medium()->start(seeds.medium);
  std::vector<std::unique_ptr<ModemRun>> runs;
  runs.reserve(users);
  for (UserId u = 0; u < users; ++u) {
    const auto ctx = system.modem_context(u, horizon, seeds.common, seeds.modems.derive(u));
    runs.push_back(system.modem(u)->start(ctx));
  }

  const auto pairs = system.pairs();
  std::vector<Rng> source_rngs;
  source_rngs.reserve(pairs.size());
  for (const auto& s : pairs) source_rngs.emplace_back(seeds.sources.derive(s.pair.from * 1'000'003ULL + s.pair.to));

  Trajectory traj;
  traj.horizon = horizon;
  traj.pairs.reserve(pairs.size());
  for (const auto& s : pairs) {
    traj.pairs.push_back(PairTrace{s, Sequence(s.source.alphabet()), Sequence(s.reproduction)});
  }
  for (UserId u = 0; u < users; ++u) {
    traj.medium_inputs.emplace_back(ports.input_alphabet(u));
    traj.medium_outputs.emplace_back(ports.output_alphabet(u));
  }

  // prev_sources[i][j] = x_ij(tau-1); reproductions[i][j] = y_ji(tau).
  std::vector<std::vector<Symbol>> prev_sources(users, std::vector<Symbol>(users, 0));
  std::vector<std::vector<Symbol>> reproductions(users, std::vector<Symbol>(users, 0));
  std::vector<Symbol> prev_inputs(users, 0);
  std::vector<Symbol> inputs(users, 0);
  std::vector<Symbol> prev_outputs(users, 0);
  std::vector<Symbol> outputs(users, 0);
  std::vector<Symbol> current_sources(pairs.size(), 0);

  std::vector<SourcePerturbation> pending(overrides.begin(), overrides.end());
  std::stable_sort(pending.begin(), pending.end(),
                   [](const SourcePerturbation& a, const SourcePerturbation& b) { return a.time < b.time; });
  for (const auto& o : pending) {
    if (!system.pair(o.pair).source.alphabet().contains(o.value)) {
      throw ValidationError("source override outside the alphabet of pair " + to_string(o.pair));
    }
  }
  auto next_override = pending.begin();

  for (std::size_t tau = 0; tau < horizon; ++tau) {
    // Sources are always drawn so overrides never shift the random streams.
    for (std::size_t k = 0; k < pairs.size(); ++k) current_sources[k] = pairs[k].source.draw(source_rngs[k]);
    for (; next_override != pending.end() && next_override->time == tau; ++next_override) {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (pairs[k].pair == next_override->pair) current_sources[k] = next_override->value;
      }
    }

    for (UserId u = 0; u < users; ++u) {
      const ModemView view{static_cast<std::int64_t>(tau), prev_sources[u], prev_outputs[u]};
      ModemEmit emit{0, reproductions[u]};
      runs[u]->step(view, emit);
      if (!ports.input_alphabet(u).contains(emit.medium_input)) {
        throw ValidationError("modem " + std::to_string(u) + " emitted a symbol outside its medium input alphabet");
      }
      inputs[u] = emit.medium_input;
    }
    medium->step(prev_inputs, outputs);

    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [from, to] = pairs[k].pair;
      traj.pairs[k].source.push_back(current_sources[k]);
      traj.pairs[k].reproduction.push_back(reproductions[to][from]);
      prev_sources[from][to] = current_sources[k];
    }
    for (UserId u = 0; u < users; ++u) {
      traj.medium_inputs[u].push_back(inputs[u]);
      traj.medium_outputs[u].push_back(outputs[u]);
    }
    std::swap(prev_inputs, inputs);
    std::swap(prev_outputs, outputs);
  }
  return traj;
}

Trajectory rollout(const NetworkSystem& system, const RolloutSeeds& seeds) {
  if (system.horizon() == 0) throw ValidationError("system horizon is zero");
  return rollout(system, system.horizon(), seeds);
}

std::vector<BlockPair> sample_blocks(const NetworkSystem& system, UserPair pair, std::size_t n,
                                     std::size_t trials, const RandomnessHandle& root) {
  const auto& spec = system.pair(pair);
  const std::size_t start = system.first_block_start(n);
  const std::size_t horizon = start + n + spec.latency;
  std::vector<BlockPair> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto traj = rollout(system, horizon, RolloutSeeds::from_root(root.derive(t)));
    out.push_back(traj.pair(pair).block(start / n, n));
  }
  return out;
}

GuaranteeReport baseline_guarantee(const NetworkSystem& system, const DistortionBudget& budget,
                                   std::size_t trials, const RandomnessHandle& root,
                                   std::optional<UserPair> pair) {
  if (trials < 100) throw ValidationError("baseline_guarantee needs at least 100 trials");
  const UserPair p = pair.value_or(system.pair_of_interest());
  const std::size_t n = system.block_length();
  const auto blocks = sample_blocks(system, p, n, trials, root);
  std::vector<double> averages;
  averages.reserve(blocks.size());
  double sum = 0.0;
  for (const auto& b : blocks) {
    averages.push_back(block_distortion(b.source, b.reproduction, budget.metric).average);
    sum += averages.back();
  }
  GuaranteeReport report;
  report.pair = p;
  report.block_length = n;
  report.level = budget.level;
  report.excess = excess_distortion_prob(averages, budget.level);
  report.mean_distortion = sum / static_cast<double>(averages.size());
  report.root = root;
  return report;
}

std::uint64_t trajectory_digest(const Trajectory& trajectory) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  auto feed_seq = [&](const Sequence& s) {
    feed(s.size());
    for (const Symbol v : s.values()) feed(v);
  };
  feed(trajectory.horizon);
  for (const auto& p : trajectory.pairs) {
    feed(p.spec.pair.from);
    feed(p.spec.pair.to);
    feed_seq(p.source);
    feed_seq(p.reproduction);
  }
  for (const auto& s : trajectory.medium_inputs) feed_seq(s);
  for (const auto& s : trajectory.medium_outputs) feed_seq(s);
  return h;
}

}  // namespace sepnet
