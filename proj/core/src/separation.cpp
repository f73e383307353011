#include "sepnet/separation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "sepnet/error.hpp"

namespace sepnet {

PairTarget::PairTarget(UserPair pair_, DistortionMetric metric_, double level_, double target_)
    : pair(pair_), metric(std::move(metric_)), level(level_), target(target_) {
  if (!(level >= 0.0) || !(target >= 0.0)) throw ValidationError("distortion levels must be nonnegative");
}

namespace {

struct WrapperConfig {
  UserPair pair;
  std::size_t n = 0;
  std::size_t inner_latency = 0;
  DecodeRule rule = DecodeRule::unique_within_distortion;
  double level = 0.0;
  std::shared_ptr<const Codebook> channel;
  std::shared_ptr<const Codebook> source;
  DistortionMetric metric;
  Pmf source_pmf;
};

WrapperConfig wrapper_config(const SeparationPlan& plan) {
  return WrapperConfig{plan.target.pair,     plan.rates.n,          plan.inner_latency,
                       plan.rule,            plan.target.level,     plan.channel_codebook,
                       plan.source_codebook, plan.target.metric,    plan.source_pmf};
}

class SenderRun final : public ModemRun {
 public:
  SenderRun(const WrapperConfig& config, std::unique_ptr<ModemRun> inner, const ModemContext& ctx)
      : config_(config),
        inner_(std::move(inner)),
        horizon_(ctx.horizon),
        filler_(ctx.local.derive(StreamTag::filler)),
        block_(config.source_pmf.alphabet()),
        substituted_(ctx.source_alphabets.size(), 0) {}

  void step(const ModemView& view, ModemEmit& emit) override {
    const std::size_t n = config_.n;
    const UserId r = config_.pair.to;
    std::copy(view.prev_sources.begin(), view.prev_sources.end(), substituted_.begin());
    if (view.time >= 1) {
      const auto t = static_cast<std::size_t>(view.time) - 1;  // simulated-source time fed now
      const std::size_t segment = t / n;
      const auto it = segments_.find(segment);
      substituted_[r] = it != segments_.end() ? it->second[t % n] : config_.source_pmf.draw(filler_);
      if (it != segments_.end() && t % n == n - 1) segments_.erase(it);

      block_.push_back(view.prev_sources[r]);
      if (block_.size() == n) {
        // Block b = segment is complete; it travels as segment b + 1.
        const std::size_t b = segment;
        if ((b + 2) * n + config_.inner_latency < horizon_) {
          const Message m = source_encode(*config_.source, block_, config_.metric);
          segments_.emplace(b + 1, channel_encode(*config_.channel, m));
        }
        block_ = Sequence(config_.source_pmf.alphabet());
      }
    }
    const ModemView inner_view{view.time, substituted_, view.prev_output};
    inner_->step(inner_view, emit);
  }

 private:
  const WrapperConfig& config_;
  std::unique_ptr<ModemRun> inner_;
  std::size_t horizon_;
  Rng filler_;
  Sequence block_;
  std::vector<Symbol> substituted_;
  std::map<std::size_t, Sequence> segments_;
};

class ReceiverRun final : public ModemRun {
 public:
  ReceiverRun(const WrapperConfig& config, std::unique_ptr<ModemRun> inner, const ModemContext& ctx)
      : config_(config),
        inner_(std::move(inner)),
        horizon_(ctx.horizon),
        values_(config.n, 0) {}

  void step(const ModemView& view, ModemEmit& emit) override {
    const std::size_t n = config_.n;
    const UserId s = config_.pair.from;
    inner_->step(view, emit);
    const Symbol inner_y = emit.reproductions[s];

    const auto t = static_cast<std::size_t>(view.time);
    emit.reproductions[s] = 0;
    if (output_ && t >= output_start_ && t < output_start_ + n) emit.reproductions[s] = (*output_)[t - output_start_];

    if (t < config_.inner_latency) return;
    const std::size_t st = t - config_.inner_latency;
    if (st < n) return;  // segment 0 is filler
    values_[st % n] = inner_y;
    if (st % n == n - 1 && t + 1 < horizon_) {
      const Sequence y(config_.metric.repro_alphabet(), values_);
      const auto decision = channel_decode(*config_.channel, y, config_.metric, config_.level, config_.rule);
      // A failed decode still has to produce a reproduction: use the nearest
      // codeword.
      const Message m = decision.message.value_or(decision.nearest) % config_.source->cardinality();
      output_ = source_decode(*config_.source, m);
      output_start_ = t + 1;
    }
  }

 private:
  const WrapperConfig& config_;
  std::unique_ptr<ModemRun> inner_;
  std::size_t horizon_;
  std::vector<Symbol> values_;
  std::optional<Sequence> output_;
  std::size_t output_start_ = 0;
};

class SeparatedSender final : public Modem {
 public:
  SeparatedSender(WrapperConfig config, std::shared_ptr<const Modem> inner)
      : config_(std::move(config)), inner_(std::move(inner)) {}

  void validate(const ModemContext& ctx) const override {
    inner_->validate(ctx);
    const UserId r = config_.pair.to;
    if (r >= ctx.source_alphabets.size() || !(ctx.source_alphabets[r] == config_.source_pmf.alphabet())) {
      throw ValidationError("separated sender: source alphabet of pair " + to_string(config_.pair) +
                            " does not match the plan");
    }
  }

  std::unique_ptr<ModemRun> start(const ModemContext& ctx) const override {
    return std::make_unique<SenderRun>(config_, inner_->start(ctx), ctx);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "separated sender " << to_string(config_.pair) << " n=" << config_.n << " over [" << inner_->describe()
       << "]";
    return os.str();
  }

 private:
  WrapperConfig config_;
  std::shared_ptr<const Modem> inner_;
};

class SeparatedReceiver final : public Modem {
 public:
  SeparatedReceiver(WrapperConfig config, std::shared_ptr<const Modem> inner)
      : config_(std::move(config)), inner_(std::move(inner)) {}

  void validate(const ModemContext& ctx) const override {
    inner_->validate(ctx);
    const UserId s = config_.pair.from;
    if (s >= ctx.repro_alphabets.size() || !(ctx.repro_alphabets[s] == config_.metric.repro_alphabet())) {
      throw ValidationError("separated receiver: reproduction alphabet of pair " + to_string(config_.pair) +
                            " does not match the plan");
    }
  }

  std::unique_ptr<ModemRun> start(const ModemContext& ctx) const override {
    return std::make_unique<ReceiverRun>(config_, inner_->start(ctx), ctx);
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "separated receiver " << to_string(config_.pair) << " n=" << config_.n << " over ["
       << inner_->describe() << "]";
    return os.str();
  }

 private:
  WrapperConfig config_;
  std::shared_ptr<const Modem> inner_;
};

}  // namespace

RandomnessHandle pair_codebook_seed(const RandomnessHandle& root, UserPair pair) {
  return root.derive(StreamTag::codebook).derive(pair.from * 1'000'003ULL + pair.to);
}

SeparationPlan plan_separation(const NetworkSystem& system, const GuaranteeReport& guarantee,
                               const PairTarget& target, const SeparationOptions& options,
                               const RandomnessHandle& codebook_seed) {
  const UserPair p = target.pair;
  if (!(guarantee.pair == p)) {
    throw ValidationError("guarantee was measured on pair " + to_string(guarantee.pair) + ", not " + to_string(p));
  }
  if (std::abs(guarantee.level - target.level) > 1e-12) {
    throw ValidationError("guarantee level does not match the target's D");
  }
  if (options.block_length == 0) throw ValidationError("separation block length must be positive");
  const PairSpec& spec = system.pair(p);
  if (!(spec.source.alphabet() == target.metric.source_alphabet()) ||
      !(spec.reproduction == target.metric.repro_alphabet())) {
    throw AlphabetMismatch("metric of pair " + to_string(p) + " does not match its alphabets");
  }

  const RdPoint at_D = blahut_arimoto(spec.source, target.metric, target.level);
  const RdPoint at_D_prime = blahut_arimoto(spec.source, target.metric, target.target);
  if (!(at_D_prime.rate < at_D.rate - 1e-9)) {
    throw PlanInfeasible("pair " + to_string(p) + ": R(D') = " + std::to_string(at_D_prime.rate) +
                         " is not strictly below R(D) = " + std::to_string(at_D.rate));
  }
  const std::size_t n = options.block_length;
  const RatePlan rates =
      RatePlan::make(n, n, target.level, target.target, at_D.rate, at_D_prime.rate, options.psi, options.alpha);

  const Pmf gen = options.channel_pmf_override.value_or(spec.source);
  if (!(gen.alphabet() == spec.source.alphabet())) {
    throw AlphabetMismatch("channel codebook law must live on the source alphabet");
  }
  std::vector<double> q = at_D_prime.repro_marginal;
  for (double& v : q) v = std::max(v, 0.0);

  SeparationPlan plan{target,
                      rates,
                      spec.source,
                      guarantee,
                      options.rule,
                      nullptr,
                      nullptr,
                      system.modem(p.from),
                      system.modem(p.to),
                      nullptr,
                      nullptr,
                      spec.latency,
                      2 * n + spec.latency};
  plan.channel_codebook = std::make_shared<const Codebook>(
      build_channel_codebook(rates.channel_messages(), gen, codebook_seed.derive("channel"), options.limits));
  plan.source_codebook = std::make_shared<const Codebook>(build_source_codebook(
      rates.source_messages(), Pmf(std::move(q)), codebook_seed.derive("source"), options.limits));
  if (plan.source_codebook->cardinality() > plan.channel_codebook->cardinality()) {
    throw PlanInfeasible("source message set does not fit in the channel message set");
  }
  plan.sender = make_separated_sender(plan, plan.original_sender);
  plan.receiver = make_separated_receiver(plan, plan.original_receiver);
  return plan;
}

std::shared_ptr<const Modem> make_separated_sender(const SeparationPlan& plan, std::shared_ptr<const Modem> inner) {
  return std::make_shared<SeparatedSender>(wrapper_config(plan), std::move(inner));
}

std::shared_ptr<const Modem> make_separated_receiver(const SeparationPlan& plan,
                                                     std::shared_ptr<const Modem> inner) {
  return std::make_shared<SeparatedReceiver>(wrapper_config(plan), std::move(inner));
}

NetworkSystem apply_separation(const NetworkSystem& system, const SeparationPlan& plan) {
  const UserPair p = plan.target.pair;
  if (system.modem(p.from) != plan.original_sender || system.modem(p.to) != plan.original_receiver) {
    throw ValidationError("plan for pair " + to_string(p) + " was made for different modems");
  }
  if (system.pair(p).latency != plan.inner_latency) {
    throw ValidationError("plan for pair " + to_string(p) + " assumes a different pair latency");
  }
  return system.with_modem(p.from, plan.sender).with_modem(p.to, plan.receiver).with_latency(p, plan.outer_latency);
}

double NoninterferenceResult::min_p_value() const noexcept {
  return std::min({order1.p_value, order2.p_value, joint.p_value});
}

bool NoninterferenceReport::passed() const noexcept {
  return std::all_of(pairs.begin(), pairs.end(), [](const NoninterferenceResult& r) { return r.passed(); });
}

namespace {

struct PairStreams {
  Sequence source;
  Sequence reproduction;
};

std::map<UserPair, PairStreams> simulate_streams(const NetworkSystem& system, const std::vector<UserPair>& pairs,
                                                 std::size_t samples, const RandomnessHandle& root) {
  std::size_t latency = 0;
  for (const auto& p : pairs) latency = std::max(latency, system.pair(p).latency);
  const std::size_t start = system.warmup();
  const auto traj = rollout(system, start + samples + latency, RolloutSeeds::from_root(root));
  std::map<UserPair, PairStreams> out;
  for (const auto& p : pairs) {
    const auto& trace = traj.pair(p);
    out.emplace(p, PairStreams{trace.aligned_source(start).slice(0, samples),
                               trace.aligned_reproduction(start).slice(0, samples)});
  }
  return out;
}

}  // namespace

NoninterferenceReport verify_noninterference(const NetworkSystem& before, const NetworkSystem& after,
                                             const std::vector<UserPair>& untouched, std::size_t samples,
                                             const RandomnessHandle& root, double threshold) {
  if (samples < 1000) throw ValidationError("verify_noninterference needs at least 1000 samples");
  NoninterferenceReport report;
  report.threshold = threshold;
  report.root = root;
  if (untouched.empty()) return report;
  const auto a = simulate_streams(before, untouched, samples, root.derive("before"));
  const auto b = simulate_streams(after, untouched, samples, root.derive("after"));
  for (const auto& p : untouched) {
    const auto& sa = a.at(p);
    const auto& sb = b.at(p);
    NoninterferenceResult r;
    r.pair = p;
    r.samples = samples;
    r.order1 = two_sample_test(sa.reproduction, sb.reproduction, 1);
    r.order2 = two_sample_test(sa.reproduction, sb.reproduction, 2);
    const Sequence ja = joint_sequence(sa.source, sa.reproduction);
    const Sequence jb = joint_sequence(sb.source, sb.reproduction);
    r.joint = two_sample_test(ja, jb, 1);
    r.tv_reproduction = tv_distance(empirical_pmf(sa.reproduction), empirical_pmf(sb.reproduction));
    r.tv_joint = tv_distance(empirical_pmf(ja), empirical_pmf(jb));
    r.reproduction_passed = r.order1.p_value > threshold && r.order2.p_value > threshold;
    r.joint_passed = r.joint.p_value > threshold;
    report.pairs.push_back(r);
  }
  return report;
}

EndToEndReport measure_end_to_end(const NetworkSystem& system, UserPair pair, const DistortionBudget& budget,
                                  std::size_t trials, const RandomnessHandle& root, const SeparationPlan* plan) {
  if (trials < 1000) throw ValidationError("measure_end_to_end needs at least 1000 trials");
  if (plan && !(plan->target.pair == pair)) throw ValidationError("plan belongs to a different pair");
  const std::size_t n = plan ? plan->block_length() : system.block_length();
  const auto blocks = sample_blocks(system, pair, n, trials, root);

  std::vector<double> averages;
  averages.reserve(blocks.size());
  double sum = 0.0;
  std::uint64_t channel_errors = 0;
  std::uint64_t overshoots = 0;
  for (const auto& b : blocks) {
    averages.push_back(block_distortion(b.source, b.reproduction, budget.metric).average);
    sum += averages.back();
    if (plan) {
      const Sequence round_trip =
          source_decode(*plan->source_codebook, source_encode(*plan->source_codebook, b.source, plan->target.metric));
      if (!(round_trip == b.reproduction)) ++channel_errors;
      if (block_distortion(b.source, round_trip, budget.metric).average > budget.level) ++overshoots;
    }
  }
  EndToEndReport report;
  report.guarantee.pair = pair;
  report.guarantee.block_length = n;
  report.guarantee.level = budget.level;
  report.guarantee.excess = excess_distortion_prob(averages, budget.level);
  report.guarantee.mean_distortion = sum / static_cast<double>(averages.size());
  report.guarantee.root = root;
  if (plan) {
    report.channel_error = wilson_interval(channel_errors, trials);
    report.source_overshoot = wilson_interval(overshoots, trials);
  }
  return report;
}

namespace {

class RecordingRun final : public ModemRun {
 public:
  RecordingRun(std::vector<Symbol>* sink, UserId to) : sink_(sink), to_(to) {}
  void step(const ModemView& view, ModemEmit& emit) override {
    if (view.time >= 1) sink_->push_back(view.prev_sources[to_]);
    emit.medium_input = 0;
    std::fill(emit.reproductions.begin(), emit.reproductions.end(), 0U);
  }

 private:
  std::vector<Symbol>* sink_;
  UserId to_;
};

class RecordingModem final : public Modem {
 public:
  RecordingModem(std::vector<Symbol>* sink, UserId to) : sink_(sink), to_(to) {}
  void validate(const ModemContext&) const override {}
  std::unique_ptr<ModemRun> start(const ModemContext&) const override {
    return std::make_unique<RecordingRun>(sink_, to_);
  }
  std::string describe() const override { return "recorder"; }

 private:
  std::vector<Symbol>* sink_;
  UserId to_;
};

}  // namespace

Sequence simulated_source_stream(const SeparationPlan& plan, std::size_t length, const RandomnessHandle& root) {
  const UserPair p = plan.target.pair;
  const std::size_t users = std::max(p.from, p.to) + 1;
  std::vector<Symbol> recorded;
  recorded.reserve(length);
  const auto sender = make_separated_sender(plan, std::make_shared<RecordingModem>(&recorded, p.to));

  MediumPorts ports(std::vector<Alphabet>(users, Alphabet(1)), std::vector<std::vector<IncomingPort>>(users));
  ModemContext ctx;
  ctx.user = p.from;
  ctx.horizon = length + 1;
  ctx.ports = &ports;
  ctx.source_alphabets.assign(users, Alphabet(1));
  ctx.source_alphabets[p.to] = plan.source_pmf.alphabet();
  ctx.repro_alphabets.assign(users, Alphabet(1));
  ctx.common = root.derive(StreamTag::common);
  ctx.local = root.derive(StreamTag::modem_private);
  auto run = sender->start(ctx);

  Rng source_rng(root.derive(StreamTag::sources));
  std::vector<Symbol> prev(users, 0);
  std::vector<Symbol> repro(users, 0);
  for (std::size_t tau = 0; tau <= length; ++tau) {
    ModemEmit emit{0, repro};
    run->step(ModemView{static_cast<std::int64_t>(tau), prev, 0}, emit);
    prev[p.to] = plan.source_pmf.draw(source_rng);
  }
  return Sequence(plan.source_pmf.alphabet(), std::move(recorded));
}

BlockChannel system_block_channel(const NetworkSystem& system, UserPair pair, std::size_t block_length) {
  system.validate();
  (void)system.pair(pair);
  if (block_length == 0) throw ValidationError("block length must be positive");
  return [system, pair, block_length](const Sequence& input, Rng& rng) {
    const std::size_t n = block_length;
    if (input.size() != n) throw ValidationError("system block channel: wrong block length");
    const std::size_t start = system.first_block_start(n);
    std::vector<SourcePerturbation> overrides;
    overrides.reserve(n);
    for (std::size_t k = 0; k < n; ++k) overrides.push_back(SourcePerturbation{pair, start + k, input[k]});
    const RandomnessHandle handle{rng(), rng()};
    const auto traj =
        rollout(system, start + n + system.pair(pair).latency, RolloutSeeds::from_root(handle), overrides);
    return traj.pair(pair).block(start / n, n).reproduction;
  };
}

double degradation_p_value(const Proportion& before, const Proportion& after) {
  const auto nb = static_cast<double>(before.trials);
  const auto na = static_cast<double>(after.trials);
  if (nb == 0.0 || na == 0.0) return 1.0;
  const double pooled = static_cast<double>(before.successes + after.successes) / (nb + na);
  const double var = pooled * (1.0 - pooled) * (1.0 / nb + 1.0 / na);
  if (var <= 0.0) return 1.0;
  const double z = (after.estimate - before.estimate) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

NetworkSeparation separate_network(const NetworkSystem& system, const std::vector<PairTarget>& targets,
                                   const NetworkSeparationOptions& options, const RandomnessHandle& root) {
  for (std::size_t a = 0; a < targets.size(); ++a) {
    for (std::size_t b = a + 1; b < targets.size(); ++b) {
      if (targets[a].pair == targets[b].pair) {
        throw ValidationError("pair " + to_string(targets[a].pair) + " targeted twice");
      }
    }
  }
  NetworkSeparation out{system, {}};
  const std::size_t n = options.separation.block_length;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const PairTarget& target = targets[k];
    const NetworkSystem current = out.system.with_block_length(n);
    const RandomnessHandle step_root = root.derive("step").derive(target.pair.from * 1'000'003ULL + target.pair.to);
    const GuaranteeReport guarantee =
        baseline_guarantee(current, DistortionBudget(target.level, target.metric), options.guarantee_trials,
                           step_root.derive("guarantee"), target.pair);
    SeparationPlan plan =
        plan_separation(current, guarantee, target, options.separation, pair_codebook_seed(root, target.pair));
    NetworkSystem next = apply_separation(out.system, plan);

    SeparationStep step{std::move(plan), {}, {}, {}, {}};
    if (options.remeasure) {
      std::vector<UserPair> untouched;
      for (const auto& spec : out.system.pairs()) {
        if (!(spec.pair == target.pair)) untouched.push_back(spec.pair);
      }
      if (!untouched.empty()) {
        step.noninterference = verify_noninterference(out.system, next, untouched, options.noninterference_samples,
                                                      step_root.derive("noninterference"), options.report_threshold);
        for (const auto& r : step.noninterference.pairs) {
          if (r.min_p_value() < options.abort_threshold) {
            throw InterferenceDetected("separating " + to_string(target.pair) + " changed the law of pair " +
                                       to_string(r.pair) + " (p = " + std::to_string(r.min_p_value()) + ")");
          }
        }
      }
      const NetworkSystem next_n = next.with_block_length(n);
      for (std::size_t j = k + 1; j < targets.size(); ++j) {
        const PairTarget& rest = targets[j];
        const DistortionBudget budget(rest.level, rest.metric);
        const auto seed = step_root.derive("remaining").derive(rest.pair.from * 1'000'003ULL + rest.pair.to);
        auto before = baseline_guarantee(current, budget, options.guarantee_trials, seed.derive("before"), rest.pair);
        auto after = baseline_guarantee(next_n, budget, options.guarantee_trials, seed.derive("after"), rest.pair);
        const double p = degradation_p_value(before.excess, after.excess);
        step.remaining_before.push_back(before);
        step.remaining_after.push_back(after);
        step.degradation_p.push_back(p);
        if (p < options.abort_threshold) {
          throw InterferenceDetected("separating " + to_string(target.pair) + " degraded the guarantee of pair " +
                                     to_string(rest.pair) + " from " + std::to_string(before.excess.estimate) +
                                     " to " + std::to_string(after.excess.estimate));
        }
      }
    }
    out.system = std::move(next);
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace sepnet
