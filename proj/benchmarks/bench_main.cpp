#include <benchmark/benchmark.h>

#include "sepnet/codec.hpp"
#include "sepnet/netmodel.hpp"
#include "sepnet/ratedist.hpp"

using namespace sepnet;

namespace {

NetworkSystem bsc_link(std::size_t n) {
  auto medium = make_dmc_medium(2, {{UserPair{0, 1}, StochasticMatrix::binary_symmetric(0.11)}});
  UncodedModemConfig tx;
  tx.send_to = 1;
  UncodedModemConfig rx;
  rx.deliveries = {{0, 0}};
  return NetworkSystem(medium, {make_uncoded_modem(tx), make_uncoded_modem(rx)},
                       {PairSpec({0, 1}, Pmf::uniform(2), 3)}, {0, 1}, n);
}

}  // namespace

static void BM_BlahutArimotoBinary(benchmark::State& state) {
  const auto d = DistortionMetric::hamming(2);
  for (auto _ : state) benchmark::DoNotOptimize(blahut_arimoto(Pmf::uniform(2), d, 0.125).rate);
}
BENCHMARK(BM_BlahutArimotoBinary);

static void BM_BlahutArimotoTernary(benchmark::State& state) {
  const auto d = DistortionMetric::hamming(3);
  for (auto _ : state) benchmark::DoNotOptimize(blahut_arimoto(Pmf({0.5, 0.3, 0.2}), d, 0.2).rate);
}
BENCHMARK(BM_BlahutArimotoTernary);

// rows = 2^k, binary fair codebook, n = 64
static void BM_CodebookGenerate(benchmark::State& state) {
  const CodebookSpec spec{CodebookKind::channel_embedding, 64, std::uint64_t{1} << state.range(0), Pmf::uniform(2),
                          {1, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(Codebook::generate(spec).cardinality());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(spec.cardinality));
}
BENCHMARK(BM_CodebookGenerate)->DenseRange(12, 20, 4)->Unit(benchmark::kMillisecond);

static void BM_ChannelDecode(benchmark::State& state) {
  const Codebook cb = Codebook::generate(
      {CodebookKind::channel_embedding, 48, std::uint64_t{1} << state.range(0), Pmf::uniform(2), {2, 0}});
  const auto d = DistortionMetric::hamming(2);
  Rng rng({2, 1});
  const auto channel = memoryless_block_channel(StochasticMatrix::binary_symmetric(0.11));
  const Sequence y = channel(cb.row(7), rng);
  for (auto _ : state) benchmark::DoNotOptimize(channel_decode(cb, y, d, 0.125).nearest);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cb.cardinality()));
}
BENCHMARK(BM_ChannelDecode)->DenseRange(10, 18, 4);

// n = 64, 2^22 rows; arg 1 builds the chunk index
static void BM_LargeCodebookDecode(benchmark::State& state) {
  CodebookLimits limits;
  limits.max_cardinality = std::uint64_t{1} << 22;
  limits.index_from = state.range(0) ? 0 : limits.max_cardinality + 1;
  const Codebook cb = Codebook::generate(
      {CodebookKind::channel_embedding, 64, std::uint64_t{1} << 22, Pmf::uniform(2), {6, 0}}, limits);
  const auto d = DistortionMetric::hamming(2);
  Rng rng({6, 1});
  const auto channel = memoryless_block_channel(StochasticMatrix::binary_symmetric(0.11));
  std::vector<Sequence> ys;
  for (Message m = 0; m < 64; ++m) ys.push_back(channel(cb.row(m * 997), rng));
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(channel_decode(cb, ys[k++ % ys.size()], d, 0.125).nearest);
}
BENCHMARK(BM_LargeCodebookDecode)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_TernaryScan(benchmark::State& state) {
  const Codebook cb =
      Codebook::generate({CodebookKind::source_compression, 32, 4096, Pmf({0.5, 0.3, 0.2}), {3, 0}});
  const auto d = DistortionMetric::hamming(3);
  const Sequence x = sample_iid(Pmf::uniform(3), 32, {3, 1});
  for (auto _ : state) benchmark::DoNotOptimize(source_encode(cb, x, d));
}
BENCHMARK(BM_TernaryScan);

static void BM_Rollout(benchmark::State& state) {
  const auto sys = bsc_link(32);
  const auto steps = static_cast<std::size_t>(state.range(0));
  std::uint64_t s = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rollout(sys, steps, RolloutSeeds::from_root({s++, 4})).horizon);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rollout)->Arg(1000)->Arg(100000);

static void BM_BaselineGuarantee(benchmark::State& state) {
  const auto sys = bsc_link(static_cast<std::size_t>(state.range(0)));
  const DistortionBudget budget(0.125, DistortionMetric::hamming(2));
  std::uint64_t s = 0;
  for (auto _ : state) benchmark::DoNotOptimize(baseline_guarantee(sys, budget, 1000, {s++, 5}).excess.estimate);
}
BENCHMARK(BM_BaselineGuarantee)->Arg(64)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
