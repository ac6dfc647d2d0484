// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "vsort/hashprime.hpp"
#include "vsort/merkle.hpp"

using namespace vsort;

namespace {

std::vector<Bytes> make_leaves(std::size_t n) {
  std::vector<Bytes> leaves;
  leaves.reserve(n);
  for (std::size_t i = 0; i < n; ++i) leaves.push_back(to_bytes("registrant-" + std::to_string(i)));
  return leaves;
}

std::vector<Bytes> make_seeds(std::size_t n) {
  std::vector<Bytes> seeds;
  for (std::size_t i = 0; i < n; ++i) seeds.push_back(to_bytes("seed-" + std::to_string(i)));
  return seeds;
}

void merkle_build(benchmark::State& state, bool parallel) {
  const auto leaves = make_leaves(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto tree = merkle::Tree::build(leaves, parallel);
    benchmark::DoNotOptimize(tree.root());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
}

void BM_MerkleSerial(benchmark::State& state) { merkle_build(state, false); }
void BM_MerkleParallel(benchmark::State& state) { merkle_build(state, true); }

const hashprime::Params kPrimeParams{.bits = 512, .congruence = hashprime::Congruence{7, 8}, .mr_rounds = 50};

void BM_HashToPrimeSerial(benchmark::State& state) {
  const auto seeds = make_seeds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hashprime::hash_to_prime_batch_serial(seeds, kPrimeParams));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = 1;
}

void BM_HashToPrimeParallel(benchmark::State& state) {
  const auto seeds = make_seeds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hashprime::hash_to_prime_batch(seeds, kPrimeParams));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = omp_get_max_threads();
}

}  // namespace

BENCHMARK(BM_MerkleSerial)->RangeMultiplier(16)->Range(1 << 10, 1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MerkleParallel)->RangeMultiplier(16)->Range(1 << 10, 1 << 18)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HashToPrimeSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HashToPrimeParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
