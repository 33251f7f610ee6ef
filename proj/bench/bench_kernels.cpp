#include <benchmark/benchmark.h>

#include <random>

#include "gdr/dgrad.hpp"
#include "gdr/systems.hpp"

using namespace gdr;

namespace {

SpringDemo chain(std::size_t n, KernelMode mode) {
  SpringDemoOptions opt;
  opt.topology = SpringTopology::Chain;
  opt.n_particles = n;
  opt.mode = mode;
  opt.pulse = {};
  return make_spring_demo(opt);
}

Vec perturbed(const Vec& q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  Vec out = q;
  for (auto& v : out) v += u(rng);
  return out;
}

template <KernelMode Mode>
void BM_Gradient(benchmark::State& state) {
  const SpringDemo demo = chain(static_cast<std::size_t>(state.range(0)), Mode);
  const Vec q = perturbed(demo.initial.q, 1);
  for (auto _ : state) benchmark::DoNotOptimize(demo.network.grad_potential(q));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(demo.network.springs().size()));
}

template <KernelMode Mode>
void BM_EquivariantForce(benchmark::State& state) {
  const SpringDemo demo = chain(static_cast<std::size_t>(state.range(0)), Mode);
  const Vec x = perturbed(demo.initial.q, 1);
  const Vec y = perturbed(demo.initial.q, 2);
  for (auto _ : state) benchmark::DoNotOptimize(g_equivariant_force(demo.network, DissipationConfig{}, x, y));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(demo.network.springs().size()));
}

}  // namespace

BENCHMARK(BM_Gradient<KernelMode::Serial>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_Gradient<KernelMode::Parallel>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_EquivariantForce<KernelMode::Serial>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_EquivariantForce<KernelMode::Parallel>)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
