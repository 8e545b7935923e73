#include <benchmark/benchmark.h>

#include <vector>

#include "besq/rng.hpp"
#include "besq/sde.hpp"
#include "besq/symcore.hpp"
#include "besq/wallach.hpp"

namespace {

besq::SymMatrix test_matrix(std::size_t p) {
  besq::RngStream rng(1, 0);
  besq::SymMatrix s(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) s.set(i, j, rng.normal());
  }
  return s;
}

void BM_Eig(benchmark::State& state) {
  const auto s = test_matrix(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(besq::eig(s));
}
BENCHMARK(BM_Eig)->Arg(2)->Arg(3)->Arg(6)->Arg(16);

void BM_MatrixStep(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  besq::MatrixBesqStepper stepper(p);
  besq::SymMatrix x = besq::SymMatrix::identity(p);
  besq::RngStream rng(2, 0);
  for (auto _ : state) {
    stepper.decompose(x);
    stepper.advance(x, 3.0, 1.0 / 1024, rng);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_MatrixStep)->Arg(2)->Arg(3)->Arg(6);

void BM_ParticleStep(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  std::vector<double> lambdas(p);
  for (std::size_t i = 0; i < p; ++i) lambdas[i] = 1.0 + static_cast<double>(i);
  std::vector<double> normals(p);
  std::vector<double> scratch(p);
  besq::RngStream rng(3, 0);
  for (auto _ : state) {
    rng.fill(normals);
    benchmark::DoNotOptimize(
        besq::step_particles_inplace(lambdas, static_cast<double>(p) + 1.0, 1.0 / 1024, normals, 1e-8, scratch));
  }
}
BENCHMARK(BM_ParticleStep)->Arg(2)->Arg(3)->Arg(8);

void BM_ElementarySymmetric(benchmark::State& state) {
  std::vector<double> x(static_cast<std::size_t>(state.range(0)), 1.25);
  for (auto _ : state) benchmark::DoNotOptimize(besq::elementary_symmetric(x));
}
BENCHMARK(BM_ElementarySymmetric)->Arg(2)->Arg(6)->Arg(16);

void BM_ExactSample(benchmark::State& state) {
  const besq::ExactSampler sampler(2, {}, besq::SymMatrix::identity(2));
  besq::RngStream rng(4, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(rng));
}
BENCHMARK(BM_ExactSample);

}  // namespace
BENCHMARK_MAIN();
