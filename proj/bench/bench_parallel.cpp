// Serial reference vs OpenMP kernels. Thread count comes from OMP_NUM_THREADS.

#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "memobs/evolution.hpp"
#include "memobs/kernels.hpp"
#include "memobs/sampling.hpp"
#include "memobs/spectral.hpp"

using namespace memobs;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> noise(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

SamplingPlan plan() {
  return SamplingPlan({{0.5, ObservationRegion({{0.0, 0.6 * kPi}})}, {0.8, ObservationRegion({{0.4 * kPi, kPi}})}});
}

void BM_Convolve(benchmark::State& state) {
  const auto f = noise(state.range(0), 1), g = noise(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(convolve_trapezoid(f, g, 1e-3));
}

void BM_ConvolveSerial(benchmark::State& state) {
  const auto f = noise(state.range(0), 1), g = noise(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(serial::convolve_trapezoid(f, g, 1e-3));
}

void BM_Overlap(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const ObservationRegion region({{0.3, 1.7}, {2.0, 2.9}});
  for (auto _ : state) benchmark::DoNotOptimize(overlap_matrix(basis, region));
}

void BM_OverlapSerial(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const ObservationRegion region({{0.3, 1.7}, {2.0, 2.9}});
  for (auto _ : state) benchmark::DoNotOptimize(serial::overlap_matrix(basis, region));
}

const ModalEvaluator& linear_evaluator() {
  static const ModalEvaluator e(MemoryKernel::linear(), {ModalMethod::Automatic, 0.5, 512});
  return e;
}

void BM_ModalTable(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const std::vector<double> times{0.5, 0.8};
  for (auto _ : state) benchmark::DoNotOptimize(linear_evaluator().table(basis, times));
}

void BM_ModalTableSerial(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const std::vector<double> times{0.5, 0.8};
  for (auto _ : state) benchmark::DoNotOptimize(serial::modal_table(linear_evaluator(), basis, times));
}

Eigen::MatrixXd exp_table(const SpectralBasis& basis) {
  const std::vector<double> times{0.5, 0.8};
  return ModalEvaluator(MemoryKernel::exponential(1.0, 0.0)).table(basis, times);
}

void BM_Gram(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd table = exp_table(basis);
  const SamplingPlan p = plan();
  for (auto _ : state) benchmark::DoNotOptimize(observation_gram(p, table, basis));
}

void BM_GramSerial(benchmark::State& state) {
  const SpectralBasis basis(kPi, static_cast<int>(state.range(0)));
  const Eigen::MatrixXd table = exp_table(basis);
  const SamplingPlan p = plan();
  for (auto _ : state) benchmark::DoNotOptimize(serial::observation_gram(p, table, basis));
}

}  // namespace

BENCHMARK(BM_Convolve)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvolveSerial)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Overlap)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OverlapSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModalTable)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModalTableSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Gram)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
