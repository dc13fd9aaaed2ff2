// Micro-benchmarks for the operations that dominate a run: spectral
// derivatives, the principal-value sheet velocity, single layer-pair
// kernels, full velocity assembly, the complete right-hand side, and the
// strip-norm diagnostic.  Grid sizes bracket the desk scale the library
// targets.
#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "vlx/dynamics.hpp"
#include "vlx/experiments.hpp"
#include "vlx/geometry.hpp"
#include "vlx/kernels.hpp"
#include "vlx/spectral.hpp"

namespace {

using namespace vlx;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SpectralField wavy_field(const PeriodicGrid& grid) {
  return SpectralField::sample(
      grid, [](double s) { return 1.0 + 0.1 * std::cos(kTwoPi * s) + 0.05 * std::sin(2 * kTwoPi * s); });
}

const CurveSpec& unit_circle() {
  static const CurveSpec curve = reparametrize_arclength(circle_coefficients(), 32);
  return curve;
}

LayeredState perturbed_state(int n_points, int n_layers, double epsilon) {
  ExperimentSpec spec{.curve = unit_circle()};
  spec.n_points = n_points;
  spec.n_layers = n_layers;
  spec.epsilons = {epsilon};
  spec.aggregate = [](double s) { return 1.0 + 0.1 * std::cos(kTwoPi * s); };
  return build_experiment_state(spec, epsilon);
}

void BM_spectral_derivative(benchmark::State& state) {
  const PeriodicGrid grid(static_cast<int>(state.range(0)));
  const SpectralField f = wavy_field(grid);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_derivative(f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_spectral_derivative)->RangeMultiplier(2)->Range(256, 2048)->Complexity();

void BM_br_operator(benchmark::State& state) {
  const PeriodicGrid grid(static_cast<int>(state.range(0)));
  const CurveSamples samples = unit_circle().sample(grid);
  const SpectralField density = wavy_field(grid);
  for (auto _ : state) benchmark::DoNotOptimize(br_operator(samples, density));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_br_operator)->RangeMultiplier(2)->Range(128, 512)->Complexity();

// One cross-layer pair at the default layer gap (adjacent layers of an
// 8-layer stack, epsilon 0.04): the building block of velocity assembly.
void BM_layer_kernel(benchmark::State& state) {
  const PeriodicGrid grid(static_cast<int>(state.range(0)));
  const BaseCurveSamples base = sample_base_curve(unit_circle(), grid);
  const LayeredState st = perturbed_state(grid.size(), 8, 0.04);
  const SpectralField& nu_target = st.w1[3];
  const SpectralField& nu_source = st.w1[4];
  const SpectralField varpi = wavy_field(grid);
  for (auto _ : state)
    benchmark::DoNotOptimize(layer_kernel(base, nu_target, nu_source, varpi, false));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_layer_kernel)->RangeMultiplier(2)->Range(128, 512)->Complexity();

void BM_assemble_velocity(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LayeredState st = perturbed_state(n, 8, 0.04);
  const CurveCache cache = make_curve_cache(st.curve, st.grid);
  const KernelEvalConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_velocity(st, 3, cache, cfg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_assemble_velocity)->RangeMultiplier(2)->Range(128, 256)->Complexity();

void BM_rhs(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const LayeredState st = perturbed_state(n, 8, 0.04);
  const CurveCache cache = make_curve_cache(st.curve, st.grid);
  const EvolutionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(layered_rhs(st, cache, cfg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_rhs)->RangeMultiplier(2)->Range(128, 256)->Complexity();

void BM_strip_holder_norm(benchmark::State& state) {
  const PeriodicGrid grid(static_cast<int>(state.range(0)));
  // A field with a full geometric spectrum (analytic on |Im s| < 0.2),
  // round-off modes zeroed as the strip-continuation contract requires.
  const double q = std::exp(-kTwoPi * 0.2);
  const SpectralField f = krasny_filter(
      SpectralField::sample(grid,
                            [q](double s) {
                              const double c = std::cos(kTwoPi * s);
                              return (1.0 - q * q) / (1.0 - 2.0 * q * c + q * q);
                            }),
      1e-12);
  for (auto _ : state) benchmark::DoNotOptimize(strip_holder_norm(f, 0.05));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_strip_holder_norm)->RangeMultiplier(2)->Range(128, 512)->Complexity();

}  // namespace

BENCHMARK_MAIN();
