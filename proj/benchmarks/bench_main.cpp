#include <benchmark/benchmark.h>

#include <cmath>

#include "fixtures.hpp"
#include "seqfwm/coupled.hpp"
#include "seqfwm/fiber.hpp"
#include "seqfwm/metrics.hpp"
#include "seqfwm/propagation.hpp"

using namespace seqfwm;

namespace {

const FiberSpec& pcf2() {
  static const FiberSpec f = seqfwm::testing::pcf2_calibrated();
  return f;
}

PropagationConfig pcf1_config(std::size_t n, double window, StepPolicy policy) {
  auto f = seqfwm::testing::pcf1();
  f.length = 0.05;
  PropagationConfig pc{f, TemporalGrid(n, window, OpticalFrequency::from_wavelength(777e-9)), 2e-3};
  pc.step_policy = policy;
  return pc;
}

void BM_Beta(benchmark::State& state) {
  const auto f = seqfwm::testing::pcf1();
  double lambda = 700e-9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(beta(f, OpticalFrequency::from_wavelength(lambda)));
    lambda = lambda < 900e-9 ? lambda + 1e-12 : 700e-9;
  }
}
BENCHMARK(BM_Beta);

// 5 cm of PCF 1 with the 777 nm pump, 25 fixed steps.
void BM_SplitStepFixed(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pc = pcf1_config(n, 40e-12 * static_cast<double>(n) / 8192.0, StepPolicy::Fixed);
  const auto in = pulse_envelope(seqfwm::testing::train(777.0, 350.0), pc.grid);
  for (auto _ : state) benchmark::DoNotOptimize(propagate(in, pc));
  state.SetItemsProcessed(state.iterations() * 25);
}
BENCHMARK(BM_SplitStepFixed)->Arg(8192)->Arg(65536)->Unit(benchmark::kMillisecond);

void BM_SplitStepAdaptive(benchmark::State& state) {
  const auto pc = pcf1_config(8192, 40e-12, StepPolicy::Adaptive);
  const auto in = pulse_envelope(seqfwm::testing::train(777.0, 350.0), pc.grid);
  for (auto _ : state) benchmark::DoNotOptimize(propagate(in, pc));
}
BENCHMARK(BM_SplitStepAdaptive)->Unit(benchmark::kMillisecond);

void BM_SeededFwmRun(benchmark::State& state) {
  auto pc = pcf1_config(8192, 40e-12, StepPolicy::Fixed);
  pc.fiber.length = 0.45;
  pc.include_vacuum_noise = true;
  const auto pump = seqfwm::testing::train(777.0, 350.0);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    pc.rng_seed = seed++;
    benchmark::DoNotOptimize(seeded_fwm_run(pump, 1e-3, 644.88e-9, pc));
  }
}
BENCHMARK(BM_SeededFwmRun)->Unit(benchmark::kMillisecond);

void BM_FourMode(benchmark::State& state) {
  const auto s = seqfwm::testing::pcf2_setup(pcf2(), 30.0, 14.0);
  const ModeAmplitudes a0{std::sqrt(s.pump_short_peak_power()), std::sqrt(s.pump_long_peak_power()), 1e-3, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(integrate_four_mode(s, a0));
}
BENCHMARK(BM_FourMode)->Unit(benchmark::kMicrosecond);

void BM_PowerSweep(benchmark::State& state) {
  const auto ps = seqfwm::testing::train(777.0, 30.0 * seqfwm::testing::kPcf2Coupling);
  const auto pl = seqfwm::testing::train(977.2, 14.0 * seqfwm::testing::kPcf2Coupling);
  const PulsedPumps pumps{ps, pl};
  const auto s = seqfwm::testing::pcf2_setup(pcf2(), 30.0, 14.0);
  std::vector<double> powers;
  for (int i = 0; i <= 10; ++i) powers.push_back(i * 1e-3);
  const SweepSpec spec{SweepAxis::ShortPumpPower, powers, static_cast<unsigned>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(sweep_efficiency(s, pumps, 1e-3, spec));
}
BENCHMARK(BM_PowerSweep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BandIntegration(benchmark::State& state) {
  const auto pc = pcf1_config(8192, 40e-12, StepPolicy::Fixed);
  const auto s = seeded_fwm_run(seqfwm::testing::train(777.0, 350.0), 1e-3, 644.88e-9, pc);
  const auto band = default_idler_band(seqfwm::testing::train(777.0, 350.0), 644.88e-9);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_band_power(s, band));
}
BENCHMARK(BM_BandIntegration);

}  // namespace

BENCHMARK_MAIN();
