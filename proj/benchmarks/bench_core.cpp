#include <vector>

#include <benchmark/benchmark.h>

#include "glyco/identification.hpp"
#include "glyco/msg_model.hpp"

using namespace glyco;

namespace {

TrainingWindow window(int k) {
  const MsgParams truth{0.4, 110.0, 6.0, 9.0, 4.0, 4.0};
  const RateSchedule ins({0.0, 6.0, 12.0, 18.0}, {1.0, 4.0, 2.0, 5.0}, 24.0);
  const RateSchedule nut({0.0, 8.0, 16.0}, {6.0, 3.0, 7.0}, 24.0);
  std::vector<double> times;
  for (int i = 1; i < k; ++i) times.push_back(24.0 * i / (k - 1));
  const auto tr = simulate_path(truth, {0.0, 190.0}, times, ins, nut, 3);
  GlucoseTrace full;
  full.push_back(0.0, 190.0);
  for (std::size_t i = 0; i < tr.size(); ++i) full.push_back(tr.times[i], tr.values[i]);
  return {full, ins, nut, 0.0, 24.0};
}

void BM_NegLogLikelihood(benchmark::State& state) {
  const auto w = window(static_cast<int>(state.range(0)));
  const MsgParams p{0.5, 120.0, 5.0, 8.0, 5.0, 5.0};
  for (auto _ : state) benchmark::DoNotOptimize(neg_log_likelihood(p, w));
}
BENCHMARK(BM_NegLogLikelihood)->Arg(16)->Arg(40)->Arg(160);

void BM_Fit(benchmark::State& state) {
  const auto w = window(40);
  FitConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit(w, cfg));
}
BENCHMARK(BM_Fit)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SimulatePath(benchmark::State& state) {
  const MsgParams p{0.5, 120.0, 5.0, 8.0, 5.0, 5.0};
  const RateSchedule ins({0.0, 12.0}, {2.0, 3.0}, 48.0);
  const RateSchedule nut = RateSchedule::constant(0.0, 4.0, 48.0);
  std::vector<double> times;
  for (double t = 0.5; t <= 48.0; t += 0.5) times.push_back(t);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_path(p, {0.0, 150.0}, times, ins, nut, ++seed));
}
BENCHMARK(BM_SimulatePath);

}  // namespace

BENCHMARK_MAIN();
