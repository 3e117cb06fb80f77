#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ivobs/expr.hpp"
#include "ivobs/gain.hpp"
#include "ivobs/lp.hpp"
#include "ivobs/observer.hpp"
#include "ivobs/scenario.hpp"
#include "ivobs/tighten.hpp"

using namespace ivobs;

namespace {

Scenario bundled(const char* name) { return load_scenario(std::string(IVOBS_SCENARIO_DIR) + "/" + name); }

void BM_EvalInterval(benchmark::State& state) {
  const Scenario s = bundled("bioreactor.scn");
  const IntervalVector u = s.model.U.at(3.0);
  const IntervalVector x{Interval(0.4, 1.2), Interval(17, 31)};
  for (auto _ : state) {
    for (std::size_t i = 0; i < 2; ++i) benchmark::DoNotOptimize(s.model.f.eval_interval(i, Interval(3.0), u, x));
  }
}
BENCHMARK(BM_EvalInterval);

void BM_Tighten(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Matrix M(2 * n, n);
  std::vector<double> d(2 * n);
  std::vector<Interval> items;
  for (std::size_t j = 0; j < n; ++j) {
    items.emplace_back(-1.0 - j, 2.0 + j);
    for (std::size_t r = 0; r < 2 * n; ++r) M(r, j) = ((r + 3 * j) % 5) - 2.0;
  }
  for (std::size_t r = 0; r < 2 * n; ++r) d[r] = 0.5 + r % 3;
  const IntervalVector box(std::move(items));
  for (auto _ : state) benchmark::DoNotOptimize(tighten_interval(box, M, d));
}
BENCHMARK(BM_Tighten)->Arg(2)->Arg(4)->Arg(8);

void BM_ObserverRhs(benchmark::State& state) {
  const Scenario s = bundled("bioreactor.scn");
  const TruthTrajectory truth = simulate_scenario_truth(s);
  const MeasurementSignal y = scenario_measurements(s, truth);
  const Variant v = state.range(0) ? Variant::kGmac : Variant::kNoConstraints;
  const IntervalObserver obs(ObserverSpec(v, resolve_gain(s, s.observer.gain)), s.model, y);
  const std::vector<double> lo{0.4, 17.0}, hi{1.2, 31.0};
  std::vector<double> dlo(2), dhi(2);
  for (auto _ : state) {
    obs.rhs(7.3, lo, hi, dlo, dhi, nullptr);
    benchmark::DoNotOptimize(dlo.data());
    benchmark::DoNotOptimize(dhi.data());
  }
}
BENCHMARK(BM_ObserverRhs)->Arg(0)->Arg(1);

void BM_GainSynthesis(benchmark::State& state) {
  const Scenario s = bundled("linearized.scn");
  const LinearObserverData data{*s.A, s.model.C};
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_gain(data));
}
BENCHMARK(BM_GainSynthesis);

void BM_RunObserver(benchmark::State& state) {
  const Scenario s = bundled("bioreactor.scn");
  const TruthTrajectory truth = simulate_scenario_truth(s);
  const MeasurementSignal y = scenario_measurements(s, truth);
  const ObserverSpec spec(Variant::kGmac, resolve_gain(s, s.observer.gain));
  const IntegConfig cfg = integration_config(s);
  for (auto _ : state) benchmark::DoNotOptimize(run_observer(spec, s.model, y, cfg));
}
BENCHMARK(BM_RunObserver)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
