#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "uavrelay/channel.hpp"
#include "uavrelay/cso.hpp"
#include "uavrelay/smdp.hpp"
#include "uavrelay/trajectory.hpp"

using namespace uavrelay;

static void BM_MarcumQ1(benchmark::State& state) {
  double a = 0.5, acc = 0.0;
  for (auto _ : state) {
    acc += channel::marcum_q1(a, 2.0);
    a = a < 8.0 ? a + 0.01 : 0.5;
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_MarcumQ1);

static void BM_OptimalRate(benchmark::State& state) {
  const channel::ChannelParams p;
  double g = 1e-6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(channel::optimal_rate({g, 3.0}, p));
    g = g < 1e-2 ? g * 1.1 : 1e-6;
  }
}
BENCHMARK(BM_OptimalRate);

static void BM_LinkBudgetBuild(benchmark::State& state) {
  channel::LinkBudget::Spec spec;
  spec.table_step_m = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(channel::LinkBudget(spec));
}
BENCHMARK(BM_LinkBudgetBuild)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_CsoSphere(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const cso::Bounds b{std::vector<double>(d, -5.0), std::vector<double>(d, 5.0)};
  cso::CsoConfig c;
  c.max_cost_evaluations = 10000;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cso::cso_minimize(
        [](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += v * v;
          return s;
        },
        b, c, seed++));
  }
}
BENCHMARK(BM_CsoSphere)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

namespace {

struct TrajectoryRig {
  TrajectoryRig() : links(channel::LinkBudget::Spec{}), rates(links) { env.rates = &rates; }
  channel::LinkBudget links;
  traj::LinkBudgetRates rates;
  traj::RelayEnvironment env;
};

}  // namespace

static void BM_TransferSchedule(benchmark::State& state) {
  static const TrajectoryRig rig;
  const std::vector<traj::Polar> wp{{200.0, 0.0}, {600.0, 1.0}, {800.0, 1.5}, {400.0, 1.2}};
  const std::vector<double> v{30.0, 30.0, 22.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(traj::transfer_schedule(wp, v, {900.0, 1.4}, rig.rates, rig.env.power, 1e6, 1000.0));
  }
}
BENCHMARK(BM_TransferSchedule)->Unit(benchmark::kMicrosecond);

static void BM_TrajectoryDesign(benchmark::State& state) {
  static const TrajectoryRig rig;
  cso::CsoConfig c;
  c.swarm_size = 20;
  c.max_cost_evaluations = static_cast<std::size_t>(state.range(0));
  c.waypoint_count = 4;
  const traj::TrajectoryDesigner d(rig.env, c);
  const traj::RelayTask task{{100.0, 0.0}, {850.0, 2.0}, 250.0};
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(d.design(task, 1e-4, seed++));
}
BENCHMARK(BM_TrajectoryDesign)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
