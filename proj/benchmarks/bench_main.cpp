#include <benchmark/benchmark.h>

#include <cmath>

#include "sqg/lattice_kernels.hpp"
#include "sqg/nonlocal_ops.hpp"
#include "sqg/pinn.hpp"
#include "sqg/sqg_solver.hpp"

using namespace sqg;

namespace {

spectral::GridField smoke_field(int n) {
  return spectral::GridField::sample(n, [](Vec2 x) { return std::cos(x.x1) + 0.5 * std::sin(x.x2); });
}

BoxFunction wave_box() {
  return BoxFunction(3, 2, [](Vec2 x, MultiIndex a) {
    return std::cos(2 * x.x1 + x.x2 + a.order() * kPi / 2) * std::pow(2.0, a.d1);
  });
}

void BM_EvalK(benchmark::State& st) {
  const int m = int(st.range(0));
  Vec2 y{0.3, -1.1};
  for (auto _ : st) benchmark::DoNotOptimize(lattice::eval_K(y, m));
}
BENCHMARK(BM_EvalK)->Arg(16)->Arg(64);

void BM_PeriodizedKernel(benchmark::State& st) {
  const lattice::PeriodizedKernel k(16);
  double kv;
  Vec2 r;
  for (auto _ : st) {
    k.lattice_both({0.3, -1.1}, kv, r);
    benchmark::DoNotOptimize(kv);
  }
}
BENCHMARK(BM_PeriodizedKernel);

void BM_ApplyBoth(benchmark::State& st) {
  const quad::QuadratureSpec spec =
      st.range(0) == 0 ? quad::QuadratureSpec::training() : quad::QuadratureSpec::reporting();
  const nonlocal::OperatorContext ctx(spec, st.range(0) == 0 ? 16 : 64);
  const BoxFunction phi = wave_box();
  const std::vector<Vec2> xs{{0.1, 0.2}, {-1.0, 2.0}, {2.5, -0.3}, {0.0, 0.0}};
  for (auto _ : st) benchmark::DoNotOptimize(nonlocal::apply_both_field(phi, xs, ctx));
  st.SetItemsProcessed(st.iterations() * std::int64_t(xs.size()));
}
BENCHMARK(BM_ApplyBoth)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SolverStep(benchmark::State& st) {
  solver::SolverState s;
  s.field = smoke_field(int(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(solver::step(s, 1e-3));
}
BENCHMARK(BM_SolverStep)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_NetworkEval(benchmark::State& st) {
  const net::MlpParams p = net::MlpParams::xavier(net::kDefaultArchitecture, 42);
  const StMultiIndex a{0, int(st.range(0)), 0};
  for (auto _ : st) benchmark::DoNotOptimize(net::eval(p, {0.1, 0.2, 0.3}, a));
}
BENCHMARK(BM_NetworkEval)->Arg(0)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_TrainingLoss(benchmark::State& st) {
  pinn::TrainConfig cfg;
  const spectral::GridField psi0 = smoke_field(64);
  const pinn::TrainingLoss loss(cfg, psi0);
  const pinn::Collocation c = pinn::Collocation::sample(cfg, 1, false);
  const net::MlpParams p = net::MlpParams::xavier(cfg.architecture, 42);
  std::vector<double> g;
  for (auto _ : st) benchmark::DoNotOptimize(loss.evaluate(p, c, &g));
}
BENCHMARK(BM_TrainingLoss)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
