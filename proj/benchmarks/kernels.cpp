#include "kppfront/barrier_check.hpp"
#include "kppfront/front_lab.hpp"
#include "kppfront/linear_tail.hpp"
#include "kppfront/rd_solver.hpp"
#include "kppfront/traveling_wave.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace kpp;

namespace {

GridSpec grid(double dx) {
    GridSpec g;
    g.dx = dx;
    g.left = -40.0;
    g.uniform_end = 60.0;
    g.right = 150.0;
    return g;
}

void BM_SolverStep(benchmark::State& st) {
    const double dx = 1.0 / static_cast<double>(st.range(0));
    const auto sp = lambda_of_c(2.0, 1.0);
    SolverOptions o;
    o.dt = 0.5;
    o.scheme = TimeScheme::Sbdf2;
    RdSolver s(KppNonlinearity::fisher(), FrontInitialData::h1(1, 1, 0.0, 1.0), Frame::leading_edge(sp), grid(dx), o);
    for (auto _ : st) s.step();
    st.counters["nodes"] = static_cast<double>(s.state().size());
}
BENCHMARK(BM_SolverStep)->Arg(10)->Arg(20);

void BM_HeatQuadrature(benchmark::State& st) {
    const auto w0 = TailInitialData::h1(static_cast<double>(st.range(0)));
    double t = 100.0;
    for (auto _ : st) {
        benchmark::DoNotOptimize(heat_eval_quadrature(w0, t, 0.5 * std::sqrt(t)));
        t = t < 1e4 ? t * 1.1 : 100.0;
    }
}
BENCHMARK(BM_HeatQuadrature)->Arg(-4)->Arg(0)->Arg(2);

void BM_LevelSet(benchmark::State& st) {
    const auto sp = lambda_of_c(2.0, 1.0);
    RdSolver s(KppNonlinearity::fisher(), FrontInitialData::localized(), Frame::leading_edge(sp), grid(0.1));
    s.run_until(50.0);
    const auto snap = s.state();
    for (auto _ : st) benchmark::DoNotOptimize(level_set(snap, 0.5));
}
BENCHMARK(BM_LevelSet);

void BM_FitShift(benchmark::State& st) {
    FrontTrace tr;
    for (double t : log_grid(10.0, 1e5, 64)) tr.add(t, 2.0 * t - 1.5 * std::log(t) + 0.3 + 0.01 * std::sin(t));
    FitModel m;
    m.speed = FitTerm::fixed(2.0);
    for (auto _ : st) benchmark::DoNotOptimize(fit_shift(tr, m, {1e4, 1e5}));
}
BENCHMARK(BM_FitShift);

void BM_WaveProfile(benchmark::State& st) {
    const auto f = KppNonlinearity::fisher();
    for (auto _ : st) benchmark::DoNotOptimize(solve_profile(f, 2.5));
}
BENCHMARK(BM_WaveProfile)->Unit(benchmark::kMillisecond);

void BM_CertifyCoarse(benchmark::State& st) {
    BarrierSetup s;
    s.kind = BarrierKind::H1Upper;
    auto p = BarrierParams::defaults(s.kind, 0.0);
    p.T = 1e6;
    const BarrierSpec b(s, p);
    auto plan = SamplingPlan::coarse();
    plan.threads = 1;
    for (auto _ : st) benchmark::DoNotOptimize(certify(b, plan));
}
BENCHMARK(BM_CertifyCoarse)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
