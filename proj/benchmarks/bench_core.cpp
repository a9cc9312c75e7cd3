#include <benchmark/benchmark.h>

#include "flowforms/fieldlib.hpp"
#include "flowforms/flow.hpp"
#include "flowforms/geometry.hpp"
#include "flowforms/rng.hpp"
#include "flowforms/symplectic.hpp"
#include "flowforms/util.hpp"

using namespace flowforms;

namespace {

void BM_field_eval(benchmark::State& state) {
  const auto u = fieldlib::by_id("taylor-green-2d", 0.05);
  const Vec x = (Vec(2) << 0.7, 1.3).finished();
  for (auto _ : state) {
    benchmark::DoNotOptimize(u.value(x, 0.0));
    benchmark::DoNotOptimize(u.jacobian(x, 0.0));
  }
}
BENCHMARK(BM_field_eval);

void BM_noise_normals(benchmark::State& state) {
  const rng::NoiseStream st(42, 7);
  Vec out(4);
  std::uint64_t step = 0;
  for (auto _ : state) {
    st.normals(step++, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_noise_normals);

void BM_sde_step(benchmark::State& state) {
  const auto u = fieldlib::by_id("taylor-green-2d", 0.1);
  const auto sys = symplectic::phase_lift_system(u, 0.1);
  const DiffusionSpec spec = sys.stratonovich_spec();
  const Vec x0 = (Vec(4) << 0.8, 0.6, 0.3, -0.4).finished();
  flow::IntegratorOptions opt;
  opt.h = 1e-3;
  opt.checkpoints = {opt.h * static_cast<double>(state.range(0))};
  const rng::NoiseStream noise(1, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(flow::integrate_sde(spec, x0, 0.0, opt, noise));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_sde_step)->Arg(64)->Arg(512);

void BM_generator_two_form(benchmark::State& state) {
  const auto u = fieldlib::by_id("taylor-green-2d", 0.1);
  const auto sys = symplectic::phase_lift_system(u, 0.1);
  const DiffusionSpec spec = sys.stratonovich_spec();
  const geometry::TwoForm omega = geometry::standard_symplectic(4);
  const geometry::TwoForm gen =
      geometry::generator_two_form(spec.drift, spec.fields, omega);
  const Vec x = (Vec(4) << 0.8, 0.6, 0.3, -0.4).finished();
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen.W(x, 0.0));
  }
}
BENCHMARK(BM_generator_two_form);

void BM_ensemble(benchmark::State& state) {
  const auto u = fieldlib::by_id("taylor-green-3d", 0.1);
  const DiffusionSpec spec = flow::reversed_flow_spec(u, 0.1);
  const Vec x0 = (Vec(3) << 0.8, 0.7, 0.2).finished();
  flow::IntegratorOptions opt;
  opt.h = 2e-3;
  opt.checkpoints = {0.1};
  const auto observable = [](const flow::FlowSample& fs) {
    return fs.states.back();
  };
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        flow::ensemble(spec, x0, static_cast<int>(state.range(0)), 0.0, opt,
                       2024, observable));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ensemble)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
