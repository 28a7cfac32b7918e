#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "defectlab/flatnorm.hpp"
#include "defectlab/solvers.hpp"

using namespace defectlab;

namespace {

const Lattice& bench_lattice() {
  static const Lattice lat =
      build_lattice(DomainGeometry::unit_square(), 1.0 / 128);
  return lat;
}

SpinField bench_vortex() {
  const Lattice& lat = bench_lattice();
  DefectPrescription one;
  one.charges = {{lat.plaquette_center(lat.plaquette_at(63, 63)), 1}};
  return vortex_ansatz(one, lat);
}

}  // namespace

static void BM_BuildLattice(benchmark::State& state) {
  const DomainGeometry sq = DomainGeometry::unit_square();
  const double eps = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_lattice(sq, eps));
  }
}
BENCHMARK(BM_BuildLattice)->Arg(64)->Arg(256);

static void BM_XyEnergy(benchmark::State& state) {
  const SpinField v = bench_vortex();
  for (auto _ : state) {
    benchmark::DoNotOptimize(xy_energy(v).total);
  }
}
BENCHMARK(BM_XyEnergy);

static void BM_VorticityMeasure(benchmark::State& state) {
  const SpinField v = bench_vortex();
  for (auto _ : state) {
    benchmark::DoNotOptimize(vorticity_measure(v).atoms().size());
  }
}
BENCHMARK(BM_VorticityMeasure);

static void BM_SdQuadraticSolve(benchmark::State& state) {
  const Lattice& lat = bench_lattice();
  DefectPrescription one;
  one.charges = {{lat.plaquette_center(lat.plaquette_at(63, 63)), 1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(sd_minimize(one, lat).second.final_energy);
  }
}
BENCHMARK(BM_SdQuadraticSolve);

static void BM_FlatNormAtomic(benchmark::State& state) {
  const DomainGeometry sq = DomainGeometry::unit_square();
  std::mt19937_64 rng(1);
  DefectMeasure mu(sq);
  for (int i = 0; i < state.range(0); ++i) {
    const double x = 0.1 + 0.8 * static_cast<double>(rng() >> 11) / 9007199254740992.0;
    const double y = 0.1 + 0.8 * static_cast<double>(rng() >> 11) / 9007199254740992.0;
    mu.add_atom({x, y}, i % 2 ? 1.0 : -1.0);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(flat_norm_atomic(mu, sq).value);
  }
}
BENCHMARK(BM_FlatNormAtomic)->Arg(10)->Arg(100);

static void BM_JacobianDrift(benchmark::State& state) {
  const Lattice& lat = bench_lattice();
  const SpinField v = bench_vortex();
  const Triangulation tri = build_triangulation(lat);
  const ContinuumField w = interpolate_pl(v, tri);
  for (auto _ : state) {
    const DefectMeasure diff =
        jacobian_density(w).scaled(1.0 / M_PI).minus(vorticity_measure(v));
    benchmark::DoNotOptimize(
        flat_norm_grid(diff, lat.geometry(), lat.epsilon()).value);
  }
}
BENCHMARK(BM_JacobianDrift);

BENCHMARK_MAIN();
