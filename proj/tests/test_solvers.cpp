#include "doctest.h"

#include <cmath>

#include "defectlab/solvers.hpp"

using namespace defectlab;

namespace {

Vec2 center_plaquette(const Lattice& lat, double cx, double cy) {
  const double eps = lat.epsilon();
  const auto ax = static_cast<std::int32_t>(std::lround(cx / eps - 0.5));
  const auto ay = static_cast<std::int32_t>(std::lround(cy / eps - 0.5));
  const std::int32_t p = lat.plaquette_at(ax, ay);
  REQUIRE(p >= 0);
  return lat.plaquette_center(p);
}

}  // namespace

TEST_CASE("vortex ansatz: empty prescription gives the constant field") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 8);
  const SpinField v = vortex_ansatz(DefectPrescription{}, lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    CHECK(v[static_cast<std::int32_t>(s)].x == 1.0);
    CHECK(v[static_cast<std::int32_t>(s)].y == 0.0);
  }
}

TEST_CASE("vortex ansatz carries its prescription exactly") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 32);
  DefectPrescription one;
  one.charges = {{center_plaquette(lat, 0.5, 0.5), 1}};
  const SpinField v = vortex_ansatz(one, lat);
  CHECK(same_atoms(vorticity_measure(v),
                   prescription_measure(one, lat.geometry())));

  DefectPrescription pair;
  pair.charges = {{center_plaquette(lat, 0.25, 0.5), 1},
                  {center_plaquette(lat, 0.75, 0.5), -1}};
  const SpinField vp = vortex_ansatz(pair, lat);
  const DefectMeasure mu = vorticity_measure(vp);
  CHECK(mu.atoms().size() == 2);
  CHECK(mu.total_mass() == 0.0);
}

TEST_CASE("prescription validation rejects off-center points and degree 2") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 8);
  DefectPrescription bad;
  bad.charges = {{{0.5, 0.5}, 1}};  // a site, not a plaquette center
  CHECK_THROWS_AS(vortex_ansatz(bad, lat), std::invalid_argument);
  DefectPrescription deg2;
  deg2.charges = {{center_plaquette(lat, 0.5, 0.5), 2}};
  CHECK_THROWS_AS(vortex_ansatz(deg2, lat), std::invalid_argument);
}

TEST_CASE("dirac string: empty is zero, single defect has curl -1") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 16);
  const BondField zero = dirac_string(DefectPrescription{}, lat);
  for (double v : zero.values()) CHECK(v == 0.0);

  DefectPrescription one;
  one.charges = {{center_plaquette(lat, 0.5, 0.5), 1}};
  const BondField p = dirac_string(one, lat);
  p.check_integrality();
  const std::vector<double> curl = discrete_curl(p);
  const Vec2 a = one.charges[0].first;
  for (std::size_t q = 0; q < lat.plaquette_count(); ++q) {
    const double want =
        norm(lat.plaquette_center(static_cast<std::int32_t>(q)) - a) < 1e-12
            ? -1.0
            : 0.0;
    CHECK(curl[q] == want);
  }
}

TEST_CASE("dirac string: same-row pair connects directly when shorter") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 16);
  DefectPrescription pair;
  pair.charges = {{center_plaquette(lat, 0.4375, 0.5), 1},
                  {center_plaquette(lat, 0.5625, 0.5), -1}};
  const BondField p = dirac_string(pair, lat);
  int nonzero = 0;
  for (double v : p.values()) nonzero += (v != 0.0);
  CHECK(nonzero == 2);  // just the two columns between the pair
  const std::vector<double> curl = discrete_curl(p);
  for (std::size_t q = 0; q < lat.plaquette_count(); ++q) {
    double want = 0.0;
    for (const auto& [pos, d] : pair.charges) {
      if (norm(lat.plaquette_center(static_cast<std::int32_t>(q)) - pos) <
          1e-12) {
        want = -d;
      }
    }
    CHECK(curl[q] == want);
  }
}

TEST_CASE("sd solve: empty prescription returns the ground state") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 8);
  const auto [u, rep] = sd_minimize(DefectPrescription{}, lat);
  CHECK(rep.success);
  CHECK(rep.final_energy == 0.0);
  CHECK(rep.achieved.atoms().empty());
}

TEST_CASE("sd solve: single dislocation met exactly, descent below the bound") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 32);
  DefectPrescription one;
  one.charges = {{center_plaquette(lat, 0.5, 0.5), 1}};
  SolverOptions opt;
  opt.record_trace = true;
  const auto [u, rep] = sd_minimize(one, lat, opt);
  REQUIRE(rep.success);
  CHECK(same_atoms(rep.achieved, prescription_measure(one, lat.geometry())));
  CHECK(rep.final_energy > 0.0);
  CHECK(rep.final_energy <= rep.quadratic_bound + 1e-12);
  for (std::size_t i = 1; i < rep.trace.size(); ++i) {
    CHECK(rep.trace[i].energy <= rep.trace[i - 1].energy + 1e-12);
  }
  // right ballpark: 4 pi^2 SD ~ pi log(1/eps) + O(1)
  const double scaled = scaled_energy(Model::SD, rep.final_energy,
                                      lat.epsilon(), ScalingRegime(1));
  CHECK(scaled > M_PI * 0.8);
  CHECK(scaled < M_PI * 2.5);
}

TEST_CASE("xy solve: descent from the ansatz, topology pinned") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 32);
  DefectPrescription one;
  one.charges = {{center_plaquette(lat, 0.5, 0.5), 1}};
  const double ansatz_energy = xy_energy(vortex_ansatz(one, lat)).total;
  SolverOptions opt;
  opt.record_trace = true;
  const auto [v, rep] = xy_minimize(one, lat, opt);
  REQUIRE(rep.success);
  CHECK(rep.final_energy <= ansatz_energy + 1e-12);
  CHECK(same_atoms(rep.achieved, prescription_measure(one, lat.geometry())));
  for (std::size_t i = 1; i < rep.trace.size(); ++i) {
    CHECK(rep.trace[i].energy <= rep.trace[i - 1].energy + 1e-12);
  }
}

TEST_CASE("xy solve: empty prescription is already optimal") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 8);
  const auto [v, rep] = xy_minimize(DefectPrescription{}, lat);
  CHECK(rep.success);
  CHECK(rep.final_energy == 0.0);
  CHECK(rep.iterations == 0);
}

TEST_CASE("xy scaled energy approaches pi from above as eps shrinks") {
  double prev = 1e9;
  for (int k = 3; k <= 5; ++k) {
    const double eps = std::pow(2.0, -k);
    const Lattice lat = build_lattice(DomainGeometry::unit_square(), eps);
    DefectPrescription one;
    one.charges = {{center_plaquette(lat, 0.5, 0.5), 1}};
    const auto [v, rep] = xy_minimize(one, lat);
    REQUIRE(rep.success);
    const double scaled =
        scaled_energy(Model::XY, rep.final_energy, eps, ScalingRegime(1));
    CHECK(scaled > M_PI);
    CHECK(scaled < prev);
    prev = scaled;
  }
}

TEST_CASE("gl solve: empty prescription relaxes to a constant") {
  const auto sol = gl_minimize(DefectPrescription{},
                               DomainGeometry::unit_square(), 0.25, 0.125);
  CHECK(sol.report.success);
  CHECK(sol.report.final_energy < 1e-20);
}

TEST_CASE("gl solve: single vortex matches its prescription") {
  const DomainGeometry sq = DomainGeometry::unit_square();
  const double eps = 1.0 / 16;
  const Lattice coarse = build_lattice(sq, eps);
  DefectPrescription one;
  one.charges = {{center_plaquette(coarse, 0.5, 0.5), 1}};
  SolverOptions opt;
  opt.record_trace = true;
  const auto sol = gl_minimize(one, sq, eps, eps / 2, opt);
  REQUIRE(sol.report.success);
  CHECK(sol.report.achieved.atoms().size() == 1);
  CHECK(sol.report.achieved.atoms()[0].weight == 1.0);
  CHECK(sol.report.constraint_flat_residual < 0.1);
  for (std::size_t i = 1; i < sol.report.trace.size(); ++i) {
    CHECK(sol.report.trace[i].energy <=
          sol.report.trace[i - 1].energy + 1e-12);
  }
  const double scaled = scaled_energy(Model::GL, sol.report.final_energy, eps,
                                      ScalingRegime(1));
  CHECK(scaled > 0.5 * M_PI);
  CHECK(scaled < 2.5 * M_PI);
  CHECK(gl_minimize(one, sq, eps, eps / 2).report.final_energy ==
        doctest::Approx(sol.report.final_energy));  // deterministic
}

TEST_CASE("gl solve rejects meshes coarser than eps/2") {
  CHECK_THROWS_AS(gl_minimize(DefectPrescription{},
                              DomainGeometry::unit_square(), 0.25, 0.2),
                  std::invalid_argument);
}

TEST_CASE("total achieved degree equals the prescribed degree") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 16);
  DefectPrescription pres;
  pres.charges = {{center_plaquette(lat, 0.28125, 0.5), 1},
                  {center_plaquette(lat, 0.71875, 0.5), 1}};
  const auto [v, rep] = xy_minimize(pres, lat);
  REQUIRE(rep.success);
  double total = 0.0;
  for (const DefectAtom& a : rep.achieved.atoms()) total += a.weight;
  CHECK(total == 2.0);
}
