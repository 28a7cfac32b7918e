#include "doctest.h"

#include <cmath>
#include <random>

#include "defectlab/fields.hpp"

using namespace defectlab;

namespace {

Lattice unit_square_lattice(double eps) {
  return build_lattice(DomainGeometry::unit_square(), eps);
}

// dyadic uniform in [0,1): exactly representable with 20 bits
double dyadic_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 44) / static_cast<double>(1ull << 20);
}

}  // namespace

TEST_CASE("discrete gradient of a constant vanishes") {
  const Lattice lat = unit_square_lattice(0.25);
  const DisplacementField u(lat, 3.7);
  const BondField du = discrete_gradient(u);
  for (double v : du.values()) CHECK(v == 0.0);
}

TEST_CASE("discrete gradient of u = x/eps: horizontal bonds 1, vertical 0") {
  const Lattice lat = unit_square_lattice(0.25);
  DisplacementField u(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    u[static_cast<std::int32_t>(s)] = lat.site_grid(static_cast<std::int32_t>(s)).ix;
  }
  const BondField du = discrete_gradient(u);
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    CHECK(du[static_cast<std::int32_t>(b)] ==
          (lat.bonds()[b].horizontal ? 1.0 : 0.0));
  }
}

TEST_CASE("discrete gradient is translation invariant, exactly") {
  const Lattice lat = unit_square_lattice(0.25);
  std::mt19937_64 rng(7);
  DisplacementField u(lat), v(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    u[static_cast<std::int32_t>(s)] = dyadic_uniform(rng);
    v[static_cast<std::int32_t>(s)] = u[static_cast<std::int32_t>(s)] + 0.5;
  }
  const BondField du = discrete_gradient(u), dv = discrete_gradient(v);
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    CHECK(du[static_cast<std::int32_t>(b)] == dv[static_cast<std::int32_t>(b)]);
  }
}

TEST_CASE("phase representative in [0,1): cardinal directions") {
  const Lattice lat = unit_square_lattice(0.25);
  CHECK(phase_of(SpinField(lat, {1, 0}))[0] == 0.0);
  CHECK(phase_of(SpinField(lat, {0, 1}))[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(phase_of(SpinField(lat, {-1, 0}))[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("exp_of cardinal values and exact integer periodicity") {
  const Lattice lat = unit_square_lattice(0.25);
  const SpinField v0 = exp_of(DisplacementField(lat, 0.0));
  CHECK(v0[0].x == 1.0);
  CHECK(v0[0].y == 0.0);
  const SpinField v34 = exp_of(DisplacementField(lat, 0.75));
  CHECK(v34[0].x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v34[0].y == doctest::Approx(-1.0).epsilon(1e-15));

  std::mt19937_64 rng(11);
  DisplacementField u(lat), uk(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const double x = dyadic_uniform(rng);
    u[static_cast<std::int32_t>(s)] = x;
    uk[static_cast<std::int32_t>(s)] = x + 7.0;  // exact for dyadic x
  }
  const SpinField a = exp_of(u), b = exp_of(uk);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    CHECK(a[static_cast<std::int32_t>(s)].x == b[static_cast<std::int32_t>(s)].x);
    CHECK(a[static_cast<std::int32_t>(s)].y == b[static_cast<std::int32_t>(s)].y);
  }
}

TEST_CASE("phase/exp round trip reproduces the spin field to 1e-12") {
  const Lattice lat = unit_square_lattice(0.125);
  std::mt19937_64 rng(3);
  DisplacementField u(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    u[static_cast<std::int32_t>(s)] = 10.0 * dyadic_uniform(rng) - 5.0;
  }
  const SpinField v = exp_of(u);
  const SpinField v2 = exp_of(phase_of(v));
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    CHECK(norm(v2[static_cast<std::int32_t>(s)] -
               v[static_cast<std::int32_t>(s)]) < 1e-12);
  }
}

TEST_CASE("per-bond chord identity |v(i)-v(j)|^2 = 4 sin^2(pi dist(du, Z))") {
  const Lattice lat = unit_square_lattice(0.25);
  std::mt19937_64 rng(5);
  DisplacementField u(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    u[static_cast<std::int32_t>(s)] = 4.0 * dyadic_uniform(rng) - 2.0;
  }
  const SpinField v = exp_of(u);
  for (const Bond& b : lat.bonds()) {
    const double du = u[b.b] - u[b.a];
    const double dist = std::abs(du - std::nearbyint(du));
    const Vec2 dv = v[b.b] - v[b.a];
    const double chord2 = dot(dv, dv);
    CHECK(chord2 ==
          doctest::Approx(4.0 * std::pow(std::sin(M_PI * dist), 2)).epsilon(1e-10));
    CHECK(chord2 <= 4.0 * M_PI * M_PI * dist * dist + 1e-12);
  }
}

TEST_CASE("PL interpolation: constants, barycenter average, |w| <= 1") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 3.0);
  REQUIRE(lat.plaquette_count() == 1);
  const Triangulation tri = build_triangulation(lat);

  const ContinuumField wc = interpolate_pl(SpinField(lat, {0, 1}), tri);
  CHECK(wc.evaluate({0.5, 0.5}).y == 1.0);

  // corner values (1,0), (0,1), (0,1) average to (1/3, 2/3) at the barycenter
  const Plaquette& q = lat.plaquettes()[0];
  SpinField v(lat);
  v.set(q.s00, {1, 0});
  v.set(q.s10, {0, 1});
  v.set(q.s11, {0, 1});
  v.set(q.s01, {1, 0});
  const ContinuumField w = interpolate_pl(v, tri);
  const Vec2 bary = (lat.site_position(q.s00) + lat.site_position(q.s10) +
                     lat.site_position(q.s11)) /
                    3.0;
  const Vec2 val = w.evaluate(bary);
  CHECK(val.x == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(val.y == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

  for (double x = 0.34; x < 0.66; x += 0.03) {
    for (double y = 0.34; y < 0.66; y += 0.03) {
      CHECK(norm(w.evaluate({x, y})) <= 1.0 + 1e-14);
    }
  }
}

TEST_CASE("PL interpolation is exact on affine data") {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 0.25,
                                    SiteRule::ClosedCover);
  const Triangulation tri = build_triangulation(lat);
  ContinuumField w(tri);
  auto f = [](const Vec2& p) { return Vec2{2.0 * p.x - p.y + 0.3, p.x + 0.1 * p.y}; };
  for (std::size_t n = 0; n < tri.node_count(); ++n) {
    w[static_cast<std::int32_t>(n)] = f(tri.node_position(static_cast<std::int32_t>(n)));
  }
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const Vec2 p{dyadic_uniform(rng), dyadic_uniform(rng)};
    CHECK(norm(w.evaluate(p) - f(p)) < 1e-12);
  }
}

TEST_CASE("sample_on_net: constants, normalization, core failure") {
  const Lattice mesh_lat = build_lattice(DomainGeometry::unit_square(), 0.25,
                                         SiteRule::ClosedCover);
  const Triangulation tri = build_triangulation(mesh_lat);
  const Lattice net =
      build_lattice(DomainGeometry::rectangle(0.05, 0.95, 0.05, 0.95), 0.2);
  REQUIRE(net.site_count() > 0);

  const ContinuumField w01(tri, {0, 1});
  const NetSample s1 = sample_on_net(w01, net, {0.05, 0.05});
  CHECK(s1.ok);
  CHECK(s1.radial_defect == 0.0);
  for (std::size_t s = 0; s < net.site_count(); ++s) {
    CHECK(s1.field[static_cast<std::int32_t>(s)].y == 1.0);
  }

  const ContinuumField w2(tri, {2, 0});
  const NetSample s2 = sample_on_net(w2, net, {0.05, 0.05});
  CHECK(s2.ok);
  CHECK(s2.radial_defect == doctest::Approx(1.0));
  CHECK(s2.field[0].x == 1.0);

  const ContinuumField wz(tri, {0, 0});
  const NetSample s3 = sample_on_net(wz, net, {0.05, 0.05});
  CHECK_FALSE(s3.ok);
  CHECK(s3.core_hits > 0);
}
