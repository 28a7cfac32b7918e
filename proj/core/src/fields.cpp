#include "defectlab/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace defectlab {

namespace {
constexpr double kUnitTol = 1e-12;
constexpr double kCoreThreshold = 1e-8;
constexpr double kTwoPi = 2.0 * M_PI;
}  // namespace

SpinField::SpinField(const Lattice& lattice, Vec2 value)
    : lattice_(&lattice), values_(lattice.site_count(), value) {
  const double r = norm(value);
  if (std::abs(r - 1.0) > kUnitTol) {
    throw std::invalid_argument("SpinField: constant value must be unit");
  }
}

SpinField SpinField::from_angles(const Lattice& lattice,
                                 const std::vector<double>& theta) {
  if (theta.size() != lattice.site_count()) {
    throw std::invalid_argument("SpinField::from_angles: size mismatch");
  }
  SpinField v(lattice);
  for (std::size_t s = 0; s < theta.size(); ++s) {
    v.values_[s] = {std::cos(theta[s]), std::sin(theta[s])};
  }
  return v;
}

void SpinField::set(std::int32_t s, const Vec2& v) {
  const double r = norm(v);
  if (std::abs(r - 1.0) > kUnitTol) {
    throw std::invalid_argument("SpinField::set: value must be unit");
  }
  values_[s] = v;
}

double SpinField::unit_defect() const {
  double worst = 0.0;
  for (const Vec2& v : values_) {
    worst = std::max(worst, std::abs(norm(v) - 1.0));
  }
  return worst;
}

DisplacementField::DisplacementField(const Lattice& lattice, double value)
    : lattice_(&lattice), values_(lattice.site_count(), value) {}

BondField::BondField(const Lattice& lattice, bool integral)
    : lattice_(&lattice), values_(lattice.bond_count(), 0.0),
      integral_(integral) {}

void BondField::check_integrality() const {
  if (!integral_) return;
  for (double v : values_) {
    if (v != std::floor(v)) {
      throw std::logic_error("BondField: non-integer value in integral field");
    }
  }
}

ContinuumField::ContinuumField(const Triangulation& tri, Vec2 value)
    : tri_(&tri), values_(tri.node_count(), value) {}

Vec2 ContinuumField::evaluate(const Vec2& p) const {
  const std::int32_t t = tri_->locate_clamped(p);
  if (t < 0) throw std::logic_error("ContinuumField::evaluate: empty mesh");
  const Triangle& T = tri_->triangles()[t];
  const Vec2 a = tri_->node_position(T.n0);
  const Gradient g = triangle_gradient(t);
  // Clamp into the triangle's cell so off-mesh reads stay bounded.
  const double h = tri_->mesh_size();
  const double lx = std::clamp(p.x - a.x, 0.0, h);
  const double ly = std::clamp(p.y - a.y, 0.0, h);
  const Vec2 w0 = values_[T.n0];
  return {w0.x + g.gx.x * lx + g.gy.x * ly, w0.y + g.gx.y * lx + g.gy.y * ly};
}

ContinuumField::Gradient ContinuumField::triangle_gradient(std::int32_t t) const {
  const Triangle& T = tri_->triangles()[t];
  const double h = tri_->mesh_size();
  const Vec2 v0 = values_[T.n0], v1 = values_[T.n1], v2 = values_[T.n2];
  Gradient g;
  if (!T.upper) {
    // (SW, SE, NE)
    g.gx = (v1 - v0) / h;
    g.gy = (v2 - v1) / h;
  } else {
    // (SW, NE, NW)
    g.gx = (v1 - v2) / h;
    g.gy = (v2 - v0) / h;
  }
  return g;
}

Vec2 ContinuumField::triangle_mean(std::int32_t t) const {
  const Triangle& T = tri_->triangles()[t];
  return (values_[T.n0] + values_[T.n1] + values_[T.n2]) / 3.0;
}

BondField discrete_gradient(const DisplacementField& u) {
  const Lattice& lat = u.lattice();
  BondField du(lat);
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    const Bond& bond = lat.bonds()[b];
    du[static_cast<std::int32_t>(b)] = u[bond.b] - u[bond.a];
  }
  return du;
}

DisplacementField phase_of(const SpinField& v) {
  const Lattice& lat = v.lattice();
  DisplacementField u(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    double theta = std::atan2(v[static_cast<std::int32_t>(s)].y,
                              v[static_cast<std::int32_t>(s)].x);
    if (theta < 0) theta += kTwoPi;
    u[static_cast<std::int32_t>(s)] = theta / kTwoPi;
  }
  return u;
}

SpinField exp_of(const DisplacementField& u) {
  const Lattice& lat = u.lattice();
  SpinField v(lat);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const double t = u[static_cast<std::int32_t>(s)];
    const double frac = t - std::floor(t);  // exact: both are doubles < 2^52
    const double theta = kTwoPi * frac;
    v.set(static_cast<std::int32_t>(s), {std::cos(theta), std::sin(theta)});
  }
  return v;
}

ContinuumField interpolate_pl(const SpinField& v, const Triangulation& tri) {
  if (tri.lattice() != &v.lattice()) {
    throw std::invalid_argument("interpolate_pl: triangulation/lattice mismatch");
  }
  ContinuumField w(tri);
  for (std::size_t n = 0; n < tri.node_count(); ++n) {
    w[static_cast<std::int32_t>(n)] =
        v[tri.node_site(static_cast<std::int32_t>(n))];
  }
  return w;
}

ContinuumField interpolate_pl(const DisplacementField& u,
                              const Triangulation& tri) {
  if (tri.lattice() != &u.lattice()) {
    throw std::invalid_argument("interpolate_pl: triangulation/lattice mismatch");
  }
  ContinuumField w(tri);
  for (std::size_t n = 0; n < tri.node_count(); ++n) {
    w[static_cast<std::int32_t>(n)] = {
        u[tri.node_site(static_cast<std::int32_t>(n))], 0.0};
  }
  return w;
}

NetSample sample_on_net(const ContinuumField& w, const Lattice& net,
                        const Vec2& shift) {
  NetSample out;
  out.field = SpinField(net);
  out.ok = true;
  for (std::size_t s = 0; s < net.site_count(); ++s) {
    const Vec2 p = net.site_position(static_cast<std::int32_t>(s)) + shift;
    const Vec2 val = w.evaluate(p);
    const double r = norm(val);
    if (r < kCoreThreshold) {
      out.ok = false;
      ++out.core_hits;
      continue;
    }
    out.field.set(static_cast<std::int32_t>(s), val / r);
    out.radial_defect = std::max(out.radial_defect, std::abs(r - 1.0));
  }
  return out;
}

}  // namespace defectlab
