#include "defectlab/defects.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "defectlab/energies.hpp"

namespace defectlab {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kIntegerTol = 1e-6;
}  // namespace

StrainSplit strain_split(const DisplacementField& u) {
  const Lattice& lat = u.lattice();
  StrainSplit out{BondField(lat, false), BondField(lat, true)};
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    const Bond& bond = lat.bonds()[b];
    const double du = u[bond.b] - u[bond.a];
    const double p = project_to_int(du);
    out.plastic[static_cast<std::int32_t>(b)] = p;
    out.elastic[static_cast<std::int32_t>(b)] = du - p;
  }
  return out;
}

std::vector<double> discrete_curl(const BondField& xi) {
  const Lattice& lat = xi.lattice();
  std::vector<double> curl(lat.plaquette_count(), 0.0);
  for (std::size_t p = 0; p < lat.plaquette_count(); ++p) {
    const Plaquette& q = lat.plaquettes()[p];
    curl[p] = xi[q.left] + xi[q.top] - xi[q.right] - xi[q.bottom];
  }
  return curl;
}

void DefectMeasure::set_density(const Triangulation& tri,
                                std::vector<double> per_triangle) {
  if (per_triangle.size() != tri.triangle_count()) {
    throw std::invalid_argument("DefectMeasure: density size mismatch");
  }
  density_tri_ = &tri;
  density_ = std::move(per_triangle);
}

double DefectMeasure::total_variation() const {
  NeumaierSum acc;
  for (const DefectAtom& a : atoms_) acc.add(std::abs(a.weight));
  if (density_tri_) {
    const double area = density_tri_->triangle_area();
    for (double d : density_) acc.add(std::abs(d) * area);
  }
  return acc.value();
}

double DefectMeasure::total_mass() const {
  NeumaierSum acc;
  for (const DefectAtom& a : atoms_) acc.add(a.weight);
  if (density_tri_) {
    const double area = density_tri_->triangle_area();
    for (double d : density_) acc.add(d * area);
  }
  return acc.value();
}

void DefectMeasure::merge_atoms() {
  std::map<std::pair<double, double>, double> merged;
  for (const DefectAtom& a : atoms_) {
    merged[{a.position.x, a.position.y}] += a.weight;
  }
  atoms_.clear();
  for (const auto& [pos, w] : merged) {
    if (w != 0.0) atoms_.push_back({{pos.first, pos.second}, w});
  }
}

DefectMeasure DefectMeasure::scaled(double t) const {
  DefectMeasure out(domain_);
  out.atoms_ = atoms_;
  for (DefectAtom& a : out.atoms_) a.weight *= t;
  if (density_tri_) {
    out.density_tri_ = density_tri_;
    out.density_ = density_;
    for (double& d : out.density_) d *= t;
  }
  return out;
}

DefectMeasure DefectMeasure::minus(const DefectMeasure& other, double t) const {
  DefectMeasure out = *this;
  for (const DefectAtom& a : other.atoms_) {
    out.atoms_.push_back({a.position, -t * a.weight});
  }
  if (other.density_tri_) {
    if (!out.density_tri_) {
      out.density_tri_ = other.density_tri_;
      out.density_.assign(other.density_.size(), 0.0);
    } else if (out.density_tri_ != other.density_tri_) {
      throw std::logic_error("DefectMeasure::minus: densities on different meshes");
    }
    for (std::size_t i = 0; i < other.density_.size(); ++i) {
      out.density_[i] -= t * other.density_[i];
    }
  }
  out.merge_atoms();
  return out;
}

DefectMeasure dislocation_measure(const DisplacementField& u) {
  const Lattice& lat = u.lattice();
  const StrainSplit split = strain_split(u);
  DefectMeasure mu(lat.geometry());
  for (std::size_t p = 0; p < lat.plaquette_count(); ++p) {
    const Plaquette& q = lat.plaquettes()[p];
    // counterclockwise circulation of the elastic strain
    const double alpha = split.elastic[q.bottom] + split.elastic[q.right] -
                         split.elastic[q.top] - split.elastic[q.left];
    const double rounded = std::nearbyint(alpha);
    if (std::abs(alpha - rounded) > kIntegerTol) {
      throw std::logic_error("dislocation_measure: non-integer circulation");
    }
    if (std::abs(rounded) > 1.5) {
      throw std::logic_error("dislocation_measure: weight outside {-1,0,1}");
    }
    if (rounded != 0.0) {
      mu.add_atom(lat.plaquette_center(static_cast<std::int32_t>(p)), rounded);
    }
  }
  return mu;
}

DefectMeasure vorticity_measure(const SpinField& v) {
  return dislocation_measure(phase_of(v));
}

DefectMeasure jacobian_density(const ContinuumField& w) {
  const Triangulation& tri = w.triangulation();
  DefectMeasure mu(tri.lattice()->geometry());
  std::vector<double> det(tri.triangle_count(), 0.0);
  for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
    const ContinuumField::Gradient g =
        w.triangle_gradient(static_cast<std::int32_t>(t));
    det[t] = g.gx.x * g.gy.y - g.gx.y * g.gy.x;
  }
  mu.set_density(tri, std::move(det));
  return mu;
}

double winding_boundary_integral(const SpinField& v, std::int32_t plaquette) {
  const Lattice& lat = v.lattice();
  const Plaquette& q = lat.plaquettes()[plaquette];
  const DisplacementField u = phase_of(v);

  // Counterclockwise traversal; each edge contributes the integral of
  // cos^2(theta) d theta along the geodesic arc from theta(i) through
  // 2*pi*beta^e, i.e. beta + (sin(2 theta_end) - sin(2 theta_start))/(4 pi).
  const std::int32_t loop[5] = {q.s00, q.s10, q.s11, q.s01, q.s00};
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const double ui = u[loop[e]], uj = u[loop[e + 1]];
    const double beta = (uj - ui) - project_to_int(uj - ui);
    const double t0 = kTwoPi * ui;
    const double t1 = t0 + kTwoPi * beta;
    total += beta + (std::sin(2.0 * t1) - std::sin(2.0 * t0)) / (2.0 * kTwoPi);
  }
  return total;
}

std::vector<Vec2> current(const ContinuumField& w) {
  const Triangulation& tri = w.triangulation();
  std::vector<Vec2> j(tri.triangle_count());
  for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
    const auto ti = static_cast<std::int32_t>(t);
    const Vec2 m = w.triangle_mean(ti);
    const ContinuumField::Gradient g = w.triangle_gradient(ti);
    j[t] = {m.x * g.gx.y - m.y * g.gx.x, m.x * g.gy.y - m.y * g.gy.x};
  }
  return j;
}

std::vector<Vec2> discrete_strain_field(const DisplacementField& u,
                                        const Triangulation& tri) {
  const ContinuumField w = interpolate_pl(u, tri);
  const double h = tri.mesh_size();
  std::vector<Vec2> beta(tri.triangle_count());
  for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
    const ContinuumField::Gradient g =
        w.triangle_gradient(static_cast<std::int32_t>(t));
    // project the dimensionless per-bond jump (gradient * eps), divide back
    const double jx = g.gx.x * h, jy = g.gy.x * h;
    beta[t] = {(jx - project_to_int(jx)) / h, (jy - project_to_int(jy)) / h};
  }
  return beta;
}

std::vector<Vec2> discrete_current(const SpinField& v,
                                   const Triangulation& tri) {
  std::vector<Vec2> j = discrete_strain_field(phase_of(v), tri);
  for (Vec2& x : j) x = x * kTwoPi;
  return j;
}

}  // namespace defectlab
