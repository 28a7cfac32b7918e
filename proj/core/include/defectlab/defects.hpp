#pragma once

#include <cmath>
#include <vector>

#include "defectlab/fields.hpp"

namespace defectlab {

/// Nearest-integer projection with residual in (-1/2, 1/2]: P(t) = ceil(t-1/2).
/// At half-integer ties this rounds down (P(0.5) = 0, P(-0.5) = -1) so the
/// elastic residual always lands in (-1/2, 1/2].
inline double project_to_int(double t) { return std::ceil(t - 0.5); }

struct StrainSplit {
  BondField elastic;  // values in (-1/2, 1/2]
  BondField plastic;  // integer-valued
};

/// du = elastic + plastic with plastic = P(du), exactly.
StrainSplit strain_split(const DisplacementField& u);

/// Discrete curl per plaquette:
///   d xi(i) = xi_left + xi_top - xi_right - xi_bottom
/// with bonds in canonical orientation (left/right upward, bottom/top
/// eastward). This equals minus the counterclockwise circulation.
std::vector<double> discrete_curl(const BondField& xi);

struct DefectAtom {
  Vec2 position;
  double weight = 0.0;
};

/// Element of X = (C^{0,1}_c(Omega))^*: signed Dirac atoms plus an optional
/// piecewise-constant Jacobian density on a triangulation.
class DefectMeasure {
 public:
  DefectMeasure() = default;
  explicit DefectMeasure(const DomainGeometry& domain) : domain_(domain) {}

  const DomainGeometry& domain() const { return domain_; }
  const std::vector<DefectAtom>& atoms() const { return atoms_; }
  std::vector<DefectAtom>& atoms() { return atoms_; }

  bool has_density() const { return density_tri_ != nullptr; }
  const Triangulation* density_triangulation() const { return density_tri_; }
  const std::vector<double>& density() const { return density_; }
  void set_density(const Triangulation& tri, std::vector<double> per_triangle);

  void add_atom(const Vec2& p, double w) { atoms_.push_back({p, w}); }

  /// Sum of |weights| plus the integral of |density|.
  double total_variation() const;
  /// Signed total mass (sum of weights plus integral of density).
  double total_mass() const;

  /// Merge atoms at identical positions; drop zero weights.
  void merge_atoms();

  DefectMeasure scaled(double t) const;
  /// this - t*other: atom lists concatenate (negated), densities subtract
  /// when they live on the same triangulation; at most one density layer.
  DefectMeasure minus(const DefectMeasure& other, double t = 1.0) const;

 private:
  DomainGeometry domain_;
  std::vector<DefectAtom> atoms_;
  const Triangulation* density_tri_ = nullptr;
  std::vector<double> density_;
};

/// mu_u: one atom per plaquette at its center with the integer weight
/// alpha_u(i), the counterclockwise circulation of the elastic strain.
/// A counterclockwise +1 vortex carries weight +1 (matching the boundary
/// integral of the geodesic interpolation). Zero atoms are omitted; weights
/// outside {-1,0,1} violate the residual range and throw.
DefectMeasure dislocation_measure(const DisplacementField& u);

/// gamma_v = alpha_{theta(v)/2pi}; independent of the phase branch.
DefectMeasure vorticity_measure(const SpinField& v);

/// Per-triangle det(grad w) as the density layer of a DefectMeasure.
DefectMeasure jacobian_density(const ContinuumField& w);

/// Closed-form boundary integral (1/pi) int_{dQ} vt_1 d/ds vt_2 over the
/// geodesic-arc interpolation vt of v along the plaquette boundary; equals
/// the vorticity weight, as a real within 1e-12 of an integer.
double winding_boundary_integral(const SpinField& v, std::int32_t plaquette);

/// j(w) = w x grad w per triangle, with w taken as the nodal mean.
std::vector<Vec2> current(const ContinuumField& w);

/// Piecewise-constant residual strain of the PL interpolant of u: per
/// triangle, each gradient component equals a bond jump / eps; the integer
/// part of the dimensionless jump is projected out, so beta*eps lands in
/// (-1/2,1/2]^2. Zero outside the triangulated region by convention.
std::vector<Vec2> discrete_strain_field(const DisplacementField& u,
                                        const Triangulation& tri);

/// j^_v = 2*pi * beta^e of the phase field.
std::vector<Vec2> discrete_current(const SpinField& v,
                                   const Triangulation& tri);

}  // namespace defectlab
