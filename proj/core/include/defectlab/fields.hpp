#pragma once

#include <vector>

#include "defectlab/geometry.hpp"

namespace defectlab {

/// v: sites -> S^1, stored as unit vectors.
class SpinField {
 public:
  SpinField() = default;
  explicit SpinField(const Lattice& lattice, Vec2 value = {1.0, 0.0});
  static SpinField from_angles(const Lattice& lattice,
                               const std::vector<double>& theta);

  const Lattice& lattice() const { return *lattice_; }
  const std::vector<Vec2>& values() const { return values_; }
  Vec2 operator[](std::int32_t s) const { return values_[s]; }
  void set(std::int32_t s, const Vec2& v);

  /// max_s ||v(s)| - 1|.
  double unit_defect() const;

 private:
  const Lattice* lattice_ = nullptr;
  std::vector<Vec2> values_;
};

/// u: sites -> R.
class DisplacementField {
 public:
  DisplacementField() = default;
  explicit DisplacementField(const Lattice& lattice, double value = 0.0);

  const Lattice& lattice() const { return *lattice_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::int32_t s) const { return values_[s]; }
  double& operator[](std::int32_t s) { return values_[s]; }

 private:
  const Lattice* lattice_ = nullptr;
  std::vector<double> values_;
};

/// xi: bonds -> R, indexed by bond ordinal with the lattice's canonical
/// orientation (tail <= head componentwise). `integral` marks fields that
/// must be integer-valued (plastic strains, Dirac strings).
class BondField {
 public:
  BondField() = default;
  explicit BondField(const Lattice& lattice, bool integral = false);

  const Lattice& lattice() const { return *lattice_; }
  bool integral() const { return integral_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::int32_t b) const { return values_[b]; }
  double& operator[](std::int32_t b) { return values_[b]; }

  /// Throws if the integral flag is set but a value is not an integer.
  void check_integrality() const;

 private:
  const Lattice* lattice_ = nullptr;
  std::vector<double> values_;
  bool integral_ = false;
};

/// P1 field on a triangulation: one plane vector per node, affine inside
/// each triangle.
class ContinuumField {
 public:
  ContinuumField() = default;
  explicit ContinuumField(const Triangulation& tri, Vec2 value = {0.0, 0.0});

  const Triangulation& triangulation() const { return *tri_; }
  const std::vector<Vec2>& values() const { return values_; }
  std::vector<Vec2>& values() { return values_; }
  Vec2 operator[](std::int32_t n) const { return values_[n]; }
  Vec2& operator[](std::int32_t n) { return values_[n]; }

  /// Affine evaluation; points slightly outside the mesh are read through
  /// the nearest cell (constant-along-normal extension).
  Vec2 evaluate(const Vec2& p) const;

  struct Gradient {
    Vec2 gx;  // (d/dx w1, d/dx w2)
    Vec2 gy;  // (d/dy w1, d/dy w2)
  };
  /// Constant gradient of triangle t; exact for P1.
  Gradient triangle_gradient(std::int32_t t) const;
  /// Average of the three nodal values of triangle t.
  Vec2 triangle_mean(std::int32_t t) const;

 private:
  const Triangulation* tri_ = nullptr;
  std::vector<Vec2> values_;
};

/// du_{i,j} = u(j) - u(i) per bond.
BondField discrete_gradient(const DisplacementField& u);

/// u = theta(v)/(2*pi) with the phase representative theta in [0, 2*pi).
DisplacementField phase_of(const SpinField& v);

/// v(l) = (cos 2*pi*u(l), sin 2*pi*u(l)); invariant under integer shifts of
/// u (the argument is reduced mod 1 before evaluation).
SpinField exp_of(const DisplacementField& u);

/// Piecewise-linear interpolation of v on the triangulation nodes.
ContinuumField interpolate_pl(const SpinField& v, const Triangulation& tri);
/// Scalar variant mapped into the first component (second set to zero).
ContinuumField interpolate_pl(const DisplacementField& u,
                              const Triangulation& tri);

struct NetSample {
  SpinField field;
  double radial_defect = 0.0;  // max | |w(l+shift)| - 1 |
  bool ok = false;
  int core_hits = 0;  // samples with |w| below the failure threshold
};

/// Samples w at (site + shift) for every site of `net`, normalized to S^1.
/// Fails (ok = false) when a sample magnitude drops below 1e-8: the shift
/// hit a vortex core and the caller must re-shift.
NetSample sample_on_net(const ContinuumField& w, const Lattice& net,
                        const Vec2& shift);

}  // namespace defectlab
