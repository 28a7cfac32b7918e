#pragma once

#include <vector>

#include "defectlab/defects.hpp"

namespace defectlab {

/// Norm on C^{0,1}_c(Omega) test functions. Max is the working convention:
/// ||phi|| = max(sup|phi|, Lip(phi)); Sum (sup + Lip) is kept as a
/// diagnostic alternative since the convergence statements are invariant
/// under equivalent norms.
enum class NormConvention { Max, Sum };

enum class DualNormMethod { AtomicExact, GridDualAscent };

struct DualNormResult {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  DualNormMethod method = DualNormMethod::AtomicExact;
  int iterations = 0;

  double gap() const { return upper - lower; }

  /// Optimal test-function values at the atom locations (atomic solver).
  std::vector<double> atom_potentials;
  /// Nodal witness on the evaluation grid (grid solver), row-major.
  std::vector<double> witness;
  int witness_nx = 0, witness_ny = 0;
  Vec2 witness_origin;
  double witness_spacing = 0.0;
};

/// Exact dual norm of a purely atomic measure:
///   sup { <mu, phi> : max(sup|phi|, Lip phi) <= 1, supp phi compact in Omega }
/// computed as a min-cost transshipment between the atoms with a boundary
/// sink; potentials at atoms satisfy |phi_k| <= min(1, dist(a_k, dOmega)) and
/// |phi_k - phi_l| <= min(2, |a_k - a_l|), which is sufficient as well as
/// necessary by McShane extension. At most 200 atoms; atoms outside Omega
/// are rejected.
DualNormResult flat_norm_atomic(const DefectMeasure& mu,
                                const DomainGeometry& geometry,
                                NormConvention convention = NormConvention::Max);

/// Certified-approximate dual norm for atomic-plus-density measures.
/// The measure is discretized at the grid scale (atoms snapped to grid
/// nodes, density cells to point loads, coarsened until the support is
/// small), solved exactly there, and the exact potentials are extended to a
/// feasible test function by truncated McShane extension. `value` (= lower)
/// is the pairing of the original measure with that feasible witness, and
/// `upper` adds the rigorous transport slack of the discretization, so
/// lower <= ||mu|| <= upper always.
DualNormResult flat_norm_grid(const DefectMeasure& mu,
                              const DomainGeometry& geometry,
                              double resolution);

}  // namespace defectlab
