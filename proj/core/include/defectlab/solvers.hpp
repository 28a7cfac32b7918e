#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "defectlab/defects.hpp"
#include "defectlab/energies.hpp"

namespace defectlab {

/// Prescribed singularities: plaquette-center positions with degrees +-1.
struct DefectPrescription {
  std::vector<std::pair<Vec2, int>> charges;
  ScalingRegime regime{1.0};
};

/// The prescription as an atomic measure.
DefectMeasure prescription_measure(const DefectPrescription& prescription,
                                   const DomainGeometry& geometry);

/// Atom-set equality up to a position tolerance (weights exact).
bool same_atoms(const DefectMeasure& a, const DefectMeasure& b,
                double pos_tol = 1e-9);

struct SolverOptions {
  double cg_rel_tol = 1e-10;
  int cg_max_iters = 100000;
  double xy_grad_tol = 1e-8;
  long xy_max_iters = 100000;
  double xy_plateau_rel = 1e-8;   // windowed energy-plateau exit
  double sd_sweep_rel_tol = 1e-12;
  int sd_max_sweeps = 2000;
  long gl_max_iters = 2000;
  double gl_plateau_rel = 1e-8;
  bool record_trace = false;
};

struct TracePoint {
  long iter = 0;
  double energy = 0.0;
  double step = 0.0;
  long guard_rejects = 0;
};

struct SolveReport {
  bool success = false;
  std::string message;
  double final_energy = 0.0;
  long iterations = 0;
  long guard_rejections = 0;
  DefectMeasure achieved;
  double residual_norm = 0.0;        // CG residual (SD) / gradient norm
  double quadratic_bound = 0.0;      // SD phase-1 value, an upper bound
  double constraint_flat_residual = 0.0;  // GL: ||achieved - prescribed||
  std::vector<TracePoint> trace;
};

/// v(l) = exp(i sum_k d_k angle(l - a_k)). Throws std::runtime_error if the
/// lattice is too coarse for the ansatz to carry the prescribed vorticity.
SpinField vortex_ansatz(const DefectPrescription& prescription,
                        const Lattice& lattice);

/// Integer bond field p with discrete_curl(p) = -alpha for the prescribed
/// dislocation function alpha: each defect is routed horizontally to the
/// nearest boundary, except same-row opposite pairs which connect directly
/// when shorter. Strings overlap additively.
BondField dirac_string(const DefectPrescription& prescription,
                       const Lattice& lattice);

/// Two-phase screw-dislocation solve: exact quadratic relaxation around the
/// Dirac string (conjugate gradient), then cyclic coordinate descent on the
/// true periodic energy under a topology guard.
std::pair<DisplacementField, SolveReport> sd_minimize(
    const DefectPrescription& prescription, const Lattice& lattice,
    const SolverOptions& options = {});

/// Spin relaxation from the vortex ansatz: Barzilai-Borwein descent on the
/// per-site phases with backtracking and a vorticity guard.
std::pair<SpinField, SolveReport> xy_minimize(
    const DefectPrescription& prescription, const Lattice& lattice,
    const SolverOptions& options = {});

/// GL solutions own their mesh: the field references the triangulation,
/// which references the lattice.
struct GlSolution {
  std::shared_ptr<const Lattice> mesh_lattice;
  std::shared_ptr<const Triangulation> mesh;
  ContinuumField field;
  SolveReport report;
};

/// Ginzburg-Landau minimization on a P1 mesh of spacing `mesh` (<= eps/2):
/// Dirichlet boundary data from the vortex ansatz, cores seeded with the
/// radial profile min(1, r/eps), projected descent clipping |w| <= 1.
GlSolution gl_minimize(const DefectPrescription& prescription,
                       const DomainGeometry& geometry, double epsilon,
                       double mesh, const SolverOptions& options = {});

}  // namespace defectlab
