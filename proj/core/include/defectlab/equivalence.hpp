#pragma once

#include <memory>
#include <string>
#include <vector>

#include "defectlab/energies.hpp"
#include "defectlab/flatnorm.hpp"
#include "defectlab/solvers.hpp"

namespace defectlab {

/// delta_tilde = eps |log eps|^{h+1}, lambda = d/(d - 2 delta_tilde),
/// delta = lambda * delta_tilde. Requires delta_tilde < d/4.
struct MesoscaleSchedule {
  double delta_tilde = 0.0;
  double lambda = 1.0;
  double delta = 0.0;
};

MesoscaleSchedule mesoscale_schedule(double epsilon,
                                     const ScalingRegime& regime,
                                     const DomainGeometry& geometry);

/// Smallest eps = 2^-k feasible for the mesoscale schedule on a domain.
bool mesoscale_feasible(double epsilon, const ScalingRegime& regime,
                        const DomainGeometry& geometry);

/// One row of the variational-equivalence bookkeeping: scaled energies of
/// the source state and the converted target state, the parameter map
/// delta_eps, and the flat-norm drift between the scaled singularities,
///   drift = || mu_src/|log eps|^{h-1} - t_eps * mu_tgt/|log delta|^{h-1} ||,
/// with t_eps = |log delta|^{h-1} / |log eps|^{h-1}.
struct ConversionAudit {
  Model source_model = Model::GL;
  Model target_model = Model::XY;
  double epsilon = 0.0;
  double delta = 0.0;
  double h = 1.0;
  double source_scaled = 0.0;
  double target_scaled = 0.0;
  double gap = 0.0;  // target_scaled - source_scaled
  double t_eps = 1.0;
  double drift = 0.0;
  double drift_gap = 0.0;  // certification gap of the drift evaluation
  Vec2 shift;
  double radial_defect = 0.0;
  bool ok = false;
  std::string message;
};

struct ConvertedSpin {
  std::shared_ptr<const Lattice> lattice;
  SpinField field;
  ConversionAudit audit;
};

struct ConvertedDisplacement {
  std::shared_ptr<const Lattice> lattice;
  DisplacementField field;
  ConversionAudit audit;
};

struct ConvertedContinuum {
  std::shared_ptr<const Triangulation> mesh;  // over the source lattice
  ContinuumField field;
  ConversionAudit audit;
};

/// GL state -> XY state on the delta_eps-lattice: the best mesh-aligned
/// shift of the delta_tilde-net inside I_{delta_tilde}(Omega) is sampled,
/// normalized to S^1 and composed with the lambda_eps dilation.
ConvertedSpin gl_to_xy(const ContinuumField& w, double epsilon,
                       const ScalingRegime& regime,
                       const DomainGeometry& geometry);

/// XY state -> SD state on the delta_eps-lattice: the phase/(2 pi) is read
/// on the best diagonal shift of the eps-fine, delta_hat-spaced net, with
/// delta_hat = eps * floor(delta_tilde/eps).
ConvertedDisplacement xy_to_sd(const SpinField& v, double epsilon,
                               const ScalingRegime& regime,
                               const DomainGeometry& geometry);

/// SD state -> XY state on the same lattice via v = exp(2 pi i u); the
/// schedule is the identity and the defect measures coincide exactly.
ConvertedSpin sd_to_xy(const DisplacementField& u, double epsilon,
                       const ScalingRegime& regime = ScalingRegime(1.0));

/// XY state -> GL state: the PL interpolation composed with the inner
/// dilation, audited as GL^{s_eps} with s_eps = C/|log eps| for the
/// calibrated discrete potential bound constant C.
ConvertedContinuum xy_to_gl(const SpinField& v, double epsilon,
                            const ScalingRegime& regime,
                            double potential_bound_c = -1.0);

/// Empirical constant of the discrete potential bound
/// (C/eps^2) int W(w(v)) <= XY_eps(v): the minimum of the ratio over a fixed
/// seeded stress family, times a 0.95 safety factor. The baked default in
/// kPotentialBoundC was produced by this function.
double calibrate_potential_bound();
extern const double kPotentialBoundC;

struct LinearFitSummary {
  double slope = 0.0;
  double ci95 = 0.0;
};

struct AuditVerdict {
  LinearFitSummary gap_fit;
  bool gap_trend_nonpositive = false;
  bool drift_trend_decreasing = false;
  bool final_gap_small = false;  // final gap <= 0.05 * final scaled source
  std::vector<ConversionAudit> rows;
};

/// Fits the gap trend over ln(1/eps), checks that the slope is non-positive
/// within its confidence band, and that the drift column decreases strictly
/// over the last three rows (identically-zero drift counts as converged).
AuditVerdict audit_definition(const std::vector<ConversionAudit>& rows);

/// "eps,delta_eps,h,src_energy,tgt_energy,gap,drift,t_eps,shift_x,shift_y,radial_defect"
std::string audit_table_csv(const std::vector<ConversionAudit>& rows);

}  // namespace defectlab
