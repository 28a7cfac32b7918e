#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "defectlab/equivalence.hpp"
#include "defectlab/fit.hpp"

namespace defectlab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ConversionRoute { GlToXy, XyToSd, SdToXy, XyToGl };

/// Parsed run configuration (one JSON document drives every subcommand).
struct RunConfig {
  DomainGeometry domain = DomainGeometry::unit_square();
  std::vector<Model> models{Model::XY};
  std::vector<double> eps_schedule;  // strictly decreasing, all in (0,1)
  ScalingRegime regime{1.0};

  struct ExplicitDefect {
    Vec2 position;
    int degree = 1;
  };
  std::vector<ExplicitDefect> defects;

  // "uniform-disk" rule: N_eps = round(c |log eps|) defects of degree +1
  // quasi-uniform in the disk of radius r1 (domain is the disk of radius r2)
  bool uniform_disk = false;
  double disk_c = 1.0;
  double disk_r1 = 0.25;
  double disk_r2 = 0.5;
  double min_sep_eps = 2.0;  // minimum pairwise separation in units of eps

  SolverOptions solver;
  double gl_mesh_factor = 0.5;  // mesh = factor * eps, factor <= 1/2

  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  int workers = 1;
  bool no_timing = false;  // write wall_ms as 0 for bit-stable reruns

  std::optional<ConversionRoute> route;       // convert subcommand
  std::optional<double> flatnorm_resolution;  // flatnorm subcommand
  std::vector<DefectAtom> measure_atoms;      // flatnorm subcommand
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

/// One sweep row; the CSV schema is pinned:
/// "model,eps,h,raw_energy,scaled_energy,n_defects,total_variation,
///  flat_drift,iters,wall_ms,status"
struct RunRow {
  Model model = Model::XY;
  double eps = 0.0;
  double h = 1.0;
  double raw_energy = 0.0;
  double scaled_energy = 0.0;
  int n_defects = 0;
  double total_variation = 0.0;
  double flat_drift = 0.0;
  long iters = 0;
  long wall_ms = 0;
  std::string status = "ok";

  // 4 pi^2 * raw for SD, raw otherwise: the quantity whose slope against
  // ln(1/eps) the sweeps fit
  double fit_energy = 0.0;
};

struct SweepResult {
  std::vector<RunRow> rows;
  // per-model fits of fit_energy vs ln(1/eps); empty unless >= 4 points
  struct ModelFit {
    Model model;
    LinearFit fit;
  };
  std::vector<ModelFit> fits;
  int failures = 0;
};

/// Build lattice, realize the prescription, minimize, extract defects and
/// drift for every (model, eps) of the config. flat_drift holds the
/// jacobian-identification norm ||J w(v)/pi - mu_v|| for XY rows, the
/// constraint residual for GL rows, and the exact prescription mismatch
/// (zero on success) for SD rows.
SweepResult run_sweep(const RunConfig& config);

std::string sweep_csv(const SweepResult& sweep);

/// Gamma-limit for finitely many vortices at h = 1: pi |mu|(Omega).
double gamma_limit_oracle_h1(const DefectMeasure& mu);

/// h = 2 strain-gradient oracle for a uniform dislocation density m on the
/// disk r1 inside the domain disk r2 (concentric): self energy |mu|/(4 pi)
/// plus the elastic energy of the axisymmetric strain with curl beta = mu.
struct H2Oracle {
  double mass = 0.0;         // |mu| = m pi r1^2
  double self_energy = 0.0;  // mass / (4 pi)
  double interaction = 0.0;  // (1/2) int |beta|^2
  double total = 0.0;
};
H2Oracle gamma_limit_oracle_h2(double m, double r1, double r2);

/// Independent 1D quadrature of (1/2) int |beta|^2 for the oracle profile.
double h2_interaction_quadrature(double m, double r1, double r2,
                                 int panels = 1 << 14);

/// Quasi-uniform degree-+1 placements in the inner disk: golden-angle
/// layout snapped to plaquette centers, collisions resolved to the nearest
/// free center, pairwise separation >= min_sep.
std::vector<Vec2> place_uniform_disk_defects(const Lattice& lattice,
                                             const Vec2& center, double r1,
                                             int count, double min_sep);

struct H2Row {
  double eps = 0.0;
  int n_defects = 0;
  double sd_raw = 0.0;
  double scaled_energy = 0.0;  // SD / |log eps|^2, no 4 pi^2 prefactor
  double strain_l2sq = 0.0;    // (1/2) || beta_hat / |log eps| ||_2^2
  H2Oracle oracle;
  double rel_gap = 0.0;  // |scaled - oracle.total| / oracle.total
  long iters = 0;
  long wall_ms = 0;
  std::string status = "ok";
};

struct H2Result {
  std::vector<H2Row> rows;
  int failures = 0;
};

H2Result h2_experiment(const RunConfig& config);
std::string h2_csv(const H2Result& result);

// ---- file emission ----------------------------------------------------

/// Write via a temp file in the same directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string field_csv(const SpinField& v);
std::string field_csv(const DisplacementField& u);
std::string field_csv(const ContinuumField& w);
/// Lattice/domain metadata sidecar for a field CSV.
std::string field_sidecar_json(const DomainGeometry& geometry, double spacing,
                               const std::string& kind, std::size_t rows);

std::string measure_json(const DefectMeasure& mu,
                         const std::string& density_file = "");
std::string dual_norm_json(const DualNormResult& r);
std::string energy_json(const EnergyBreakdown& e, Model model, double epsilon,
                        double h);
std::string solve_report_json(const SolveReport& rep);
std::string trace_csv(const SolveReport& rep);
std::string fits_json(const SweepResult& sweep);

/// Two-column data file plus a matching gnuplot script for a sweep fit.
void emit_plot_files(const std::string& out_dir, const std::string& stem,
                     const std::vector<double>& x,
                     const std::vector<double>& y, const LinearFit& fit);

}  // namespace defectlab
