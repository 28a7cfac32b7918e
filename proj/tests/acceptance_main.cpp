// Acceptance suite: every release-gating check runs here, one line of
// output per criterion. Run with no arguments for the full battery or pass
// criterion numbers to select.

#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "defectlab/runner.hpp"

using namespace defectlab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double dyadic_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 44) / static_cast<double>(1ull << 20);
}

// full-entropy uniform: keeps bond differences off the half-integer tie set
// where the projection branch is genuinely discontinuous
double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) / 9007199254740992.0;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome pass(std::string detail) { return {true, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, std::move(detail)}; }

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

RunConfig single_vortex_config(const char* models_json) {
  return parse_config(std::string(R"({
    "models": )") + models_json + R"(,
    "eps": {"pow2": {"kmin": 4, "kmax": 8}},
    "defects": [{"x": 0.5, "y": 0.5, "degree": 1}],
    "h": 1,
    "no_timing": true
  })");
}

// ---- criterion 1: exact inequality suite -------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 33);
  if (lat.site_count() != 32 * 32) {
    return fail("expected a 32x32 site lattice");
  }
  std::mt19937_64 rng(0xC1);
  double worst_slack = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    DisplacementField u(lat);
    for (std::size_t s = 0; s < lat.site_count(); ++s) {
      u[static_cast<std::int32_t>(s)] = 4.0 * (uniform53(rng) - 0.5);
    }
    const SpinField v = exp_of(u);
    const double xy = xy_energy(v).total;
    const double sd4 = 4.0 * M_PI * M_PI * sd_energy(u).total;
    const double slack = xy - sd4;
    worst_slack = std::max(worst_slack, slack);
    if (slack > 1e-12 * std::max(1.0, sd4)) {
      return fail(fmt("inequality violated at trial %d: slack %.3e", trial,
                      slack));
    }
    if (!same_atoms(vorticity_measure(v), dislocation_measure(u), 0.0)) {
      return fail(fmt("measures differ at trial %d", trial));
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 10.0) return fail(fmt("runtime %.1fs exceeds 10s", dt));
  return pass(fmt("1000 fields, worst slack %.2e, %.1fs", worst_slack, dt));
}

// ---- criterion 2: single-vortex |log eps| law --------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  const RunConfig cfg = single_vortex_config(R"(["xy", "sd", "gl"])");
  const SweepResult sweep = run_sweep(cfg);
  if (sweep.failures > 0) {
    return fail(fmt("%d solve failures in the sweep", sweep.failures));
  }
  std::string detail;
  for (const SweepResult::ModelFit& f : sweep.fits) {
    const double tol = f.model == Model::GL ? 0.12 : 0.07;
    const double rel = std::abs(f.fit.slope - M_PI) / M_PI;
    detail += fmt("%s slope %.4f (%.1f%%) ", model_name(f.model), f.fit.slope,
                  100 * rel);
    if (rel > tol) {
      return fail(detail + fmt("- exceeds %.0f%%", 100 * tol));
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 600.0) return fail(fmt("runtime %.0fs exceeds 600s", dt));
  return pass(detail + fmt("(pi = %.4f), %.0fs", M_PI, dt));
}

// ---- criterion 3: jacobian-vorticity identification --------------------

Outcome criterion3() {
  // (a) the drift column of the single-vortex XY sweep
  const RunConfig cfg = single_vortex_config(R"(["xy"])");
  const SweepResult sweep = run_sweep(cfg);
  if (sweep.failures > 0) return fail("sweep solve failure");
  std::string detail = "drift ";
  double prev = 0.0;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const RunRow& r = sweep.rows[i];
    const int k = static_cast<int>(std::lround(std::log2(1.0 / r.eps)));
    detail += fmt("k%d:%.4f ", k, r.flat_drift);
    if (k >= 6 && !(r.flat_drift < prev)) {
      return fail(detail + "- not strictly decreasing");
    }
    if (k == 8 && !(r.flat_drift < 0.1)) {
      return fail(detail + "- final drift not below 0.1");
    }
    prev = r.flat_drift;
  }

  // (b) closed-form boundary integral vs the vorticity, exact in Z
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 17);
  std::mt19937_64 rng(0xC3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> theta(lat.site_count());
    for (double& t : theta) t = 2.0 * M_PI * dyadic_uniform(rng);
    const SpinField v = SpinField::from_angles(lat, theta);
    const DefectMeasure mu = vorticity_measure(v);
    for (std::size_t p = 0; p < lat.plaquette_count(); ++p) {
      const double w = winding_boundary_integral(v, static_cast<std::int32_t>(p));
      const double rounded = std::nearbyint(w);
      if (std::abs(w - rounded) > 1e-12) {
        return fail(fmt("boundary integral %.17g not an integer", w));
      }
      double expect = 0.0;
      const Vec2 c = lat.plaquette_center(static_cast<std::int32_t>(p));
      for (const DefectAtom& a : mu.atoms()) {
        if (norm(a.position - c) < 1e-12) expect = a.weight;
      }
      if (rounded != expect) {
        return fail(fmt("winding %g != vorticity %g at trial %d", rounded,
                        expect, trial));
      }
    }
  }
  return pass(detail + "| 1000 winding fields exact");
}

// ---- criterion 4: dipole law -------------------------------------------

Outcome criterion4() {
  const RunConfig cfg = parse_config(R"({
    "models": ["xy", "sd"],
    "eps": {"pow2": {"kmin": 4, "kmax": 8}},
    "defects": [{"x": 0.25, "y": 0.5, "degree": 1},
                {"x": 0.75, "y": 0.5, "degree": -1}],
    "h": 1,
    "no_timing": true
  })");
  const SweepResult sweep = run_sweep(cfg);
  if (sweep.failures > 0) return fail("sweep solve failure");
  std::string detail;
  for (const SweepResult::ModelFit& f : sweep.fits) {
    const double rel = std::abs(f.fit.slope - 2 * M_PI) / (2 * M_PI);
    detail += fmt("%s slope %.4f (%.1f%%) ", model_name(f.model), f.fit.slope,
                  100 * rel);
    if (rel > 0.10) return fail(detail + "- exceeds 10%");
  }
  return pass(detail + fmt("(2pi = %.4f)", 2 * M_PI));
}

// ---- criterion 5: h = 2 strain-gradient regime -------------------------

Outcome criterion5() {
  const auto t0 = Clock::now();
  // oracle quadrature pre-verification
  const H2Oracle probe = gamma_limit_oracle_h2(1.0, 0.25, 0.5);
  const double quad = h2_interaction_quadrature(1.0, 0.25, 0.5);
  if (std::abs(probe.interaction - quad) > 1e-8 * std::max(1.0, quad)) {
    return fail(fmt("oracle quadrature mismatch %.3e",
                    std::abs(probe.interaction - quad)));
  }
  const RunConfig cfg = parse_config(R"({
    "domain": {"kind": "disk", "cx": 0.0, "cy": 0.0, "radius": 0.5},
    "model": "sd",
    "eps": {"pow2": {"kmin": 5, "kmax": 8}},
    "h": 2,
    "defects": {"rule": "uniform-disk", "c": 1.0, "r1": 0.25, "r2": 0.5},
    "no_timing": true
  })");
  const H2Result res = h2_experiment(cfg);
  if (res.failures > 0) return fail(fmt("%d failures", res.failures));
  std::string detail;
  for (const H2Row& r : res.rows) {
    detail += fmt("k%d: N=%d gap %.1f%% | ",
                  static_cast<int>(std::lround(std::log2(1.0 / r.eps))),
                  r.n_defects, 100 * r.rel_gap);
  }
  const H2Row& first = res.rows.front();  // k = 5
  const H2Row& last = res.rows.back();    // k = 8
  if (!(last.rel_gap < 0.25)) {
    return fail(detail + fmt("- gap at k=8 is %.1f%%, needs < 25%%",
                             100 * last.rel_gap));
  }
  if (!(last.rel_gap < first.rel_gap)) {
    return fail(detail + "- no improving trend from k=5 to k=8");
  }
  const double dt = seconds_since(t0);
  if (dt >= 1200.0) return fail(fmt("runtime %.0fs exceeds 1200s", dt));
  return pass(detail + fmt("%.0fs", dt));
}

// ---- criterion 6: flat-norm solver cross-validation --------------------

Outcome criterion6() {
  const DomainGeometry sq = DomainGeometry::unit_square();
  const double res = 1.0 / 256;
  std::mt19937_64 rng(0xC6);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    DefectMeasure mu(sq);
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      Vec2 p;
      do {
        p = {dyadic_uniform(rng), dyadic_uniform(rng)};
      } while (!sq.contains(p));
      mu.add_atom(p, (rng() % 2 ? 1.0 : -1.0) * (1.0 + static_cast<double>(rng() % 2)));
    }
    const double exact = flat_norm_atomic(mu, sq).value;
    const DualNormResult grid = flat_norm_grid(mu, sq, res);
    const double err = std::abs(grid.value - exact);
    worst = std::max(worst, err / std::max(1e-30, res * mu.total_variation()));
    if (err > 2.0 * res * mu.total_variation()) {
      return fail(fmt("trial %d: |grid - exact| = %.3e > 2 res |mu| = %.3e",
                      trial, err, 2.0 * res * mu.total_variation()));
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    Vec2 p;
    do {
      p = {dyadic_uniform(rng), dyadic_uniform(rng)};
    } while (!sq.contains(p));
    DefectMeasure mu(sq);
    mu.add_atom(p, 1.0);
    const double want = std::min(1.0, sq.boundary_distance(p));
    const double got = flat_norm_atomic(mu, sq).value;
    if (std::abs(got - want) > 1e-6) {
      return fail(fmt("single atom: got %.9f want %.9f", got, want));
    }
  }
  return pass(fmt("50 measures within 2*res*|mu| (worst ratio %.2f), "
                  "20 single atoms exact",
                  worst));
}

// ---- criterion 7: GL^s rescaling identity ------------------------------

Outcome criterion7() {
  const Lattice lat = build_lattice(DomainGeometry::unit_square(), 1.0 / 16,
                                    SiteRule::ClosedCover);
  const Triangulation tri = build_triangulation(lat);
  std::mt19937_64 rng(0xC7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ContinuumField w(tri);
    for (std::size_t n = 0; n < tri.node_count(); ++n) {
      w[static_cast<std::int32_t>(n)] = {2.0 * dyadic_uniform(rng) - 1.0,
                                         2.0 * dyadic_uniform(rng) - 1.0};
    }
    const double eps = 0.01 + 0.3 * dyadic_uniform(rng);
    const double s1 = 0.1 + 9.9 * dyadic_uniform(rng);
    const double s2 = 0.1 + 9.9 * dyadic_uniform(rng);
    const double delta = gl_rescale_map(eps, s1, s2);
    const double p1 = gl_energy(w, eps, s1).potential;
    const double p2 = gl_energy(w, delta, s2).potential;
    const double rel = std::abs(p1 - p2) / std::max(1e-300, std::abs(p1));
    worst = std::max(worst, rel);
    if (rel > 1e-13) {
      return fail(fmt("trial %d: relative drift %.3e > 1e-13", trial, rel));
    }
  }
  return pass(fmt("100 random (field, s1, s2), worst drift %.2e", worst));
}

// ---- criterion 8: equivalence audits -----------------------------------

Outcome criterion8() {
  const auto t0 = Clock::now();
  const DomainGeometry sq = DomainGeometry::unit_square();
  const ScalingRegime h1(1.0);

  auto center_charge = [](const Lattice& lat) {
    DefectPrescription pres;
    const double eps = lat.epsilon();
    const auto a = static_cast<std::int32_t>(std::lround(0.5 / eps - 0.5));
    pres.charges = {{lat.plaquette_center(lat.plaquette_at(a, a)), 1}};
    return pres;
  };
  SolverOptions big;  // looser tails for the k >= 9 states
  big.xy_plateau_rel = 1e-6;
  big.gl_plateau_rel = 1e-7;
  big.gl_max_iters = 400;

  std::string detail;
  bool all_ok = true;
  auto verdict_of = [&](const char* name,
                        const std::vector<ConversionAudit>& rows) {
    const AuditVerdict v = audit_definition(rows);
    const ConversionAudit& last = rows.back();
    const bool gap_ok =
        last.gap <= 0.05 * std::abs(last.source_scaled) + 1e-12;
    detail += fmt("%s: final gap %.3f (band %.3f) %s, drift", name, last.gap,
                  0.05 * std::abs(last.source_scaled),
                  gap_ok ? "ok" : "EXCEEDED");
    for (const ConversionAudit& r : rows) detail += fmt(" %.4f", r.drift);
    detail += v.drift_trend_decreasing ? " decreasing | " : " NOT DECREASING | ";
    all_ok = all_ok && gap_ok && v.drift_trend_decreasing;
    return gap_ok && v.drift_trend_decreasing;
  };

  // SD -> XY and XY -> GL ride the identity schedule over k = 4..8
  std::vector<ConversionAudit> sd_xy, xy_gl;
  for (int k = 4; k <= 8; ++k) {
    const double eps = std::pow(2.0, -k);
    const Lattice lat = build_lattice(sq, eps);
    const DefectPrescription pres = center_charge(lat);
    const auto [u, rep_sd] = sd_minimize(pres, lat);
    if (!rep_sd.success) return fail(fmt("sd solve failed at k=%d", k));
    sd_xy.push_back(sd_to_xy(u, eps, h1).audit);
    const auto [v, rep_xy] = xy_minimize(pres, lat);
    if (!rep_xy.success) return fail(fmt("xy solve failed at k=%d", k));
    xy_gl.push_back(xy_to_gl(v, eps, h1).audit);
  }
  verdict_of("sd->xy", sd_xy);
  verdict_of("xy->gl", xy_gl);

  // GL -> XY and XY -> SD need the mesoscale schedule: on the unit square
  // delta_tilde < d/4 only holds from k = 8 on
  std::vector<ConversionAudit> gl_xy, xy_sd;
  for (int k = 8; k <= 10; ++k) {
    const double eps = std::pow(2.0, -k);
    if (!mesoscale_feasible(eps, h1, sq)) {
      return fail(fmt("mesoscale schedule infeasible at k=%d", k));
    }
    const Lattice lat = build_lattice(sq, eps);
    const DefectPrescription pres = center_charge(lat);
    const SolverOptions& opt = k >= 9 ? big : SolverOptions{};

    const GlSolution sol = gl_minimize(pres, sq, eps, eps / 2, opt);
    if (!sol.report.success) return fail(fmt("gl solve failed at k=%d", k));
    const ConvertedSpin cs = gl_to_xy(sol.field, eps, h1, sq);
    if (!cs.audit.ok) {
      return fail(fmt("gl->xy conversion failed at k=%d: %s", k,
                      cs.audit.message.c_str()));
    }
    gl_xy.push_back(cs.audit);

    const auto [v, rep_xy] = xy_minimize(pres, lat, opt);
    if (!rep_xy.success) return fail(fmt("xy solve failed at k=%d", k));
    const ConvertedDisplacement cd = xy_to_sd(v, eps, h1, sq);
    if (!cd.audit.ok) {
      return fail(fmt("xy->sd conversion failed at k=%d: %s", k,
                      cd.audit.message.c_str()));
    }
    xy_sd.push_back(cd.audit);
  }
  verdict_of("gl->xy", gl_xy);
  verdict_of("xy->sd", xy_sd);

  detail += fmt("%.0fs", seconds_since(t0));
  return all_ok ? pass(detail) : fail(detail);
}

// ---- criterion 9: determinism ------------------------------------------

Outcome criterion9() {
  const RunConfig cfg = single_vortex_config(R"(["xy", "sd", "gl"])");
  const std::string csv1 = sweep_csv(run_sweep(cfg));
  const std::string csv2 = sweep_csv(run_sweep(cfg));
  if (csv1 != csv2) return fail("rerun produced different bytes");
  return pass(fmt("%zu identical bytes across reruns", csv1.size()));
}

}  // namespace

int main(int argc, char** argv) {
  using Criterion = Outcome (*)();
  const Criterion criteria[] = {criterion1, criterion2, criterion3,
                                criterion4, criterion5, criterion6,
                                criterion7, criterion8, criterion9};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > 9) {
      std::fprintf(stderr, "usage: %s [criterion numbers 1..9]\n", argv[0]);
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty()) {
    for (int n = 1; n <= 9; ++n) selected.push_back(n);
  }

  int failures = 0;
  for (int n : selected) {
    Outcome out;
    try {
      out = criteria[n - 1]();
    } catch (const std::exception& e) {
      out = fail(std::string("exception: ") + e.what());
    }
    std::printf("criterion %d %s: %s\n", n, out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
