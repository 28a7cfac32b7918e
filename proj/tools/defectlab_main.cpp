#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "defectlab/runner.hpp"

using namespace defectlab;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int workers_override = 0;
  bool no_timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "run-config JSON")->required();
  cmd->add_option("--out", args.out_override, "output directory override");
  cmd->add_option("--workers", args.workers_override, "worker count override");
  cmd->add_flag("--no-timing", args.no_timing,
                "write wall_ms as 0 for bit-stable reruns");
}

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.workers_override > 0) cfg.workers = args.workers_override;
  if (args.no_timing) cfg.no_timing = true;
  return cfg;
}

double first_eps(const RunConfig& cfg) {
  if (cfg.eps_schedule.empty()) throw ConfigError("config needs an eps value");
  return cfg.eps_schedule.front();
}

DefectPrescription prescription_at(const RunConfig& cfg, const Lattice& lat) {
  DefectPrescription pres;
  pres.regime = cfg.regime;
  std::vector<Vec2> placed;
  for (const RunConfig::ExplicitDefect& d : cfg.defects) {
    // snap to the nearest plaquette center
    const double eps = lat.epsilon();
    const auto ax = static_cast<std::int32_t>(std::lround(d.position.x / eps - 0.5));
    const auto ay = static_cast<std::int32_t>(std::lround(d.position.y / eps - 0.5));
    const std::int32_t q = lat.plaquette_at(ax, ay);
    if (q < 0) throw ConfigError("defect lies outside the lattice cells");
    pres.charges.push_back({lat.plaquette_center(q), d.degree});
  }
  return pres;
}

int run_energy(const RunConfig& cfg) {
  const double eps = first_eps(cfg);
  const Lattice lat = build_lattice(cfg.domain, eps);
  const DefectPrescription pres = prescription_at(cfg, lat);
  const Model model = cfg.models.front();

  EnergyBreakdown e;
  if (model == Model::XY) {
    e = xy_energy(vortex_ansatz(pres, lat));
  } else if (model == Model::SD) {
    e = sd_energy(phase_of(vortex_ansatz(pres, lat)));
  } else {
    const Triangulation tri = build_triangulation(lat);
    e = gl_energy(interpolate_pl(vortex_ansatz(pres, lat), tri), eps);
  }
  const std::string doc = energy_json(e, model, eps, cfg.regime.h);
  write_file_atomic(cfg.out_dir + "/energy.json", doc);
  std::fputs(doc.c_str(), stdout);
  return 0;
}

int run_defects(const RunConfig& cfg) {
  const double eps = first_eps(cfg);
  const Lattice lat = build_lattice(cfg.domain, eps);
  const DefectPrescription pres = prescription_at(cfg, lat);
  const Model model = cfg.models.front();

  std::string doc;
  if (model == Model::GL) {
    const Triangulation tri = build_triangulation(lat);
    const ContinuumField w = interpolate_pl(vortex_ansatz(pres, lat), tri);
    const DefectMeasure mu = jacobian_density(w);
    std::string density = "x,y,det\n";
    char line[160];
    for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
      const Triangle& T = tri.triangles()[t];
      const Vec2 c = (tri.node_position(T.n0) + tri.node_position(T.n1) +
                      tri.node_position(T.n2)) /
                     3.0;
      std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", c.x, c.y,
                    mu.density()[t]);
      density += line;
    }
    write_file_atomic(cfg.out_dir + "/jacobian_density.csv", density);
    doc = measure_json(mu, "jacobian_density.csv");
  } else {
    const SpinField v = vortex_ansatz(pres, lat);
    const DefectMeasure mu =
        model == Model::XY ? vorticity_measure(v)
                           : dislocation_measure(phase_of(v));
    doc = measure_json(mu);
  }
  write_file_atomic(cfg.out_dir + "/defects.json", doc);
  std::fputs(doc.c_str(), stdout);
  return 0;
}

int run_minimize(const RunConfig& cfg) {
  const double eps = first_eps(cfg);
  const Lattice lat = build_lattice(cfg.domain, eps);
  const DefectPrescription pres = prescription_at(cfg, lat);
  const Model model = cfg.models.front();

  SolveReport rep;
  if (model == Model::XY) {
    const auto [v, r] = xy_minimize(pres, lat, cfg.solver);
    rep = r;
    write_file_atomic(cfg.out_dir + "/field.csv", field_csv(v));
    write_file_atomic(cfg.out_dir + "/field.json",
                      field_sidecar_json(cfg.domain, eps, "spin",
                                         lat.site_count()));
  } else if (model == Model::SD) {
    const auto [u, r] = sd_minimize(pres, lat, cfg.solver);
    rep = r;
    write_file_atomic(cfg.out_dir + "/field.csv", field_csv(u));
    write_file_atomic(cfg.out_dir + "/field.json",
                      field_sidecar_json(cfg.domain, eps, "displacement",
                                         lat.site_count()));
  } else {
    const GlSolution sol =
        gl_minimize(pres, cfg.domain, eps, cfg.gl_mesh_factor * eps, cfg.solver);
    rep = sol.report;
    write_file_atomic(cfg.out_dir + "/field.csv", field_csv(sol.field));
    write_file_atomic(cfg.out_dir + "/field.json",
                      field_sidecar_json(cfg.domain, cfg.gl_mesh_factor * eps,
                                         "continuum",
                                         sol.mesh->node_count()));
  }
  const std::string doc = solve_report_json(rep);
  write_file_atomic(cfg.out_dir + "/report.json", doc);
  if (cfg.solver.record_trace) {
    write_file_atomic(cfg.out_dir + "/trace.csv", trace_csv(rep));
  }
  std::fputs(doc.c_str(), stdout);
  return rep.success ? 0 : 3;
}

int run_convert(const RunConfig& cfg) {
  if (!cfg.route) throw ConfigError("convert needs a \"route\"");
  std::vector<ConversionAudit> rows;
  int attempted = 0, failed = 0;
  for (double eps : cfg.eps_schedule) {
    const bool needs_mesoscale = *cfg.route == ConversionRoute::GlToXy ||
                                 *cfg.route == ConversionRoute::XyToSd;
    if (needs_mesoscale &&
        !mesoscale_feasible(eps, cfg.regime, cfg.domain)) {
      std::fprintf(stderr, "eps=%g: mesoscale schedule infeasible, skipped\n",
                   eps);
      continue;
    }
    ++attempted;
    try {
      const Lattice lat = build_lattice(cfg.domain, eps);
      const DefectPrescription pres = prescription_at(cfg, lat);
      ConversionAudit audit;
      switch (*cfg.route) {
        case ConversionRoute::GlToXy: {
          const GlSolution sol = gl_minimize(pres, cfg.domain, eps,
                                             cfg.gl_mesh_factor * eps,
                                             cfg.solver);
          if (!sol.report.success) throw std::runtime_error(sol.report.message);
          audit = gl_to_xy(sol.field, eps, cfg.regime, cfg.domain).audit;
          break;
        }
        case ConversionRoute::XyToSd: {
          const auto [v, r] = xy_minimize(pres, lat, cfg.solver);
          if (!r.success) throw std::runtime_error(r.message);
          audit = xy_to_sd(v, eps, cfg.regime, cfg.domain).audit;
          break;
        }
        case ConversionRoute::SdToXy: {
          const auto [u, r] = sd_minimize(pres, lat, cfg.solver);
          if (!r.success) throw std::runtime_error(r.message);
          audit = sd_to_xy(u, eps, cfg.regime).audit;
          break;
        }
        case ConversionRoute::XyToGl: {
          const auto [v, r] = xy_minimize(pres, lat, cfg.solver);
          if (!r.success) throw std::runtime_error(r.message);
          audit = xy_to_gl(v, eps, cfg.regime).audit;
          break;
        }
      }
      if (!audit.ok) throw std::runtime_error(audit.message);
      rows.push_back(audit);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "eps=%g: %s\n", eps, e.what());
      ++failed;
    }
  }
  if (attempted == 0) throw ConfigError("no eps in the schedule is feasible");
  write_file_atomic(cfg.out_dir + "/audit.csv", audit_table_csv(rows));
  const AuditVerdict verdict = audit_definition(rows);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\n  \"rows\": %zu,\n  \"gap_trend_nonpositive\": %s,\n"
                "  \"drift_trend_decreasing\": %s,\n  \"final_gap_small\": "
                "%s\n}\n",
                rows.size(), verdict.gap_trend_nonpositive ? "true" : "false",
                verdict.drift_trend_decreasing ? "true" : "false",
                verdict.final_gap_small ? "true" : "false");
  write_file_atomic(cfg.out_dir + "/verdict.json", buf);
  std::fputs(buf, stdout);
  return 5 * failed > attempted ? 3 : 0;
}

int run_flatnorm(const RunConfig& cfg) {
  DefectMeasure mu(cfg.domain);
  for (const DefectAtom& a : cfg.measure_atoms) {
    mu.add_atom(a.position, a.weight);
  }
  const DualNormResult exact = flat_norm_atomic(mu, cfg.domain);
  write_file_atomic(cfg.out_dir + "/flatnorm_atomic.json",
                    dual_norm_json(exact));
  std::fputs(dual_norm_json(exact).c_str(), stdout);
  if (cfg.flatnorm_resolution) {
    const DualNormResult grid =
        flat_norm_grid(mu, cfg.domain, *cfg.flatnorm_resolution);
    write_file_atomic(cfg.out_dir + "/flatnorm_grid.json",
                      dual_norm_json(grid));
    std::fputs(dual_norm_json(grid).c_str(), stdout);
  }
  return 0;
}

int run_sweep_cmd(const RunConfig& cfg) {
  const SweepResult sweep = run_sweep(cfg);
  write_file_atomic(cfg.out_dir + "/sweep.csv", sweep_csv(sweep));
  write_file_atomic(cfg.out_dir + "/fits.json", fits_json(sweep));
  for (const SweepResult::ModelFit& f : sweep.fits) {
    std::vector<double> x, y;
    for (const RunRow& r : sweep.rows) {
      if (r.model == f.model && r.status == "ok") {
        x.push_back(std::log(1.0 / r.eps));
        y.push_back(r.fit_energy);
      }
    }
    emit_plot_files(cfg.out_dir,
                    std::string("energy_vs_logeps_") + model_name(f.model), x,
                    y, f.fit);
  }
  std::printf("sweep: %zu rows, %d failures -> %s\n", sweep.rows.size(),
              sweep.failures, (cfg.out_dir + "/sweep.csv").c_str());
  const auto n = static_cast<int>(sweep.rows.size());
  return (n > 0 && 5 * sweep.failures > n) ? 3 : 0;
}

int run_h2(const RunConfig& cfg) {
  // the oracle quadrature must agree with the closed form before any rows
  const H2Oracle probe = gamma_limit_oracle_h2(1.0, cfg.disk_r1, cfg.disk_r2);
  const double quad =
      h2_interaction_quadrature(1.0, cfg.disk_r1, cfg.disk_r2);
  if (std::abs(probe.interaction - quad) >
      1e-8 * std::max(1.0, probe.interaction)) {
    throw std::runtime_error("h2 oracle failed its quadrature check");
  }
  const H2Result res = h2_experiment(cfg);
  write_file_atomic(cfg.out_dir + "/h2.csv", h2_csv(res));

  // the scaled empirical strain field at the finest eps, one row per triangle
  if (!cfg.eps_schedule.empty()) {
    const double eps = cfg.eps_schedule.back();
    const double logeps = std::abs(std::log(eps));
    const Lattice lat = build_lattice(cfg.domain, eps);
    const int n = static_cast<int>(std::lround(cfg.disk_c * logeps));
    const std::vector<Vec2> pts = place_uniform_disk_defects(
        lat, cfg.domain.center(), cfg.disk_r1, n, cfg.min_sep_eps * eps);
    if (static_cast<int>(pts.size()) == n) {
      DefectPrescription pres;
      pres.regime = cfg.regime;
      for (const Vec2& p : pts) pres.charges.push_back({p, 1});
      const auto [u, rep] = sd_minimize(pres, lat, cfg.solver);
      if (rep.success) {
        const Triangulation tri = build_triangulation(lat);
        const std::vector<Vec2> beta = discrete_strain_field(u, tri);
        std::string csv = "x,y,bx,by\n";
        char line[160];
        for (std::size_t t = 0; t < beta.size(); ++t) {
          const Triangle& T = tri.triangles()[t];
          const Vec2 c = (tri.node_position(T.n0) + tri.node_position(T.n1) +
                          tri.node_position(T.n2)) /
                         3.0;
          std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", c.x,
                        c.y, beta[t].x / logeps, beta[t].y / logeps);
          csv += line;
        }
        write_file_atomic(cfg.out_dir + "/strain_field.csv", csv);
      }
    }
  }
  std::printf("h2: %zu rows, %d failures -> %s\n", res.rows.size(),
              res.failures, (cfg.out_dir + "/h2.csv").c_str());
  const auto n = static_cast<int>(res.rows.size());
  return (n > 0 && 5 * res.failures > n) ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"defectlab: lattice models of two-dimensional topological "
               "singularities"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*handler)(const RunConfig&) = nullptr;

  for (const auto& [name, desc, fn] :
       {std::tuple{"energy", "evaluate a model energy on the ansatz state",
                   &run_energy},
        std::tuple{"defects", "extract the defect measure of the ansatz state",
                   &run_defects},
        std::tuple{"minimize", "constrained minimization for one model",
                   &run_minimize},
        std::tuple{"convert", "run a conversion route over the eps schedule",
                   &run_convert},
        std::tuple{"flatnorm", "dual norm of an atomic measure", &run_flatnorm},
        std::tuple{"sweep", "eps sweep with per-model fits", &run_sweep_cmd},
        std::tuple{"h2", "strain-gradient regime experiment", &run_h2}}) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    add_common(cmd, args);
    cmd->callback([&handler, fn] { handler = fn; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load(args);
    return handler(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
