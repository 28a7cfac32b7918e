#include "defectlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>

#include <json.hpp>

namespace defectlab {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Model model_from_string(const std::string& s) {
  if (s == "gl") return Model::GL;
  if (s == "xy") return Model::XY;
  if (s == "sd") return Model::SD;
  throw ConfigError("unknown model '" + s + "'");
}

DomainGeometry domain_from_json(const json& j) {
  const std::string kind = j.value("kind", "unit-square");
  if (kind == "unit-square") return DomainGeometry::unit_square();
  if (kind == "rectangle") {
    return DomainGeometry::rectangle(j.at("x0").get<double>(),
                                     j.at("x1").get<double>(),
                                     j.at("y0").get<double>(),
                                     j.at("y1").get<double>());
  }
  if (kind == "disk") {
    return DomainGeometry::disk(
        {j.value("cx", 0.0), j.value("cy", 0.0)}, j.at("radius").get<double>());
  }
  throw ConfigError("unknown domain kind '" + kind + "'");
}

long elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

// nearest free plaquette center to a requested point; deterministic ring
// search on anchor offsets
std::int32_t snap_to_plaquette(const Lattice& lat, const Vec2& p,
                               const std::set<std::int32_t>& taken,
                               const Vec2& keep_center, double keep_radius,
                               double min_sep,
                               const std::vector<Vec2>& placed) {
  const double eps = lat.epsilon();
  const auto ax = static_cast<std::int32_t>(std::lround(p.x / eps - 0.5));
  const auto ay = static_cast<std::int32_t>(std::lround(p.y / eps - 0.5));
  const std::int32_t max_r =
      static_cast<std::int32_t>(2 * keep_radius / eps) + 2;
  for (std::int32_t r = 0; r <= max_r; ++r) {
    std::int32_t best = -1;
    double best_d = 0.0;
    for (std::int32_t dy = -r; dy <= r; ++dy) {
      for (std::int32_t dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        const std::int32_t q = lat.plaquette_at(ax + dx, ay + dy);
        if (q < 0 || taken.count(q)) continue;
        const Vec2 c = lat.plaquette_center(q);
        if (keep_radius > 0 && norm(c - keep_center) > keep_radius) continue;
        bool separated = true;
        for (const Vec2& other : placed) {
          if (norm(c - other) < min_sep) {
            separated = false;
            break;
          }
        }
        if (!separated) continue;
        const double d = norm(c - p);
        if (best < 0 || d < best_d) {
          best = q;
          best_d = d;
        }
      }
    }
    if (best >= 0) return best;
  }
  return -1;
}

DefectPrescription realize_prescription(const RunConfig& cfg,
                                        const Lattice& lat, double eps) {
  DefectPrescription pres;
  pres.regime = cfg.regime;
  if (cfg.uniform_disk) {
    const int n = static_cast<int>(
        std::lround(cfg.disk_c * std::abs(std::log(eps))));
    const std::vector<Vec2> pts = place_uniform_disk_defects(
        lat, cfg.domain.center(), cfg.disk_r1, n, cfg.min_sep_eps * eps);
    if (static_cast<int>(pts.size()) != n) {
      throw std::runtime_error("defect placement failed");
    }
    for (const Vec2& p : pts) pres.charges.push_back({p, 1});
    return pres;
  }
  std::set<std::int32_t> taken;
  std::vector<Vec2> placed;
  for (const RunConfig::ExplicitDefect& d : cfg.defects) {
    const std::int32_t q = snap_to_plaquette(
        lat, d.position, taken, cfg.domain.center(),
        cfg.domain.star_distance(), 0.0, placed);
    if (q < 0) throw std::runtime_error("defect placement failed");
    taken.insert(q);
    placed.push_back(lat.plaquette_center(q));
    pres.charges.push_back({lat.plaquette_center(q), d.degree});
  }
  return pres;
}

RunRow solve_one(const RunConfig& cfg, Model model, double eps) {
  RunRow row;
  row.model = model;
  row.eps = eps;
  row.h = cfg.regime.h;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Lattice lat = build_lattice(cfg.domain, eps);
    if (lat.plaquette_count() == 0) {
      throw std::runtime_error("lattice has no cells at this eps");
    }
    const DefectPrescription pres = realize_prescription(cfg, lat, eps);

    if (model == Model::XY) {
      const auto [v, rep] = xy_minimize(pres, lat, cfg.solver);
      if (!rep.success) throw std::runtime_error("solve failed: " + rep.message);
      row.raw_energy = rep.final_energy;
      row.iters = rep.iterations;
      row.n_defects = static_cast<int>(rep.achieved.atoms().size());
      row.total_variation = rep.achieved.total_variation();
      const Triangulation tri = build_triangulation(lat);
      const ContinuumField w = interpolate_pl(v, tri);
      const DefectMeasure diff =
          jacobian_density(w).scaled(1.0 / M_PI).minus(rep.achieved);
      row.flat_drift = flat_norm_grid(diff, cfg.domain, eps).value;
    } else if (model == Model::SD) {
      const auto [u, rep] = sd_minimize(pres, lat, cfg.solver);
      if (!rep.success) throw std::runtime_error("solve failed: " + rep.message);
      row.raw_energy = rep.final_energy;
      row.iters = rep.iterations;
      row.n_defects = static_cast<int>(rep.achieved.atoms().size());
      row.total_variation = rep.achieved.total_variation();
      const DefectMeasure want = prescription_measure(pres, cfg.domain);
      row.flat_drift =
          flat_norm_atomic(rep.achieved.minus(want), cfg.domain).value;
    } else {
      const double mesh = cfg.gl_mesh_factor * eps;
      const GlSolution sol = gl_minimize(pres, cfg.domain, eps, mesh, cfg.solver);
      if (!sol.report.success) {
        throw std::runtime_error("solve failed: " + sol.report.message);
      }
      row.raw_energy = sol.report.final_energy;
      row.iters = sol.report.iterations;
      row.n_defects = static_cast<int>(sol.report.achieved.atoms().size());
      row.total_variation = sol.report.achieved.total_variation();
      row.flat_drift = sol.report.constraint_flat_residual;
    }
    row.scaled_energy = scaled_energy(model, row.raw_energy, eps, cfg.regime);
    row.fit_energy = (model == Model::SD ? 4.0 * M_PI * M_PI : 1.0) *
                     row.raw_energy;
    row.status = "ok";
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  row.wall_ms = cfg.no_timing ? 0 : elapsed_ms(t0);
  return row;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("domain")) cfg.domain = domain_from_json(j["domain"]);

    cfg.models.clear();
    if (j.contains("models")) {
      for (const auto& m : j["models"]) {
        cfg.models.push_back(model_from_string(m.get<std::string>()));
      }
    } else if (j.contains("model")) {
      cfg.models.push_back(model_from_string(j["model"].get<std::string>()));
    } else {
      cfg.models.push_back(Model::XY);
    }

    if (j.contains("eps")) {
      const json& e = j["eps"];
      if (e.is_array()) {
        for (const auto& v : e) cfg.eps_schedule.push_back(v.get<double>());
      } else if (e.contains("pow2")) {
        const int kmin = e["pow2"].at("kmin").get<int>();
        const int kmax = e["pow2"].at("kmax").get<int>();
        if (kmin > kmax) throw ConfigError("eps.pow2: kmin > kmax");
        for (int k = kmin; k <= kmax; ++k) {
          cfg.eps_schedule.push_back(std::pow(2.0, -k));
        }
      } else {
        throw ConfigError("eps must be an array or {\"pow2\":{...}}");
      }
    }
    for (std::size_t i = 0; i < cfg.eps_schedule.size(); ++i) {
      const double e = cfg.eps_schedule[i];
      if (!(e > 0 && e < 1)) throw ConfigError("eps values must be in (0,1)");
      if (i > 0 && !(e < cfg.eps_schedule[i - 1])) {
        throw ConfigError("eps schedule must be strictly decreasing");
      }
    }

    if (j.contains("h")) cfg.regime = ScalingRegime(j["h"].get<double>());

    if (j.contains("defects")) {
      const json& d = j["defects"];
      if (d.is_array()) {
        for (const auto& a : d) {
          cfg.defects.push_back({{a.at("x").get<double>(),
                                  a.at("y").get<double>()},
                                 a.value("degree", 1)});
        }
      } else if (d.value("rule", "") == "uniform-disk") {
        cfg.uniform_disk = true;
        cfg.disk_c = d.value("c", 1.0);
        cfg.disk_r1 = d.at("r1").get<double>();
        cfg.disk_r2 = d.at("r2").get<double>();
        cfg.min_sep_eps = d.value("min_sep_eps", 2.0);
      } else {
        throw ConfigError("defects must be a list or the uniform-disk rule");
      }
    }

    if (j.contains("solver")) {
      const json& s = j["solver"];
      cfg.solver.cg_rel_tol = s.value("cg_rel_tol", cfg.solver.cg_rel_tol);
      cfg.solver.xy_grad_tol = s.value("xy_grad_tol", cfg.solver.xy_grad_tol);
      cfg.solver.xy_max_iters =
          s.value("xy_max_iters", cfg.solver.xy_max_iters);
      cfg.solver.sd_max_sweeps =
          s.value("sd_max_sweeps", cfg.solver.sd_max_sweeps);
      cfg.solver.gl_max_iters =
          s.value("gl_max_iters", cfg.solver.gl_max_iters);
      cfg.solver.record_trace =
          s.value("record_trace", cfg.solver.record_trace);
    }
    cfg.gl_mesh_factor = j.value("gl_mesh_factor", 0.5);
    if (!(cfg.gl_mesh_factor > 0 && cfg.gl_mesh_factor <= 0.5)) {
      throw ConfigError("gl_mesh_factor must lie in (0, 1/2]");
    }

    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = std::max(1, j.value("workers", 1));
    cfg.no_timing = j.value("no_timing", false);

    if (j.contains("route")) {
      const std::string r = j["route"].get<std::string>();
      if (r == "gl-xy") cfg.route = ConversionRoute::GlToXy;
      else if (r == "xy-sd") cfg.route = ConversionRoute::XyToSd;
      else if (r == "sd-xy") cfg.route = ConversionRoute::SdToXy;
      else if (r == "xy-gl") cfg.route = ConversionRoute::XyToGl;
      else throw ConfigError("unknown route '" + r + "'");
    }
    if (j.contains("resolution")) {
      cfg.flatnorm_resolution = j["resolution"].get<double>();
    }
    if (j.contains("measure")) {
      for (const auto& a : j["measure"].at("atoms")) {
        cfg.measure_atoms.push_back(
            {{a.at(0).get<double>(), a.at(1).get<double>()},
             a.at(2).get<double>()});
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

SweepResult run_sweep(const RunConfig& config) {
  if (config.eps_schedule.empty()) {
    throw ConfigError("sweep needs a nonempty eps schedule");
  }
  SweepResult out;

  struct Task {
    Model model;
    double eps;
  };
  std::vector<Task> tasks;
  for (Model m : config.models) {
    for (double e : config.eps_schedule) tasks.push_back({m, e});
  }

  out.rows.resize(tasks.size());
  if (config.workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      out.rows[i] = solve_one(config, tasks[i].model, tasks[i].eps);
    }
  } else {
    std::vector<std::future<RunRow>> futures(tasks.size());
    std::size_t next = 0;
    while (next < tasks.size()) {
      const std::size_t batch = std::min<std::size_t>(
          config.workers, tasks.size() - next);
      for (std::size_t b = 0; b < batch; ++b) {
        const Task t = tasks[next + b];
        futures[next + b] = std::async(std::launch::async, [&, t] {
          return solve_one(config, t.model, t.eps);
        });
      }
      for (std::size_t b = 0; b < batch; ++b) {
        out.rows[next + b] = futures[next + b].get();
      }
      next += batch;
    }
  }

  for (const RunRow& r : out.rows) {
    if (r.status != "ok") ++out.failures;
  }
  for (Model m : config.models) {
    std::vector<double> x, y;
    for (const RunRow& r : out.rows) {
      if (r.model == m && r.status == "ok") {
        x.push_back(std::log(1.0 / r.eps));
        y.push_back(r.fit_energy);
      }
    }
    if (x.size() >= 4) {
      out.fits.push_back({m, fit_linear(x, y)});
    }
  }
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out =
      "model,eps,h,raw_energy,scaled_energy,n_defects,total_variation,"
      "flat_drift,iters,wall_ms,status\n";
  for (const RunRow& r : sweep.rows) {
    out += model_name(r.model);
    out += ',' + fmt(r.eps) + ',' + fmt(r.h) + ',' + fmt(r.raw_energy) + ',' +
           fmt(r.scaled_energy) + ',' + std::to_string(r.n_defects) + ',' +
           fmt(r.total_variation) + ',' + fmt(r.flat_drift) + ',' +
           std::to_string(r.iters) + ',' + std::to_string(r.wall_ms) + ',' +
           r.status + '\n';
  }
  return out;
}

double gamma_limit_oracle_h1(const DefectMeasure& mu) {
  if (mu.has_density()) {
    throw std::invalid_argument("gamma_limit_oracle_h1: atomic measures only");
  }
  double tv = 0.0;
  for (const DefectAtom& a : mu.atoms()) tv += std::abs(a.weight);
  return M_PI * tv;
}

H2Oracle gamma_limit_oracle_h2(double m, double r1, double r2) {
  if (!(r1 > 0 && r1 < r2)) {
    throw std::invalid_argument("gamma_limit_oracle_h2: requires 0 < r1 < r2");
  }
  H2Oracle o;
  o.mass = m * M_PI * r1 * r1;
  o.self_energy = o.mass / (4.0 * M_PI);
  // beta tangential, |beta| = m r/2 inside r1 and m r1^2/(2r) outside
  o.interaction =
      M_PI * m * m * std::pow(r1, 4) * (1.0 / 16.0 + std::log(r2 / r1) / 4.0);
  o.total = o.self_energy + o.interaction;
  return o;
}

double h2_interaction_quadrature(double m, double r1, double r2, int panels) {
  auto beta2_r = [&](double r) {
    const double b = r <= r1 ? 0.5 * m * r : 0.5 * m * r1 * r1 / r;
    return b * b * r;
  };
  auto simpson = [&](double a, double b) {
    const int n = panels;  // even
    const double h = (b - a) / n;
    double s = beta2_r(a) + beta2_r(b);
    for (int i = 1; i < n; ++i) {
      s += beta2_r(a + i * h) * (i % 2 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
  };
  // (1/2) int |beta|^2 = (1/2) * 2 pi * int beta(r)^2 r dr
  return M_PI * (simpson(0.0, r1) + simpson(r1, r2));
}

std::vector<Vec2> place_uniform_disk_defects(const Lattice& lattice,
                                             const Vec2& center, double r1,
                                             int count, double min_sep) {
  std::vector<Vec2> placed;
  std::set<std::int32_t> taken;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < count; ++i) {
    const double r = r1 * std::sqrt((i + 0.5) / count);
    const double th = 2.0 * M_PI * golden * i;
    const Vec2 want{center.x + r * std::cos(th), center.y + r * std::sin(th)};
    const std::int32_t q =
        snap_to_plaquette(lattice, want, taken, center, r1, min_sep, placed);
    if (q < 0) break;
    taken.insert(q);
    placed.push_back(lattice.plaquette_center(q));
  }
  return placed;
}

H2Result h2_experiment(const RunConfig& config) {
  if (!config.uniform_disk) {
    throw ConfigError("h2 experiment needs the uniform-disk defect rule");
  }
  H2Result out;
  for (double eps : config.eps_schedule) {
    H2Row row;
    row.eps = eps;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const double logeps = std::abs(std::log(eps));
      const Lattice lat = build_lattice(config.domain, eps);
      if (lat.plaquette_count() == 0) {
        throw std::runtime_error("lattice has no cells");
      }
      const int n = static_cast<int>(std::lround(config.disk_c * logeps));
      row.n_defects = n;

      DefectPrescription pres;
      pres.regime = config.regime;
      const std::vector<Vec2> pts = place_uniform_disk_defects(
          lat, config.domain.center(), config.disk_r1, n,
          config.min_sep_eps * eps);
      if (static_cast<int>(pts.size()) != n) {
        throw std::runtime_error("defect placement failed");
      }
      for (const Vec2& p : pts) pres.charges.push_back({p, 1});

      const auto [u, rep] = sd_minimize(pres, lat, config.solver);
      if (!rep.success) throw std::runtime_error("solve failed: " + rep.message);
      row.sd_raw = rep.final_energy;
      row.iters = rep.iterations;
      row.scaled_energy = row.sd_raw / (logeps * logeps);

      const Triangulation tri = build_triangulation(lat);
      const std::vector<Vec2> beta = discrete_strain_field(u, tri);
      NeumaierSum l2;
      for (const Vec2& b : beta) l2.add(tri.triangle_area() * dot(b, b));
      row.strain_l2sq = 0.5 * l2.value() / (logeps * logeps);

      const double m = n / (logeps * M_PI * config.disk_r1 * config.disk_r1);
      row.oracle = gamma_limit_oracle_h2(m, config.disk_r1, config.disk_r2);
      row.rel_gap = std::abs(row.scaled_energy - row.oracle.total) /
                    row.oracle.total;
      row.status = "ok";
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
      ++out.failures;
    }
    row.wall_ms = config.no_timing ? 0 : elapsed_ms(t0);
    out.rows.push_back(row);
  }
  return out;
}

std::string h2_csv(const H2Result& result) {
  std::string out =
      "eps,n_defects,sd_raw,scaled_energy,strain_l2sq,oracle_self,"
      "oracle_interaction,oracle_total,rel_gap,iters,wall_ms,status\n";
  for (const H2Row& r : result.rows) {
    out += fmt(r.eps) + ',' + std::to_string(r.n_defects) + ',' +
           fmt(r.sd_raw) + ',' + fmt(r.scaled_energy) + ',' +
           fmt(r.strain_l2sq) + ',' + fmt(r.oracle.self_energy) + ',' +
           fmt(r.oracle.interaction) + ',' + fmt(r.oracle.total) + ',' +
           fmt(r.rel_gap) + ',' + std::to_string(r.iters) + ',' +
           std::to_string(r.wall_ms) + ',' + r.status + '\n';
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.parent_path() / (p.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

std::string field_csv(const SpinField& v) {
  std::string out = "x,y,vx,vy\n";
  const Lattice& lat = v.lattice();
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const Vec2 p = lat.site_position(static_cast<std::int32_t>(s));
    const Vec2 x = v[static_cast<std::int32_t>(s)];
    out += fmt(p.x) + ',' + fmt(p.y) + ',' + fmt(x.x) + ',' + fmt(x.y) + '\n';
  }
  return out;
}

std::string field_csv(const DisplacementField& u) {
  std::string out = "x,y,u\n";
  const Lattice& lat = u.lattice();
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const Vec2 p = lat.site_position(static_cast<std::int32_t>(s));
    out += fmt(p.x) + ',' + fmt(p.y) + ',' +
           fmt(u[static_cast<std::int32_t>(s)]) + '\n';
  }
  return out;
}

std::string field_csv(const ContinuumField& w) {
  std::string out = "x,y,wx,wy\n";
  const Triangulation& tri = w.triangulation();
  for (std::size_t n = 0; n < tri.node_count(); ++n) {
    const Vec2 p = tri.node_position(static_cast<std::int32_t>(n));
    const Vec2 x = w[static_cast<std::int32_t>(n)];
    out += fmt(p.x) + ',' + fmt(p.y) + ',' + fmt(x.x) + ',' + fmt(x.y) + '\n';
  }
  return out;
}

std::string field_sidecar_json(const DomainGeometry& geometry, double spacing,
                               const std::string& kind, std::size_t rows) {
  json j;
  j["kind"] = kind;
  j["rows"] = rows;
  j["spacing"] = spacing;
  j["domain"]["kind"] = geometry.kind_name();
  if (geometry.kind() == DomainKind::Disk) {
    j["domain"]["cx"] = geometry.center().x;
    j["domain"]["cy"] = geometry.center().y;
    j["domain"]["radius"] = geometry.radius();
  } else {
    j["domain"]["x0"] = geometry.x0();
    j["domain"]["x1"] = geometry.x1();
    j["domain"]["y0"] = geometry.y0();
    j["domain"]["y1"] = geometry.y1();
  }
  return j.dump(2) + "\n";
}

std::string measure_json(const DefectMeasure& mu,
                         const std::string& density_file) {
  json j;
  j["atoms"] = json::array();
  for (const DefectAtom& a : mu.atoms()) {
    j["atoms"].push_back({a.position.x, a.position.y, a.weight});
  }
  if (!density_file.empty()) j["density_file"] = density_file;
  j["total_variation"] = mu.total_variation();
  return j.dump(2) + "\n";
}

std::string dual_norm_json(const DualNormResult& r) {
  json j;
  j["value"] = r.value;
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["method"] = r.method == DualNormMethod::AtomicExact ? "atomic-exact"
                                                        : "grid-dual-ascent";
  j["iterations"] = r.iterations;
  return j.dump(2) + "\n";
}

std::string energy_json(const EnergyBreakdown& e, Model model, double epsilon,
                        double h) {
  json j;
  j["total"] = e.total;
  j["gradient"] = e.gradient;
  j["potential"] = e.potential;
  j["model"] = model_name(model);
  j["epsilon"] = epsilon;
  j["h"] = h;
  return j.dump(2) + "\n";
}

std::string solve_report_json(const SolveReport& rep) {
  json j;
  j["success"] = rep.success;
  j["message"] = rep.message;
  j["final_energy"] = rep.final_energy;
  j["iterations"] = rep.iterations;
  j["guard_rejections"] = rep.guard_rejections;
  j["residual_norm"] = rep.residual_norm;
  j["quadratic_bound"] = rep.quadratic_bound;
  j["constraint_flat_residual"] = rep.constraint_flat_residual;
  j["achieved_atoms"] = json::array();
  for (const DefectAtom& a : rep.achieved.atoms()) {
    j["achieved_atoms"].push_back({a.position.x, a.position.y, a.weight});
  }
  return j.dump(2) + "\n";
}

std::string trace_csv(const SolveReport& rep) {
  std::string out = "iter,energy,step,guard_rejects\n";
  for (const TracePoint& t : rep.trace) {
    out += std::to_string(t.iter) + ',' + fmt(t.energy) + ',' + fmt(t.step) +
           ',' + std::to_string(t.guard_rejects) + '\n';
  }
  return out;
}

std::string fits_json(const SweepResult& sweep) {
  json j = json::array();
  for (const SweepResult::ModelFit& f : sweep.fits) {
    json e;
    e["model"] = model_name(f.model);
    e["slope"] = f.fit.slope;
    e["intercept"] = f.fit.intercept;
    e["slope_ci95"] = f.fit.slope_ci95;
    e["points"] = f.fit.points;
    j.push_back(e);
  }
  return j.dump(2) + "\n";
}

void emit_plot_files(const std::string& out_dir, const std::string& stem,
                     const std::vector<double>& x,
                     const std::vector<double>& y, const LinearFit& fit) {
  std::string dat;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dat += fmt(x[i]) + ' ' + fmt(y[i]) + '\n';
  }
  write_file_atomic(out_dir + "/" + stem + ".dat", dat);
  std::string gp;
  gp += "set xlabel 'ln(1/eps)'\n";
  gp += "set ylabel 'energy'\n";
  gp += "plot '" + stem + ".dat' with points title 'data', " + fmt(fit.slope) +
        "*x + " + fmt(fit.intercept) + " title 'fit'\n";
  write_file_atomic(out_dir + "/" + stem + ".gnuplot", gp);
}

}  // namespace defectlab
