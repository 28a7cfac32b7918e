#include "defectlab/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "defectlab/flatnorm.hpp"

namespace defectlab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double residual(double t) { return t - project_to_int(t); }

std::int32_t find_plaquette(const Lattice& lat, const Vec2& center) {
  const double eps = lat.epsilon();
  const auto ax = static_cast<std::int32_t>(std::lround(center.x / eps - 0.5));
  const auto ay = static_cast<std::int32_t>(std::lround(center.y / eps - 0.5));
  const std::int32_t p = lat.plaquette_at(ax, ay);
  if (p < 0 || norm(lat.plaquette_center(p) - center) > 1e-9) {
    throw std::invalid_argument(
        "prescription point is not a plaquette center of this lattice");
  }
  return p;
}

// per-plaquette integer charges of a prescription
std::unordered_map<std::int32_t, int> charge_map(
    const DefectPrescription& prescription, const Lattice& lat) {
  std::unordered_map<std::int32_t, int> map;
  for (const auto& [p, d] : prescription.charges) {
    if (d != 1 && d != -1) {
      throw std::invalid_argument("prescription degrees must be +-1");
    }
    const std::int32_t q = find_plaquette(lat, p);
    if (!map.emplace(q, d).second) {
      throw std::invalid_argument("prescription points must be distinct");
    }
  }
  return map;
}

int u_alpha(const std::vector<double>& u, const Plaquette& q);

// The guard must agree bit-for-bit with vorticity_measure on the final spin
// field, so the phases are pushed through the same cos/sin/atan2 round trip
// a stored field would take. Raw phase differences disagree with the wrapped
// ones exactly at tie states (a bond at phase difference pi), which is where
// a vortex tries to hop a plaquette.
void wrapped_phase(const std::vector<double>& theta, std::vector<double>& u) {
  u.resize(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double t = std::atan2(std::sin(theta[i]), std::cos(theta[i]));
    if (t < 0) t += kTwoPi;
    u[i] = t / kTwoPi;
  }
}

bool theta_matches(const Lattice& lat, const std::vector<double>& theta,
                   const std::unordered_map<std::int32_t, int>& charges,
                   std::vector<double>& scratch) {
  wrapped_phase(theta, scratch);
  for (std::size_t p = 0; p < lat.plaquette_count(); ++p) {
    const int a = u_alpha(scratch, lat.plaquettes()[p]);
    const auto it = charges.find(static_cast<std::int32_t>(p));
    const int want = it == charges.end() ? 0 : it->second;
    if (a != want) return false;
  }
  return true;
}

// same stencil for displacements (units of the Burgers vector)
int u_alpha(const std::vector<double>& u, const Plaquette& q) {
  const double b = residual(u[q.s10] - u[q.s00]);
  const double r = residual(u[q.s11] - u[q.s10]);
  const double t = residual(u[q.s11] - u[q.s01]);
  const double l = residual(u[q.s01] - u[q.s00]);
  return static_cast<int>(std::lround(b + r - t - l));
}

std::vector<double> ansatz_angles(const DefectPrescription& prescription,
                                  const Lattice& lat) {
  std::vector<double> theta(lat.site_count(), 0.0);
  for (std::size_t s = 0; s < lat.site_count(); ++s) {
    const Vec2 p = lat.site_position(static_cast<std::int32_t>(s));
    for (const auto& [a, d] : prescription.charges) {
      theta[s] += d * std::atan2(p.y - a.y, p.x - a.x);
    }
  }
  return theta;
}

double xy_theta_energy(const Lattice& lat, const std::vector<double>& theta) {
  NeumaierSum acc;
  for (const Bond& b : lat.bonds()) {
    acc.add(1.0 - std::cos(theta[b.b] - theta[b.a]));
  }
  return acc.value();
}

void xy_theta_gradient(const Lattice& lat, const std::vector<double>& theta,
                       std::vector<double>& g) {
  g.assign(theta.size(), 0.0);
  for (const Bond& b : lat.bonds()) {
    const double s = std::sin(theta[b.b] - theta[b.a]);
    g[b.b] += s;
    g[b.a] -= s;
  }
}

}  // namespace

DefectMeasure prescription_measure(const DefectPrescription& prescription,
                                   const DomainGeometry& geometry) {
  DefectMeasure mu(geometry);
  for (const auto& [p, d] : prescription.charges) {
    mu.add_atom(p, static_cast<double>(d));
  }
  mu.merge_atoms();
  return mu;
}

bool same_atoms(const DefectMeasure& a, const DefectMeasure& b,
                double pos_tol) {
  DefectMeasure ma = a, mb = b;
  ma.merge_atoms();
  mb.merge_atoms();
  if (ma.atoms().size() != mb.atoms().size()) return false;
  std::vector<char> used(mb.atoms().size(), 0);
  for (const DefectAtom& x : ma.atoms()) {
    bool found = false;
    for (std::size_t j = 0; j < mb.atoms().size(); ++j) {
      if (!used[j] && norm(mb.atoms()[j].position - x.position) <= pos_tol &&
          mb.atoms()[j].weight == x.weight) {
        used[j] = 1;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

SpinField vortex_ansatz(const DefectPrescription& prescription,
                        const Lattice& lattice) {
  const auto charges = charge_map(prescription, lattice);
  const std::vector<double> theta = ansatz_angles(prescription, lattice);
  std::vector<double> scratch;
  if (!theta_matches(lattice, theta, charges, scratch)) {
    throw std::runtime_error(
        "vortex_ansatz: lattice too coarse to carry the prescription");
  }
  return SpinField::from_angles(lattice, theta);
}

BondField dirac_string(const DefectPrescription& prescription,
                       const Lattice& lattice) {
  const auto charges = charge_map(prescription, lattice);
  BondField p(lattice, true);

  // vertical bond at grid column cx on row ay, or -1
  auto vbond = [&](std::int32_t cx, std::int32_t ay) {
    const std::int32_t s = lattice.site_at(cx, ay);
    return s < 0 ? std::int32_t{-1} : lattice.north_bond(s);
  };
  auto east_run = [&](std::int32_t ax, std::int32_t ay) {
    int n = 0;
    for (std::int32_t cx = ax + 1; vbond(cx, ay) >= 0; ++cx) ++n;
    return n;
  };
  auto west_run = [&](std::int32_t ax, std::int32_t ay) {
    int n = 0;
    for (std::int32_t cx = ax; vbond(cx, ay) >= 0; --cx) ++n;
    return n;
  };

  struct Entry {
    std::int32_t ax;
    int d;
    bool matched = false;
  };
  std::map<std::int32_t, std::vector<Entry>> rows;
  for (const auto& [q, d] : charges) {
    const GridIndex g = lattice.site_grid(lattice.plaquettes()[q].anchor);
    rows[g.iy].push_back({g.ix, d, false});
  }

  for (auto& [iy, row] : rows) {
    std::sort(row.begin(), row.end(),
              [](const Entry& a, const Entry& b) { return a.ax < b.ax; });
    // connect same-row opposite pairs when shorter than two boundary exits
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i].matched) continue;
      for (std::size_t j = i + 1; j < row.size(); ++j) {
        if (row[j].matched) continue;
        if (row[j].d == -row[i].d) {
          const int pair_len = row[j].ax - row[i].ax;
          const int sep_len =
              std::min(east_run(row[i].ax, iy), west_run(row[i].ax, iy)) +
              std::min(east_run(row[j].ax, iy), west_run(row[j].ax, iy));
          if (pair_len < sep_len) {
            for (std::int32_t cx = row[i].ax + 1; cx <= row[j].ax; ++cx) {
              const std::int32_t b = vbond(cx, iy);
              if (b < 0) {
                throw std::logic_error("dirac_string: broken pair route");
              }
              p[b] += row[i].d;
            }
            row[i].matched = row[j].matched = true;
          }
        }
        break;  // only the nearest unmatched candidate is considered
      }
    }
    for (const Entry& e : row) {
      if (e.matched) continue;
      if (east_run(e.ax, iy) <= west_run(e.ax, iy)) {
        for (std::int32_t cx = e.ax + 1; vbond(cx, iy) >= 0; ++cx) {
          p[vbond(cx, iy)] += e.d;
        }
      } else {
        for (std::int32_t cx = e.ax; vbond(cx, iy) >= 0; --cx) {
          p[vbond(cx, iy)] -= e.d;
        }
      }
    }
  }

  // the construction must satisfy curl p = -alpha exactly
  const std::vector<double> curl = discrete_curl(p);
  for (std::size_t q = 0; q < lattice.plaquette_count(); ++q) {
    const auto it = charges.find(static_cast<std::int32_t>(q));
    const double want = it == charges.end() ? 0.0 : -it->second;
    if (curl[q] != want) {
      throw std::logic_error("dirac_string: curl does not match -alpha");
    }
  }
  return p;
}

std::pair<DisplacementField, SolveReport> sd_minimize(
    const DefectPrescription& prescription, const Lattice& lattice,
    const SolverOptions& options) {
  SolveReport rep;
  rep.achieved = DefectMeasure(lattice.geometry());
  charge_map(prescription, lattice);  // validates

  // Phase 1: minimize (1/2) sum_b (du_b - seed_b)^2, the screened linear
  // problem around the Dirac string. The seed is the negated string so the
  // recovered circulation carries the prescribed sign.
  BondField seed(lattice, true);
  {
    const BondField str = dirac_string(prescription, lattice);
    for (std::size_t b = 0; b < lattice.bond_count(); ++b) {
      seed[static_cast<std::int32_t>(b)] = -str[static_cast<std::int32_t>(b)];
    }
  }

  const auto n = static_cast<std::int32_t>(lattice.site_count());
  std::vector<double> u(n, 0.0), rhs(n, 0.0);
  for (std::int32_t b = 0; b < static_cast<std::int32_t>(lattice.bond_count());
       ++b) {
    const Bond& bond = lattice.bonds()[b];
    rhs[bond.b] += seed[b];
    rhs[bond.a] -= seed[b];
  }
  auto laplacian = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (const Bond& bond : lattice.bonds()) {
      const double d = x[bond.b] - x[bond.a];
      y[bond.b] += d;
      y[bond.a] -= d;
    }
  };

  // CG on the singular but consistent lattice Laplacian (rhs sums to zero)
  {
    std::vector<double> r = rhs, d = rhs, q(n, 0.0);
    double rr = 0.0;
    for (double v : r) rr += v * v;
    const double rr0 = rr > 0 ? rr : 1.0;
    int it = 0;
    while (rr > options.cg_rel_tol * options.cg_rel_tol * rr0 &&
           it < options.cg_max_iters) {
      laplacian(d, q);
      double dq = 0.0;
      for (std::int32_t i = 0; i < n; ++i) dq += d[i] * q[i];
      if (dq <= 0) break;
      const double alpha = rr / dq;
      for (std::int32_t i = 0; i < n; ++i) {
        u[i] += alpha * d[i];
        r[i] -= alpha * q[i];
      }
      double rr_new = 0.0;
      for (double v : r) rr_new += v * v;
      const double beta = rr_new / rr;
      for (std::int32_t i = 0; i < n; ++i) d[i] = r[i] + beta * d[i];
      rr = rr_new;
      ++it;
    }
    rep.iterations = it;
    rep.residual_norm = std::sqrt(rr / rr0);
  }

  {
    NeumaierSum acc;
    for (std::int32_t b = 0;
         b < static_cast<std::int32_t>(lattice.bond_count()); ++b) {
      const Bond& bond = lattice.bonds()[b];
      const double r = (u[bond.b] - u[bond.a]) - seed[b];
      acc.add(0.5 * r * r);
    }
    rep.quadratic_bound = acc.value();
  }

  DisplacementField field(lattice);
  field.values() = u;
  const DefectMeasure want =
      prescription_measure(prescription, lattice.geometry());
  {
    DefectMeasure mu = dislocation_measure(field);
    if (!same_atoms(mu, want)) {
      rep.success = false;
      rep.message = "quadratic relaxation missed the prescribed dislocations";
      rep.achieved = std::move(mu);
      rep.final_energy = sd_energy(field).total;
      return {std::move(field), rep};
    }
  }

  // Phase 2: cyclic coordinate descent on the true dist^2(., Z) energy.
  // Each site solves its one-dimensional periodic problem in closed form;
  // moves that change any adjacent circulation are rejected.
  std::vector<double>& uv = field.values();
  double energy = sd_energy(field).total;
  auto local_cost = [&](std::int32_t s, double x) {
    double f = 0.0;
    for (const Lattice::Incidence& inc : lattice.incident(s)) {
      const double r = residual(x - uv[inc.other]);
      f += 0.5 * r * r;
    }
    return f;
  };

  int sweeps = 0;
  for (; sweeps < options.sd_max_sweeps; ++sweeps) {
    const double before = energy;
    for (std::int32_t s = 0; s < n; ++s) {
      const auto& inc = lattice.incident(s);
      if (inc.empty()) continue;
      double bp[6];
      int nbp = 0;
      bp[nbp++] = 0.0;
      for (const Lattice::Incidence& ic : inc) {
        const double t = uv[ic.other] + 0.5;
        bp[nbp++] = t - std::floor(t);
      }
      bp[nbp++] = 1.0;
      std::sort(bp, bp + nbp);

      const double old = uv[s];
      double best_x = old;
      double best_f = local_cost(s, old);
      for (int i = 0; i + 1 < nbp; ++i) {
        const double lo = bp[i], hi = bp[i + 1];
        if (hi - lo < 1e-15) continue;
        const double mid = 0.5 * (lo + hi);
        double mean = 0.0;
        for (const Lattice::Incidence& ic : inc) {
          mean += uv[ic.other] + project_to_int(mid - uv[ic.other]);
        }
        mean /= static_cast<double>(inc.size());
        const double x = std::clamp(mean, lo, hi);
        const double f = local_cost(s, x);
        if (f < best_f - 1e-15) {
          best_f = f;
          best_x = x;
        }
      }
      if (best_x == old) continue;
      const double cand = best_x + std::round(old - best_x);

      const GridIndex g = lattice.site_grid(s);
      const std::int32_t adj[4] = {lattice.plaquette_at(g.ix - 1, g.iy - 1),
                                   lattice.plaquette_at(g.ix, g.iy - 1),
                                   lattice.plaquette_at(g.ix - 1, g.iy),
                                   lattice.plaquette_at(g.ix, g.iy)};
      int before_alpha[4];
      for (int k = 0; k < 4; ++k) {
        before_alpha[k] =
            adj[k] >= 0 ? u_alpha(uv, lattice.plaquettes()[adj[k]]) : 0;
      }
      const double saved = uv[s];
      uv[s] = cand;
      bool ok = true;
      for (int k = 0; k < 4; ++k) {
        if (adj[k] >= 0 &&
            u_alpha(uv, lattice.plaquettes()[adj[k]]) != before_alpha[k]) {
          ok = false;
          break;
        }
      }
      if (!ok) {
        uv[s] = saved;
        ++rep.guard_rejections;
      }
    }
    energy = sd_energy(field).total;
    if (options.record_trace) {
      rep.trace.push_back({sweeps, energy, 0.0, rep.guard_rejections});
    }
    if (before - energy <= options.sd_sweep_rel_tol * std::max(1.0, before)) {
      ++sweeps;
      break;
    }
  }

  rep.final_energy = energy;
  rep.iterations += sweeps;
  rep.achieved = dislocation_measure(field);
  rep.success = same_atoms(rep.achieved, want);
  if (!rep.success) {
    rep.message = "topology changed during relaxation";
  } else if (rep.quadratic_bound > 0 && energy > 1.5 * rep.quadratic_bound) {
    rep.success = false;
    rep.message = "relaxation stalled far above the quadratic bound";
  }
  return {std::move(field), rep};
}

std::pair<SpinField, SolveReport> xy_minimize(
    const DefectPrescription& prescription, const Lattice& lattice,
    const SolverOptions& options) {
  SolveReport rep;
  rep.achieved = DefectMeasure(lattice.geometry());
  const auto charges = charge_map(prescription, lattice);

  std::vector<double> theta = ansatz_angles(prescription, lattice);
  std::vector<double> scratch;
  if (!theta_matches(lattice, theta, charges, scratch)) {
    rep.success = false;
    rep.message = "ansatz infeasible at this lattice spacing";
    return {SpinField(lattice), rep};
  }

  double energy = xy_theta_energy(lattice, theta);
  std::vector<double> g, g_new, cand(theta.size());
  xy_theta_gradient(lattice, theta, g);
  double step = 0.25;  // 1/L, L <= 4 on the square lattice

  long iter = 0;
  std::vector<double> window;
  for (; iter < options.xy_max_iters; ++iter) {
    double gmax = 0.0, gg = 0.0;
    for (double v : g) {
      gmax = std::max(gmax, std::abs(v));
      gg += v * v;
    }
    if (gmax < options.xy_grad_tol) break;

    double t = std::clamp(step, 1e-10, 64.0);
    bool accepted = false;
    double e_cand = energy;
    for (int halv = 0; halv < 48; ++halv) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        cand[i] = theta[i] - t * g[i];
      }
      if (!theta_matches(lattice, cand, charges, scratch)) {
        ++rep.guard_rejections;
        t *= 0.5;
        continue;
      }
      e_cand = xy_theta_energy(lattice, cand);
      if (e_cand <= energy - 1e-4 * t * gg) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    xy_theta_gradient(lattice, cand, g_new);
    double sy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double sv = cand[i] - theta[i];
      const double yv = g_new[i] - g[i];
      sy += sv * yv;
      yy += yv * yv;
    }
    step = (sy > 0 && yy > 0) ? sy / yy : 0.25;
    const double drop = energy - e_cand;
    theta.swap(cand);
    g.swap(g_new);
    energy = e_cand;
    if (options.record_trace) {
      rep.trace.push_back({iter, energy, t, rep.guard_rejections});
    }
    (void)drop;
    // windowed plateau: the guard can pin the gradient norm above the
    // tolerance while the energy has stopped moving, and far below it the
    // Barzilai-Borwein tail contributes nothing the energy criteria can see
    window.push_back(energy);
    if (window.size() > 20) {
      window.erase(window.begin());
      if (window.front() - window.back() <
          options.xy_plateau_rel * std::max(1.0, energy)) {
        ++iter;
        break;
      }
    }
  }

  SpinField v = SpinField::from_angles(lattice, theta);
  rep.final_energy = xy_energy(v).total;
  rep.iterations = iter;
  rep.achieved = vorticity_measure(v);
  double gmax = 0.0;
  for (double x : g) gmax = std::max(gmax, std::abs(x));
  rep.residual_norm = gmax;
  rep.success = same_atoms(
      rep.achieved, prescription_measure(prescription, lattice.geometry()));
  if (!rep.success) rep.message = "vorticity drifted off the prescription";
  return {std::move(v), rep};
}

GlSolution gl_minimize(const DefectPrescription& prescription,
                       const DomainGeometry& geometry, double epsilon,
                       double mesh, const SolverOptions& options) {
  if (!(mesh > 0) || mesh > epsilon / 2 + 1e-15) {
    throw std::invalid_argument("gl_minimize: requires mesh <= epsilon/2");
  }
  GlSolution sol;
  SolveReport& rep = sol.report;
  rep.achieved = DefectMeasure(geometry);

  // closed cover so the Dirichlet ring carries the prescribed total degree
  sol.mesh_lattice = std::make_shared<Lattice>(
      build_lattice(geometry, mesh, SiteRule::ClosedCover));
  const Lattice& lat = *sol.mesh_lattice;
  sol.mesh = std::make_shared<Triangulation>(build_triangulation(lat));
  const Triangulation& tri = *sol.mesh;

  const auto nn = static_cast<std::int32_t>(tri.node_count());
  std::vector<char> fixed(nn, 0);
  for (std::int32_t node = 0; node < nn; ++node) {
    const GridIndex gi = lat.site_grid(tri.node_site(node));
    const bool interior = lat.plaquette_at(gi.ix, gi.iy) >= 0 &&
                          lat.plaquette_at(gi.ix - 1, gi.iy) >= 0 &&
                          lat.plaquette_at(gi.ix, gi.iy - 1) >= 0 &&
                          lat.plaquette_at(gi.ix - 1, gi.iy - 1) >= 0;
    fixed[node] = interior ? 0 : 1;
  }

  ContinuumField w(tri);
  for (std::int32_t node = 0; node < nn; ++node) {
    const Vec2 p = tri.node_position(node);
    double th = 0.0;
    double profile = 1.0;
    for (const auto& [a, d] : prescription.charges) {
      th += d * std::atan2(p.y - a.y, p.x - a.x);
      profile *= std::min(1.0, norm(p - a) / epsilon);
    }
    const Vec2 unit{std::cos(th), std::sin(th)};
    w[node] = fixed[node] ? unit : unit * profile;
  }

  const double area = tri.triangle_area();
  const double h = tri.mesh_size();
  const double pot_coeff = 1.0 / (epsilon * epsilon);
  std::vector<double> lumped(nn, 0.0);
  for (const Triangle& T : tri.triangles()) {
    lumped[T.n0] += area / 3.0;
    lumped[T.n1] += area / 3.0;
    lumped[T.n2] += area / 3.0;
  }

  auto total_energy = [&](const ContinuumField& f) {
    NeumaierSum acc;
    for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
      const ContinuumField::Gradient g =
          f.triangle_gradient(static_cast<std::int32_t>(t));
      acc.add(0.5 * area * (dot(g.gx, g.gx) + dot(g.gy, g.gy)));
    }
    for (std::int32_t node = 0; node < nn; ++node) {
      const double m = 1.0 - norm(f[node]);
      acc.add(pot_coeff * lumped[node] * m * m);
    }
    return acc.value();
  };
  auto gradient = [&](const ContinuumField& f, std::vector<Vec2>& g) {
    g.assign(nn, {0, 0});
    const double c = area / h;
    for (const Triangle& T : tri.triangles()) {
      const Vec2 v0 = f[T.n0], v1 = f[T.n1], v2 = f[T.n2];
      if (!T.upper) {
        const Vec2 gx = (v1 - v0) / h, gy = (v2 - v1) / h;
        g[T.n0] = g[T.n0] - gx * c;
        g[T.n1] = g[T.n1] + (gx - gy) * c;
        g[T.n2] = g[T.n2] + gy * c;
      } else {
        const Vec2 gx = (v1 - v2) / h, gy = (v2 - v0) / h;
        g[T.n0] = g[T.n0] - gy * c;
        g[T.n1] = g[T.n1] + gx * c;
        g[T.n2] = g[T.n2] + (gy - gx) * c;
      }
    }
    for (std::int32_t node = 0; node < nn; ++node) {
      const double r = norm(f[node]);
      if (r > 1e-14) {
        const double dW = 2.0 * (r - 1.0) / r;
        g[node] = g[node] + f[node] * (pot_coeff * lumped[node] * dW);
      }
      if (fixed[node]) g[node] = {0, 0};
    }
  };

  double energy = total_energy(w);
  std::vector<Vec2> g, g_new;
  gradient(w, g);
  double step = h * h;
  long iter = 0;
  std::vector<double> window;
  ContinuumField cand = w;
  for (; iter < options.gl_max_iters; ++iter) {
    double gg = 0.0;
    for (const Vec2& x : g) gg += dot(x, x);
    if (gg == 0.0) break;

    double t = std::clamp(step, 1e-14, 1e6);
    bool accepted = false;
    double e_cand = energy;
    for (int halv = 0; halv < 40; ++halv) {
      for (std::int32_t i = 0; i < nn; ++i) {
        Vec2 x = w[i] - g[i] * t;
        const double r = norm(x);
        if (r > 1.0) x = x / r;  // radial clipping cannot raise the energy
        cand[i] = x;
      }
      e_cand = total_energy(cand);
      if (e_cand < energy) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    gradient(cand, g_new);
    double sy = 0.0, yy = 0.0;
    for (std::int32_t i = 0; i < nn; ++i) {
      const Vec2 sv = cand[i] - w[i];
      const Vec2 yv = g_new[i] - g[i];
      sy += dot(sv, yv);
      yy += dot(yv, yv);
    }
    step = (sy > 0 && yy > 0) ? sy / yy : h * h;

    const double drop = energy - e_cand;
    w.values().swap(cand.values());
    energy = e_cand;
    g.swap(g_new);
    (void)drop;
    if (options.record_trace) {
      rep.trace.push_back({iter, energy, t, rep.guard_rejections});
    }
    window.push_back(energy);
    if (window.size() > 20) {
      window.erase(window.begin());
      if (window.front() - window.back() <
          options.gl_plateau_rel * std::max(1.0, energy)) {
        ++iter;
        break;
      }
    }
  }

  rep.final_energy = energy;
  rep.iterations = iter;
  {
    double g2 = 0.0;
    for (const Vec2& x : g) g2 += dot(x, x);
    rep.residual_norm = std::sqrt(g2);
  }

  // Jacobian atoms: the vortex core spreads its +-pi of Jacobian over a
  // radius of order eps, so single mesh cells never clear the threshold.
  // Greedy window clustering: around the strongest remaining cell, sum the
  // Jacobian over a (2*2.5 eps)-wide window; a window holding more than
  // pi/2 is an atom at the J-weighted centroid.
  const DefectMeasure jd = jacobian_density(w);
  DefectMeasure achieved(geometry);
  {
    std::vector<double> cell_j(lat.plaquette_count(), 0.0);
    for (std::size_t p = 0; p < lat.plaquette_count(); ++p) {
      cell_j[p] = (jd.density()[2 * p] + jd.density()[2 * p + 1]) * area;
    }
    const double window = 2.5 * epsilon;
    const long max_atoms = 2 * static_cast<long>(prescription.charges.size()) + 4;
    for (long round = 0; round < max_atoms; ++round) {
      std::size_t peak = 0;
      double peak_val = 0.0;
      for (std::size_t p = 0; p < cell_j.size(); ++p) {
        if (std::abs(cell_j[p]) > peak_val) {
          peak_val = std::abs(cell_j[p]);
          peak = p;
        }
      }
      if (peak_val == 0.0) break;
      const Vec2 c0 = lat.plaquette_center(static_cast<std::int32_t>(peak));
      double total = 0.0;
      Vec2 moment{0, 0};
      std::vector<std::size_t> members;
      for (std::size_t p = 0; p < cell_j.size(); ++p) {
        const Vec2 c = lat.plaquette_center(static_cast<std::int32_t>(p));
        if (std::max(std::abs(c.x - c0.x), std::abs(c.y - c0.y)) <= window) {
          total += cell_j[p];
          moment = moment + c * cell_j[p];
          members.push_back(p);
        }
      }
      if (std::abs(total) <= M_PI / 2) break;
      achieved.add_atom(moment / total, std::nearbyint(total / M_PI));
      for (std::size_t p : members) cell_j[p] = 0.0;
    }
  }
  rep.achieved = achieved;

  const DefectMeasure want = prescription_measure(prescription, geometry);
  std::size_t pos = 0, neg = 0, wpos = 0, wneg = 0;
  for (const DefectAtom& a : achieved.atoms()) (a.weight > 0 ? pos : neg) += 1;
  for (const DefectAtom& a : want.atoms()) (a.weight > 0 ? wpos : wneg) += 1;
  rep.success = (pos == wpos && neg == wneg);
  if (!rep.success) {
    rep.message = "jacobian atoms do not match the prescription";
  }
  if (!achieved.atoms().empty() || !want.atoms().empty()) {
    rep.constraint_flat_residual =
        flat_norm_atomic(achieved.minus(want), geometry).value;
  }
  sol.field = std::move(w);
  return sol;
}

}  // namespace defectlab
