#include "defectlab/energies.hpp"

#include <cmath>

#include "defectlab/defects.hpp"

namespace defectlab {

const char* model_name(Model m) {
  switch (m) {
    case Model::GL: return "gl";
    case Model::XY: return "xy";
    case Model::SD: return "sd";
  }
  return "?";
}

EnergyBreakdown xy_energy(const SpinField& v, const RegionPredicate* region) {
  const Lattice& lat = v.lattice();
  EnergyBreakdown out;
  out.contributions.resize(lat.bond_count(), 0.0);
  NeumaierSum acc;
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    const Bond& bond = lat.bonds()[b];
    if (region && !((*region)(lat.site_position(bond.a)) &&
                    (*region)(lat.site_position(bond.b)))) {
      continue;
    }
    const Vec2 dv = v[bond.b] - v[bond.a];
    const double e = 0.5 * (dv.x * dv.x + dv.y * dv.y);
    out.contributions[b] = e;
    acc.add(e);
  }
  out.total = acc.value();
  return out;
}

EnergyBreakdown sd_energy(const DisplacementField& u,
                          const RegionPredicate* region) {
  const Lattice& lat = u.lattice();
  EnergyBreakdown out;
  out.contributions.resize(lat.bond_count(), 0.0);
  NeumaierSum acc;
  for (std::size_t b = 0; b < lat.bond_count(); ++b) {
    const Bond& bond = lat.bonds()[b];
    if (region && !((*region)(lat.site_position(bond.a)) &&
                    (*region)(lat.site_position(bond.b)))) {
      continue;
    }
    const double du = u[bond.b] - u[bond.a];
    const double r = du - project_to_int(du);
    const double e = 0.5 * r * r;
    out.contributions[b] = e;
    acc.add(e);
  }
  out.total = acc.value();
  return out;
}

EnergyBreakdown gl_energy(const ContinuumField& w, double epsilon, double s,
                          const RegionPredicate* region) {
  if (!(s > 0) || !(epsilon > 0)) {
    throw std::invalid_argument("gl_energy: requires s > 0 and epsilon > 0");
  }
  const Triangulation& tri = w.triangulation();
  const double area = tri.triangle_area();
  const double pot_coeff = s / (epsilon * epsilon);

  EnergyBreakdown out;
  out.contributions.resize(tri.triangle_count(), 0.0);
  NeumaierSum grad_acc, pot_acc;
  for (std::size_t t = 0; t < tri.triangle_count(); ++t) {
    const Triangle& T = tri.triangles()[t];
    if (region) {
      const Vec2 c = (tri.node_position(T.n0) + tri.node_position(T.n1) +
                      tri.node_position(T.n2)) /
                     3.0;
      if (!(*region)(c)) continue;
    }
    const ContinuumField::Gradient g =
        w.triangle_gradient(static_cast<std::int32_t>(t));
    const double g2 = dot(g.gx, g.gx) + dot(g.gy, g.gy);
    const double e_grad = 0.5 * g2 * area;

    double wsum = 0.0;
    for (const std::int32_t n : {T.n0, T.n1, T.n2}) {
      const double m = 1.0 - norm(w[n]);
      wsum += m * m;
    }
    const double e_pot = pot_coeff * (area / 3.0) * wsum;

    out.contributions[t] = e_grad + e_pot;
    grad_acc.add(e_grad);
    pot_acc.add(e_pot);
  }
  out.gradient = grad_acc.value();
  out.potential = pot_acc.value();
  out.total = out.gradient + out.potential;
  return out;
}

double scaled_energy(Model model, double raw, double epsilon,
                     const ScalingRegime& regime) {
  if (!(epsilon > 0) || epsilon >= 1.0) {
    throw std::invalid_argument("scaled_energy: requires 0 < epsilon < 1");
  }
  const double logeps = std::abs(std::log(epsilon));
  const double denom = std::pow(logeps, regime.h);
  const double pre = (model == Model::SD) ? 4.0 * M_PI * M_PI : 1.0;
  return pre * raw / denom;
}

double gl_rescale_map(double epsilon, double s1, double s2) {
  if (!(s1 > 0) || !(s2 > 0) || !(epsilon > 0)) {
    throw std::invalid_argument("gl_rescale_map: positive arguments required");
  }
  return epsilon * std::sqrt(s2 / s1);
}

}  // namespace defectlab
