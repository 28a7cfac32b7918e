#pragma once

#include <optional>
#include <vector>

#include "defectlab/fields.hpp"

namespace defectlab {

enum class Model { GL, XY, SD };

const char* model_name(Model m);

/// Energetic regime |log eps|^h.
struct ScalingRegime {
  double h = 1.0;
  explicit ScalingRegime(double h_ = 1.0) : h(h_) {
    if (!(h >= 1.0)) throw std::invalid_argument("ScalingRegime: h >= 1");
  }
};

/// Kahan-Neumaier compensated accumulator; keeps reductions deterministic
/// to ~1e-16 relative in fixed evaluation order.
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct EnergyBreakdown {
  double total = 0.0;
  double gradient = 0.0;   // GL only
  double potential = 0.0;  // GL only
  std::vector<double> contributions;  // per bond (XY/SD) or per triangle (GL)
};

/// XY_eps(v) = (1/2) sum over bonds |v(i)-v(j)|^2, restricted to bonds with
/// both endpoints in `region` when given.
EnergyBreakdown xy_energy(const SpinField& v,
                          const RegionPredicate* region = nullptr);

/// SD_eps(u) = (1/2) sum over bonds dist^2(u(i)-u(j), Z).
EnergyBreakdown sd_energy(const DisplacementField& u,
                          const RegionPredicate* region = nullptr);

/// GL^s_eps(w) = (1/2) int |grad w|^2 + (s/eps^2) int W(w), W(x) = (1-|x|)^2.
/// Gradient part by exact per-triangle quadrature, potential by nodal mass
/// lumping. Triangles participate iff their centroid is in `region`.
EnergyBreakdown gl_energy(const ContinuumField& w, double epsilon,
                          double s = 1.0,
                          const RegionPredicate* region = nullptr);

/// GL/XY: raw/|log eps|^h; SD: 4*pi^2*raw/|log eps|^h. Natural log; eps < 1.
double scaled_energy(Model model, double raw, double epsilon,
                     const ScalingRegime& regime);

/// delta = eps*sqrt(s2/s1): the mesh rescaling under which GL^{s1}_eps and
/// GL^{s2}_delta share the same potential coefficient.
double gl_rescale_map(double epsilon, double s1, double s2);

}  // namespace defectlab
