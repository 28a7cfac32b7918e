#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace defectlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double t) const { return {x * t, y * t}; }
  Vec2 operator/(double t) const { return {x / t, y / t}; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
double norm(const Vec2& a);

enum class DomainKind { UnitSquare, Rectangle, Disk };

/// Open, bounded, star-shaped domain: axis-aligned rectangle or disk.
/// `center` is the star center; `d` the distance from it to the boundary.
class DomainGeometry {
 public:
  static DomainGeometry unit_square();
  static DomainGeometry rectangle(double x0, double x1, double y0, double y1);
  static DomainGeometry disk(Vec2 center, double radius);

  DomainKind kind() const { return kind_; }
  Vec2 center() const { return center_; }
  double star_distance() const { return d_; }

  /// Exact open-set membership.
  bool contains(const Vec2& p) const;
  /// Membership in the closure.
  bool contains_closed(const Vec2& p) const;
  /// Signed Euclidean distance to the boundary (positive inside).
  double boundary_distance(const Vec2& p) const;

  /// The inner region I_delta: points at boundary distance > delta.
  /// Stays within the supported kinds (shrunk rectangle / disk).
  DomainGeometry inset(double delta) const;

  /// Axis-aligned bounding box.
  void bounding_box(Vec2& lo, Vec2& hi) const;

  /// The same domain translated by `offset`.
  DomainGeometry translated(const Vec2& offset) const;

  /// n points on the boundary, for sampled inclusion checks.
  std::vector<Vec2> boundary_samples(int n) const;

  double area() const;

  // Rectangle accessors (valid for UnitSquare/Rectangle).
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }
  // Disk accessor.
  double radius() const { return radius_; }

  std::string kind_name() const;

 private:
  DomainKind kind_ = DomainKind::UnitSquare;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;  // rectangle data
  double radius_ = 0;                          // disk data
  Vec2 center_;
  double d_ = 0;
};

using RegionPredicate = std::function<bool(const Vec2&)>;

/// I_delta(Omega) as a membership predicate; I_0 = Omega.
RegionPredicate inner_region(const DomainGeometry& geometry, double delta);

/// lambda = d/(d - 2*delta_tilde); requires 2*delta_tilde < d.
double dilation_factor(const DomainGeometry& geometry, double delta_tilde);

/// Integer grid coordinates; site position = (ix*eps, iy*eps).
struct GridIndex {
  std::int32_t ix = 0;
  std::int32_t iy = 0;
  bool operator==(const GridIndex& o) const { return ix == o.ix && iy == o.iy; }
};

/// Nearest-neighbor bond (a,b) with a <= b componentwise.
struct Bond {
  std::int32_t a = -1;
  std::int32_t b = -1;
  bool horizontal = true;
};

/// Cell i+[0,eps]^2 anchored at site `anchor`. Corner and bond ordinals are
/// cached for the curl stencil: corners s00=SW, s10=SE, s01=NW, s11=NE;
/// bonds bottom=(s00,s10), right=(s10,s11), top=(s01,s11), left=(s00,s01).
struct Plaquette {
  std::int32_t anchor = -1;
  std::int32_t s00 = -1, s10 = -1, s01 = -1, s11 = -1;
  std::int32_t bottom = -1, right = -1, top = -1, left = -1;
};

/// Which points become sites: the open models use eps*Z^2 intersected with
/// the open domain; the continuum (FEM) meshes use the closure so that e.g.
/// the unit square is covered exactly.
enum class SiteRule { OpenInterior, ClosedCover };

class Lattice {
 public:
  double epsilon() const { return epsilon_; }
  const DomainGeometry& geometry() const { return geometry_; }

  std::size_t site_count() const { return sites_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  std::size_t plaquette_count() const { return plaquettes_.size(); }

  const std::vector<GridIndex>& sites() const { return sites_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<Plaquette>& plaquettes() const { return plaquettes_; }

  Vec2 site_position(std::int32_t s) const {
    return {sites_[s].ix * epsilon_, sites_[s].iy * epsilon_};
  }
  GridIndex site_grid(std::int32_t s) const { return sites_[s]; }

  /// Ordinal of the site at grid coordinates, or -1.
  std::int32_t site_at(std::int32_t ix, std::int32_t iy) const;
  /// Ordinal of the plaquette anchored at grid coordinates, or -1.
  std::int32_t plaquette_at(std::int32_t ix, std::int32_t iy) const;

  /// East/north bond ordinal from a site, or -1.
  std::int32_t east_bond(std::int32_t s) const { return east_bond_[s]; }
  std::int32_t north_bond(std::int32_t s) const { return north_bond_[s]; }

  Vec2 plaquette_center(std::int32_t p) const {
    const GridIndex g = sites_[plaquettes_[p].anchor];
    return {(g.ix + 0.5) * epsilon_, (g.iy + 0.5) * epsilon_};
  }

  /// Bonds incident to a site, as (bond ordinal, other site, +1 if the site
  /// is the bond tail a / -1 if the head b).
  struct Incidence {
    std::int32_t bond;
    std::int32_t other;
    double sign;
  };
  const std::vector<Incidence>& incident(std::int32_t s) const {
    return incidence_[s];
  }

  friend Lattice build_lattice(const DomainGeometry&, double, SiteRule);

 private:
  DomainGeometry geometry_;
  double epsilon_ = 0;
  std::vector<GridIndex> sites_;
  std::vector<Bond> bonds_;
  std::vector<Plaquette> plaquettes_;
  std::vector<std::int32_t> east_bond_, north_bond_;
  std::vector<std::vector<Incidence>> incidence_;

  struct Row {
    std::int32_t iy, ix_min, ix_max;
    std::int32_t base;  // ordinal of (ix_min, iy)
  };
  std::vector<Row> rows_;
  std::int32_t iy_min_ = 0;

  std::unordered_map<std::int64_t, std::int32_t> plaquette_index_;
};

/// Enumerates eps*Z^2 sites in the domain, nearest-neighbor bonds and cells.
/// Ordering is lexicographic by (y, x) so downstream sums are reproducible.
/// Degenerate lattices (no bonds/plaquettes) are representable; callers that
/// need cells must check plaquette_count().
Lattice build_lattice(const DomainGeometry& geometry, double epsilon,
                      SiteRule rule = SiteRule::OpenInterior);

struct Triangle {
  std::int32_t n0 = -1, n1 = -1, n2 = -1;  // node ordinals, positively oriented
  std::int32_t plaquette = -1;
  bool upper = false;  // T^+ (above the SW-NE diagonal) vs T^- (below)
};

/// Conforming triangulation of the plaquette union: each cell split along its
/// SW-NE diagonal into T^-(i) and T^+(i), both counterclockwise.
class Triangulation {
 public:
  double mesh_size() const { return mesh_; }
  const Lattice* lattice() const { return lattice_; }

  std::size_t node_count() const { return node_site_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  const std::vector<Triangle>& triangles() const { return triangles_; }
  Vec2 node_position(std::int32_t n) const {
    return lattice_->site_position(node_site_[n]);
  }
  std::int32_t node_site(std::int32_t n) const { return node_site_[n]; }
  /// Node ordinal of a lattice site, or -1 if the site touches no cell.
  std::int32_t node_of_site(std::int32_t s) const { return node_of_site_[s]; }

  double triangle_area() const { return 0.5 * mesh_ * mesh_; }

  /// Triangle containing p (ties to the lower triangle), or -1 outside the
  /// covered region.
  std::int32_t locate(const Vec2& p) const;
  /// Nearest covered triangle to p; implements the constant-along-normal
  /// extension used when a field must be read slightly outside its mesh.
  std::int32_t locate_clamped(const Vec2& p) const;

  friend Triangulation build_triangulation(const Lattice& lattice);

 private:
  const Lattice* lattice_ = nullptr;
  double mesh_ = 0;
  std::vector<std::int32_t> node_site_;
  std::vector<std::int32_t> node_of_site_;
  std::vector<Triangle> triangles_;
  // row-structured cell lookup: plaquette ordinal by anchor grid index
  std::int32_t gx_min_ = 0, gy_min_ = 0, gx_count_ = 0, gy_count_ = 0;
  std::vector<std::int32_t> cell_table_;  // row-major, -1 for missing
};

/// Requires at least one plaquette.
Triangulation build_triangulation(const Lattice& lattice);

}  // namespace defectlab
