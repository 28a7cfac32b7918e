#include "defectlab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace defectlab {

double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

namespace {

std::int64_t grid_key(std::int32_t ix, std::int32_t iy) {
  return (static_cast<std::int64_t>(iy) << 32) ^
         static_cast<std::int64_t>(static_cast<std::uint32_t>(ix));
}

}  // namespace

DomainGeometry DomainGeometry::unit_square() {
  DomainGeometry g;
  g.kind_ = DomainKind::UnitSquare;
  g.x0_ = 0;
  g.x1_ = 1;
  g.y0_ = 0;
  g.y1_ = 1;
  g.center_ = {0.5, 0.5};
  g.d_ = 0.5;
  return g;
}

DomainGeometry DomainGeometry::rectangle(double x0, double x1, double y0,
                                         double y1) {
  if (!(x0 < x1 && y0 < y1)) {
    throw std::invalid_argument("rectangle: empty extent");
  }
  DomainGeometry g;
  g.kind_ = DomainKind::Rectangle;
  g.x0_ = x0;
  g.x1_ = x1;
  g.y0_ = y0;
  g.y1_ = y1;
  g.center_ = {0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  g.d_ = 0.5 * std::min(x1 - x0, y1 - y0);
  return g;
}

DomainGeometry DomainGeometry::disk(Vec2 center, double radius) {
  if (!(radius > 0)) {
    throw std::invalid_argument("disk: radius must be positive");
  }
  DomainGeometry g;
  g.kind_ = DomainKind::Disk;
  g.radius_ = radius;
  g.center_ = center;
  g.d_ = radius;
  return g;
}

bool DomainGeometry::contains(const Vec2& p) const {
  if (kind_ == DomainKind::Disk) {
    const double dx = p.x - center_.x, dy = p.y - center_.y;
    return dx * dx + dy * dy < radius_ * radius_;
  }
  return p.x > x0_ && p.x < x1_ && p.y > y0_ && p.y < y1_;
}

bool DomainGeometry::contains_closed(const Vec2& p) const {
  if (kind_ == DomainKind::Disk) {
    const double dx = p.x - center_.x, dy = p.y - center_.y;
    return dx * dx + dy * dy <= radius_ * radius_;
  }
  return p.x >= x0_ && p.x <= x1_ && p.y >= y0_ && p.y <= y1_;
}

double DomainGeometry::boundary_distance(const Vec2& p) const {
  if (kind_ == DomainKind::Disk) {
    return radius_ - norm(p - center_);
  }
  const double mx = std::min(p.x - x0_, x1_ - p.x);
  const double my = std::min(p.y - y0_, y1_ - p.y);
  return std::min(mx, my);
}

DomainGeometry DomainGeometry::inset(double delta) const {
  if (delta < 0) throw std::invalid_argument("inset: delta must be >= 0");
  if (delta == 0) return *this;
  if (delta >= d_) {
    throw std::invalid_argument("inset: delta leaves an empty region");
  }
  if (kind_ == DomainKind::Disk) {
    return disk(center_, radius_ - delta);
  }
  return rectangle(x0_ + delta, x1_ - delta, y0_ + delta, y1_ - delta);
}

DomainGeometry DomainGeometry::translated(const Vec2& offset) const {
  if (kind_ == DomainKind::Disk) {
    return disk(center_ + offset, radius_);
  }
  DomainGeometry g = rectangle(x0_ + offset.x, x1_ + offset.x,
                               y0_ + offset.y, y1_ + offset.y);
  g.kind_ = kind_;
  return g;
}

void DomainGeometry::bounding_box(Vec2& lo, Vec2& hi) const {
  if (kind_ == DomainKind::Disk) {
    lo = {center_.x - radius_, center_.y - radius_};
    hi = {center_.x + radius_, center_.y + radius_};
  } else {
    lo = {x0_, y0_};
    hi = {x1_, y1_};
  }
}

std::vector<Vec2> DomainGeometry::boundary_samples(int n) const {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  if (kind_ == DomainKind::Disk) {
    for (int i = 0; i < n; ++i) {
      const double t = 2.0 * M_PI * i / n;
      pts.push_back({center_.x + radius_ * std::cos(t),
                     center_.y + radius_ * std::sin(t)});
    }
    return pts;
  }
  const int per_side = std::max(1, n / 4);
  for (int i = 0; i < per_side; ++i) {
    const double t = static_cast<double>(i) / per_side;
    pts.push_back({x0_ + t * (x1_ - x0_), y0_});
    pts.push_back({x1_, y0_ + t * (y1_ - y0_)});
    pts.push_back({x1_ - t * (x1_ - x0_), y1_});
    pts.push_back({x0_, y1_ - t * (y1_ - y0_)});
  }
  return pts;
}

double DomainGeometry::area() const {
  if (kind_ == DomainKind::Disk) return M_PI * radius_ * radius_;
  return (x1_ - x0_) * (y1_ - y0_);
}

std::string DomainGeometry::kind_name() const {
  switch (kind_) {
    case DomainKind::UnitSquare: return "unit-square";
    case DomainKind::Rectangle: return "rectangle";
    case DomainKind::Disk: return "disk";
  }
  return "?";
}

RegionPredicate inner_region(const DomainGeometry& geometry, double delta) {
  if (delta < 0) throw std::invalid_argument("inner_region: delta >= 0");
  return [geometry, delta](const Vec2& p) {
    return geometry.contains(p) && geometry.boundary_distance(p) > delta;
  };
}

double dilation_factor(const DomainGeometry& geometry, double delta_tilde) {
  const double d = geometry.star_distance();
  if (!(delta_tilde >= 0) || 2.0 * delta_tilde >= d) {
    throw std::invalid_argument("dilation_factor: requires 2*delta_tilde < d");
  }
  return d / (d - 2.0 * delta_tilde);
}

std::int32_t Lattice::site_at(std::int32_t ix, std::int32_t iy) const {
  const std::int32_t r = iy - iy_min_;
  if (r < 0 || r >= static_cast<std::int32_t>(rows_.size())) return -1;
  const Row& row = rows_[r];
  if (row.base < 0 || ix < row.ix_min || ix > row.ix_max) return -1;
  return row.base + (ix - row.ix_min);
}

std::int32_t Lattice::plaquette_at(std::int32_t ix, std::int32_t iy) const {
  const auto it = plaquette_index_.find(grid_key(ix, iy));
  return it == plaquette_index_.end() ? -1 : it->second;
}

Lattice build_lattice(const DomainGeometry& geometry, double epsilon,
                      SiteRule rule) {
  if (!(epsilon > 0)) {
    throw std::invalid_argument("build_lattice: epsilon must be positive");
  }
  Lattice lat;
  lat.geometry_ = geometry;
  lat.epsilon_ = epsilon;

  const bool closed = (rule == SiteRule::ClosedCover);
  auto member = [&](std::int32_t ix, std::int32_t iy) {
    const Vec2 p{ix * epsilon, iy * epsilon};
    return closed ? geometry.contains_closed(p) : geometry.contains(p);
  };

  Vec2 lo, hi;
  geometry.bounding_box(lo, hi);
  const auto iy_lo = static_cast<std::int32_t>(std::floor(lo.y / epsilon)) - 1;
  const auto iy_hi = static_cast<std::int32_t>(std::ceil(hi.y / epsilon)) + 1;
  const auto ix_lo = static_cast<std::int32_t>(std::floor(lo.x / epsilon)) - 1;
  const auto ix_hi = static_cast<std::int32_t>(std::ceil(hi.x / epsilon)) + 1;

  // Row-contiguous enumeration, ordered by (y, x). The supported domains are
  // convex, so each row of sites is a single interval.
  lat.iy_min_ = iy_lo;
  for (std::int32_t iy = iy_lo; iy <= iy_hi; ++iy) {
    Lattice::Row row{iy, 0, -1, -1};
    bool in_run = false;
    for (std::int32_t ix = ix_lo; ix <= ix_hi; ++ix) {
      if (member(ix, iy)) {
        if (!in_run) {
          row.ix_min = ix;
          row.base = static_cast<std::int32_t>(lat.sites_.size());
          in_run = true;
        } else if (ix != row.ix_max + 1) {
          throw std::logic_error("build_lattice: non-contiguous site row");
        }
        row.ix_max = ix;
        lat.sites_.push_back({ix, iy});
      }
    }
    lat.rows_.push_back(row);
  }

  const auto n_sites = static_cast<std::int32_t>(lat.sites_.size());
  lat.east_bond_.assign(n_sites, -1);
  lat.north_bond_.assign(n_sites, -1);
  lat.incidence_.resize(n_sites);

  for (std::int32_t s = 0; s < n_sites; ++s) {
    const GridIndex g = lat.sites_[s];
    const std::int32_t east = lat.site_at(g.ix + 1, g.iy);
    if (east >= 0) {
      const auto b = static_cast<std::int32_t>(lat.bonds_.size());
      lat.bonds_.push_back({s, east, true});
      lat.east_bond_[s] = b;
      lat.incidence_[s].push_back({b, east, 1.0});
      lat.incidence_[east].push_back({b, s, -1.0});
    }
    const std::int32_t north = lat.site_at(g.ix, g.iy + 1);
    if (north >= 0) {
      const auto b = static_cast<std::int32_t>(lat.bonds_.size());
      lat.bonds_.push_back({s, north, false});
      lat.north_bond_[s] = b;
      lat.incidence_[s].push_back({b, north, 1.0});
      lat.incidence_[north].push_back({b, s, -1.0});
    }
  }

  // Cells i+[0,eps]^2 contained in the domain. For rectangles and disks the
  // containment test is exact: the farthest point of the closed cell from the
  // boundary-defining data is a corner.
  auto cell_inside = [&](std::int32_t ix, std::int32_t iy) {
    for (int dy = 0; dy <= 1; ++dy) {
      for (int dx = 0; dx <= 1; ++dx) {
        const Vec2 p{(ix + dx) * epsilon, (iy + dy) * epsilon};
        if (!(closed ? geometry.contains_closed(p) : geometry.contains(p))) {
          return false;
        }
      }
    }
    return true;
  };

  for (std::int32_t s = 0; s < n_sites; ++s) {
    const GridIndex g = lat.sites_[s];
    if (!cell_inside(g.ix, g.iy)) continue;
    Plaquette q;
    q.anchor = s;
    q.s00 = s;
    q.s10 = lat.site_at(g.ix + 1, g.iy);
    q.s01 = lat.site_at(g.ix, g.iy + 1);
    q.s11 = lat.site_at(g.ix + 1, g.iy + 1);
    if (q.s10 < 0 || q.s01 < 0 || q.s11 < 0) {
      throw std::logic_error("build_lattice: cell corner is not a site");
    }
    q.bottom = lat.east_bond_[q.s00];
    q.top = lat.east_bond_[q.s01];
    q.left = lat.north_bond_[q.s00];
    q.right = lat.north_bond_[q.s10];
    if (q.bottom < 0 || q.top < 0 || q.left < 0 || q.right < 0) {
      throw std::logic_error("build_lattice: cell bond missing");
    }
    const auto p = static_cast<std::int32_t>(lat.plaquettes_.size());
    lat.plaquettes_.push_back(q);
    lat.plaquette_index_.emplace(grid_key(g.ix, g.iy), p);
  }

  return lat;
}

Triangulation build_triangulation(const Lattice& lattice) {
  if (lattice.plaquette_count() == 0) {
    throw std::invalid_argument("build_triangulation: lattice has no cells");
  }
  Triangulation tri;
  tri.lattice_ = &lattice;
  tri.mesh_ = lattice.epsilon();
  tri.node_of_site_.assign(lattice.site_count(), -1);

  auto touch = [&](std::int32_t s) {
    if (tri.node_of_site_[s] < 0) {
      tri.node_of_site_[s] = static_cast<std::int32_t>(tri.node_site_.size());
      tri.node_site_.push_back(s);
    }
  };

  std::int32_t gx_lo = INT32_MAX, gx_hi = INT32_MIN;
  std::int32_t gy_lo = INT32_MAX, gy_hi = INT32_MIN;
  for (const Plaquette& q : lattice.plaquettes()) {
    touch(q.s00);
    touch(q.s10);
    touch(q.s01);
    touch(q.s11);
    const GridIndex g = lattice.site_grid(q.anchor);
    gx_lo = std::min(gx_lo, g.ix);
    gx_hi = std::max(gx_hi, g.ix);
    gy_lo = std::min(gy_lo, g.iy);
    gy_hi = std::max(gy_hi, g.iy);
  }

  tri.gx_min_ = gx_lo;
  tri.gy_min_ = gy_lo;
  tri.gx_count_ = gx_hi - gx_lo + 1;
  tri.gy_count_ = gy_hi - gy_lo + 1;
  tri.cell_table_.assign(
      static_cast<std::size_t>(tri.gx_count_) * tri.gy_count_, -1);

  tri.triangles_.reserve(2 * lattice.plaquette_count());
  for (std::size_t p = 0; p < lattice.plaquette_count(); ++p) {
    const Plaquette& q = lattice.plaquettes()[p];
    const GridIndex g = lattice.site_grid(q.anchor);
    tri.cell_table_[static_cast<std::size_t>(g.iy - gy_lo) * tri.gx_count_ +
                    (g.ix - gx_lo)] = static_cast<std::int32_t>(p);
    // T^-: below the SW-NE diagonal, T^+: above; both counterclockwise.
    tri.triangles_.push_back({tri.node_of_site_[q.s00], tri.node_of_site_[q.s10],
                              tri.node_of_site_[q.s11],
                              static_cast<std::int32_t>(p), false});
    tri.triangles_.push_back({tri.node_of_site_[q.s00], tri.node_of_site_[q.s11],
                              tri.node_of_site_[q.s01],
                              static_cast<std::int32_t>(p), true});
  }
  return tri;
}

std::int32_t Triangulation::locate(const Vec2& p) const {
  const double eps = mesh_;
  const auto fx = static_cast<std::int32_t>(std::floor(p.x / eps));
  const auto fy = static_cast<std::int32_t>(std::floor(p.y / eps));
  // A point on a grid line belongs to several closed cells; prefer the one
  // it indexes into, then look one cell down/left.
  for (const auto& [cx, cy] : {std::pair{fx, fy}, std::pair{fx - 1, fy},
                               std::pair{fx, fy - 1}, std::pair{fx - 1, fy - 1}}) {
    const std::int32_t gx = cx - gx_min_, gy = cy - gy_min_;
    if (gx < 0 || gy < 0 || gx >= gx_count_ || gy >= gy_count_) continue;
    const std::int32_t cell =
        cell_table_[static_cast<std::size_t>(gy) * gx_count_ + gx];
    if (cell < 0) continue;
    const double lx = p.x - cx * eps, ly = p.y - cy * eps;
    if (lx < -1e-12 * eps || lx > (1.0 + 1e-12) * eps || ly < -1e-12 * eps ||
        ly > (1.0 + 1e-12) * eps) {
      continue;
    }
    return 2 * cell + (ly > lx ? 1 : 0);
  }
  return -1;
}

std::int32_t Triangulation::locate_clamped(const Vec2& p) const {
  const std::int32_t direct = locate(p);
  if (direct >= 0) return direct;
  const double eps = mesh_;
  auto cx = static_cast<std::int32_t>(std::floor(p.x / eps)) - gx_min_;
  auto cy = static_cast<std::int32_t>(std::floor(p.y / eps)) - gy_min_;
  cx = std::clamp(cx, 0, gx_count_ - 1);
  cy = std::clamp(cy, 0, gy_count_ - 1);
  const std::int32_t max_r = std::max(gx_count_, gy_count_);
  for (std::int32_t r = 0; r <= max_r; ++r) {
    for (std::int32_t dy = -r; dy <= r; ++dy) {
      for (std::int32_t dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        const std::int32_t gx = cx + dx, gy = cy + dy;
        if (gx < 0 || gy < 0 || gx >= gx_count_ || gy >= gy_count_) continue;
        const std::int32_t cell =
            cell_table_[static_cast<std::size_t>(gy) * gx_count_ + gx];
        if (cell < 0) continue;
        const GridIndex g =
            lattice_->site_grid(lattice_->plaquettes()[cell].anchor);
        const double lx = p.x - g.ix * eps, ly = p.y - g.iy * eps;
        return 2 * cell + (ly > lx ? 1 : 0);
      }
    }
  }
  return -1;
}

}  // namespace defectlab
