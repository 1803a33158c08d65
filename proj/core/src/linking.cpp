#include "tubelab/linking.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "tubelab/error.hpp"

namespace tubelab {

namespace {

// Signed solid angle of the spherical triangle (u1, u2, u3), unit inputs.
// Positive when the triangle is traversed counterclockwise seen from
// outside the sphere.  Stable for small triangles, which dominate here.
real tri_solid_angle(const Vec3& u1, const Vec3& u2, const Vec3& u3) {
  const real num = dot(u1, cross(u2, u3));
  const real den = 1 + dot(u1, u2) + dot(u2, u3) + dot(u3, u1);
  return 2 * std::atan2(num, den);
}

}  // namespace

int linking_gauss(const Polyline& a, const Polyline& b) {
  const int m = a.size();
  const int n = b.size();
  // Directions from one vertex of a to every vertex of b.  Only two
  // consecutive rows are live at a time, so memory stays O(n).
  std::vector<Vec3> row0(static_cast<std::size_t>(n));
  std::vector<Vec3> row1(static_cast<std::size_t>(n));
  const auto fill_row = [&](const Vec3& av, std::vector<Vec3>& row) {
    for (int j = 0; j < n; ++j) {
      const Vec3 d = b.vertex(j) - av;
      const real len = norm(d);
      if (!(len > 0))
        throw Error(errc::infeasible_geometry, "curves share a point");
      row[static_cast<std::size_t>(j)] = d / len;
    }
  };
  fill_row(a.vertex(0), row0);
  real omega = 0;
  for (int i = 0; i < m; ++i) {
    fill_row(a.vertex(i + 1), row1);
    for (int j = 0; j < n; ++j) {
      // Image of the parameter rectangle [i,i+1]x[j,j+1]: a geodesic
      // quadrilateral, corners in counterclockwise parameter order.
      const Vec3& u00 = row0[static_cast<std::size_t>(j)];
      const Vec3& u10 = row1[static_cast<std::size_t>(j)];
      const Vec3& u11 = row1[static_cast<std::size_t>((j + 1) % n)];
      const Vec3& u01 = row0[static_cast<std::size_t>((j + 1) % n)];
      omega += tri_solid_angle(u00, u10, u11) + tri_solid_angle(u00, u11, u01);
    }
    row0.swap(row1);
  }
  const real lk = omega / (4 * kPi);
  const long long rounded = std::llround(lk);
  if (std::fabs(lk - static_cast<real>(rounded)) > 1e-6L)
    throw Error(errc::non_transverse, "linking sum far from an integer");
  return static_cast<int>(rounded);
}

namespace {

struct Flat {
  real u = 0, v = 0;  // coordinates in the projection plane
  real h = 0;         // height along the view direction
};

real cross2(real ux, real uy, real vx, real vy) { return ux * vy - uy * vx; }

std::vector<Flat> project_all(const Polyline& p, const Vec3& e1,
                              const Vec3& e2, const Vec3& d) {
  std::vector<Flat> out(static_cast<std::size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) {
    const Vec3& x = p.vertex(i);
    out[static_cast<std::size_t>(i)] = {dot(x, e1), dot(x, e2), dot(x, d)};
  }
  return out;
}

// Sum of crossing signs between the projections of a and b, or nullopt when
// any crossing decision is too close to roundoff to trust.  All bands are
// sized by the error of the quantity they guard, not by the coordinate
// scale: curves may pass each other many orders of magnitude closer than
// their own diameter and still count reliably.
std::optional<int> crossing_sum(const Polyline& a, const Polyline& b,
                                const Vec3& d) {
  const Vec3 e1 = any_orthogonal(d);
  const Vec3 e2 = cross(d, e1);  // right-handed: e1 x e2 == d
  const std::vector<Flat> fa = project_all(a, e1, e2, d);
  const std::vector<Flat> fb = project_all(b, e1, e2, d);
  real scale = 0;
  for (const Flat& f : fa)
    scale = std::max({scale, std::fabs(f.u), std::fabs(f.v), std::fabs(f.h)});
  for (const Flat& f : fb)
    scale = std::max({scale, std::fabs(f.u), std::fabs(f.v), std::fabs(f.h)});
  // Projected coordinates carry absolute error ~ eps * scale; these bands
  // sit a few decades above that and far below any honest feature.
  const real line_band = 1e-14L * scale;   // endpoint-on-line calls
  const real height_band = 1e-16L * scale; // over/under calls
  const real param_band = 1e-9L;

  const int m = a.size();
  const int n = b.size();
  int sum = 0;
  for (int i = 0; i < m; ++i) {
    const Flat& a0 = fa[static_cast<std::size_t>(i)];
    const Flat& a1 = fa[static_cast<std::size_t>((i + 1) % m)];
    const real aux = a1.u - a0.u;
    const real auy = a1.v - a0.v;
    const real la = std::hypot(aux, auy);
    if (la <= 1e-11L * scale) return std::nullopt;  // edge seen end-on
    for (int j = 0; j < n; ++j) {
      const Flat& b0 = fb[static_cast<std::size_t>(j)];
      const Flat& b1 = fb[static_cast<std::size_t>((j + 1) % n)];
      const real bux = b1.u - b0.u;
      const real buy = b1.v - b0.v;
      const real lb = std::hypot(bux, buy);
      if (lb <= 1e-11L * scale) return std::nullopt;
      // Signed distances of b's endpoints from the line through edge a.
      // A crossing of that line needs a sign change; the straddle test is
      // exact no matter how shallow the angle between the edges is.
      const real d0 =
          cross2(aux, auy, b0.u - a0.u, b0.v - a0.v) / la;
      const real d1 =
          cross2(aux, auy, b1.u - a0.u, b1.v - a0.v) / la;
      if (std::fabs(d0) <= line_band || std::fabs(d1) <= line_band) {
        // Endpoint of b on the line: ambiguous only near a's span.
        const real p0 = ((b0.u - a0.u) * aux + (b0.v - a0.v) * auy) / (la * la);
        const real p1 = ((b1.u - a0.u) * aux + (b1.v - a0.v) * auy) / (la * la);
        if (std::max(p0, p1) > -param_band &&
            std::min(p0, p1) < 1 + param_band)
          return std::nullopt;
        continue;
      }
      if ((d0 > 0) == (d1 > 0)) continue;  // b stays on one side
      // Opposite strict signs: |d0 - d1| = |d0| + |d1|, so t is computed
      // from a non-cancelling quotient.
      const real t = d0 / (d0 - d1);
      const real xu = b0.u + bux * t - a0.u;
      const real xv = b0.v + buy * t - a0.v;
      const real s = (xu * aux + xv * auy) / (la * la);
      // s inherits absolute error ~ eps * scale / la; widen its vertex
      // band accordingly when the edge is much shorter than the scene.
      const real s_band = std::max(param_band, 1e-15L * scale / la);
      if (s < -s_band || s > 1 + s_band) continue;
      if (s < s_band || s > 1 - s_band || t < param_band ||
          t > 1 - param_band)
        return std::nullopt;  // crossing at a vertex shadow
      const real ha = a0.h + s * (a1.h - a0.h);
      const real hb = b0.h + t * (b1.h - b0.h);
      if (std::fabs(ha - hb) <= height_band) return std::nullopt;
      // Positive crossing: the under direction points to the left of the
      // over direction, seen from the viewer on the +d side.  d1 - d0 has
      // the sign of the edge pair's cross product, computed without
      // cancellation thanks to the strict straddle.
      sum += ((ha > hb) == (d1 > d0)) ? 1 : -1;
    }
  }
  return sum;
}

Vec3 random_unit(Rng& rng) {
  for (;;) {
    const Vec3 v{rng.uniform_sym(), rng.uniform_sym(), rng.uniform_sym()};
    const real n2 = norm2(v);
    if (n2 > 1e-4L && n2 <= 1) return v / std::sqrt(n2);
  }
}

}  // namespace

int linking_projection(const Polyline& a, const Polyline& b, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    const Vec3 d = random_unit(rng);
    const std::optional<int> sum = crossing_sum(a, b, d);
    if (!sum) continue;
    if (*sum % 2 != 0) continue;  // lost a crossing partner: bad direction
    return *sum / 2;
  }
  throw Error(errc::non_transverse, "no generic projection direction found");
}

int linking_number(const Polyline& a, const Polyline& b, std::uint64_t seed) {
  const int gauss = linking_gauss(a, b);
  Rng rng(seed);
  const int proj = linking_projection(a, b, rng);
  if (gauss != proj)
    throw Error(errc::non_transverse, "linking routes disagree");
  return gauss;
}

namespace {

// One transversality attempt against a fixed disk.  nullopt means some
// crossing decision fell inside the ambiguity band.
std::optional<MeridianHits> try_disk(const Polyline& c, const Disk& d) {
  const int n = c.size();
  const real band = 1e-11L * d.radius;
  // A vertex on the disk plane only matters if it is radially near the
  // disk; a touch far outside the rim cannot change counts inside it.
  const real relevant = d.radius * (1 + 1e-6L);
  const auto in_plane_dist = [&](const Vec3& x) {
    Vec3 r = x - d.center;
    r -= d.normal * dot(r, d.normal);
    return norm(r);
  };
  std::vector<real> h(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    h[static_cast<std::size_t>(i)] = dot(c.vertex(i) - d.center, d.normal);
    if (std::fabs(h[static_cast<std::size_t>(i)]) <= band &&
        in_plane_dist(c.vertex(i)) <= relevant)
      return std::nullopt;
  }
  MeridianHits out;
  for (int i = 0; i < n; ++i) {
    const real hp = h[static_cast<std::size_t>(i)];
    const real hq = h[static_cast<std::size_t>((i + 1) % n)];
    if (std::fabs(hp - hq) <= band) {
      // Segment parallel to the plane; degenerate only when near the disk.
      if (std::fabs(hp) <= band) {
        const real gap = dist_point_segment(d.center, c.vertex(i),
                                            c.vertex(i + 1));
        if (gap <= relevant) return std::nullopt;
      }
      continue;
    }
    if ((hp > 0) == (hq > 0)) continue;
    const real alpha = hp / (hp - hq);
    const Vec3 x = c.vertex(i) + (c.vertex(i + 1) - c.vertex(i)) * alpha;
    const real rho = in_plane_dist(x);
    if (std::fabs(rho - d.radius) <= band) return std::nullopt;
    if (rho > d.radius) continue;
    DiskCrossing cr;
    cr.param = c.wrap(c.cum_length(i) + alpha * c.segment_length(i));
    cr.sign = hq > hp ? 1 : -1;
    out.crossings.push_back(cr);
  }
  std::sort(out.crossings.begin(), out.crossings.end(),
            [](const DiskCrossing& l, const DiskCrossing& r) {
              return l.param < r.param;
            });
  for (const DiskCrossing& cr : out.crossings) out.signed_total += cr.sign;
  out.unsigned_total = static_cast<int>(out.crossings.size());
  return out;
}

}  // namespace

MeridianHits meridian_intersections(const Polyline& curve, const Disk& disk) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Disk d = disk;
    if (attempt > 0) {
      // Deterministic jitter stream, fresh per attempt.
      Rng r = Rng(0x6d65726964ULL).fork(static_cast<std::uint64_t>(attempt));
      const real step = 1e-9L * disk.radius;
      d.center += Vec3{r.uniform_sym(), r.uniform_sym(), r.uniform_sym()} *
                  step;
      const Vec3 tilt{r.uniform_sym(), r.uniform_sym(), r.uniform_sym()};
      d.normal = normalized(d.normal + tilt * 1e-9L);
    }
    const std::optional<MeridianHits> res = try_disk(curve, d);
    if (res) return *res;
  }
  throw Error(errc::non_transverse, "curve grazes the disk");
}

namespace {

// One transversality attempt of the curve against the shifted surface.
// nullopt when any hit decision falls inside an ambiguity band.
std::optional<MeridianHits> try_surface(const Polyline& c,
                                        const std::vector<Triangle>& tris,
                                        const Vec3& shift, real scale) {
  const int n = c.size();
  const real band = 1e-11L * scale;
  const real eb = 1e-9L;  // edge band, barycentric units
  MeridianHits out;
  for (int i = 0; i < n; ++i) {
    const Vec3 p = c.vertex(i);
    const Vec3 q = c.vertex(i + 1);
    for (const Triangle& t : tris) {
      const Vec3 a = t.a + shift;
      const Vec3 b = t.b + shift;
      const Vec3 cc = t.c + shift;
      const Vec3 nr = cross(b - a, cc - a);
      const real nn = norm(nr);
      if (nn <= 0) continue;  // zero-area sliver cannot be pierced
      const Vec3 un = nr / nn;
      const real hp = dot(p - a, un);
      const real hq = dot(q - a, un);
      if (std::fabs(hp) <= band || std::fabs(hq) <= band) {
        // Endpoint grazing the plane; ambiguous only near this triangle.
        const Vec3 centroid = (a + b + cc) / 3;
        const real size = std::max({norm(a - b), norm(b - cc), norm(cc - a)});
        if (dist_point_segment(centroid, p, q) <= 1.5L * size)
          return std::nullopt;
        continue;
      }
      if ((hp > 0) == (hq > 0)) continue;
      const real alpha = hp / (hp - hq);
      const Vec3 x = p + (q - p) * alpha;
      const real u = dot(cross(cc - b, x - b), un) / nn;
      const real v = dot(cross(a - cc, x - cc), un) / nn;
      const real w = 1 - u - v;
      const real lowest = std::min({u, v, w});
      if (lowest <= -eb) continue;  // outside this triangle
      if (lowest <= eb) return std::nullopt;  // skims an edge or corner
      if (alpha <= 1e-9L || alpha >= 1 - 1e-9L)
        return std::nullopt;  // pierced at a curve vertex
      DiskCrossing cr;
      cr.param = c.wrap(c.cum_length(i) + alpha * c.segment_length(i));
      cr.sign = hq > hp ? 1 : -1;
      out.crossings.push_back(cr);
    }
  }
  std::sort(out.crossings.begin(), out.crossings.end(),
            [](const DiskCrossing& l, const DiskCrossing& r) {
              return l.param < r.param;
            });
  for (const DiskCrossing& cr : out.crossings) out.signed_total += cr.sign;
  out.unsigned_total = static_cast<int>(out.crossings.size());
  return out;
}

}  // namespace

MeridianHits surface_crossings(const Polyline& curve,
                               const std::vector<Triangle>& surface) {
  if (surface.empty()) return {};
  const Vec3 origin = surface.front().a;
  real scale = 0;
  for (const Triangle& t : surface) {
    scale = std::max(scale, norm(t.a - origin));
    scale = std::max(scale, norm(t.b - origin));
    scale = std::max(scale, norm(t.c - origin));
  }
  if (scale <= 0) return {};
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vec3 shift{0, 0, 0};
    if (attempt > 0) {
      Rng r = Rng(0x7375726655ULL).fork(static_cast<std::uint64_t>(attempt));
      shift = Vec3{r.uniform_sym(), r.uniform_sym(), r.uniform_sym()} *
              (1e-9L * scale);
    }
    const std::optional<MeridianHits> res =
        try_surface(curve, surface, shift, scale);
    if (res) return *res;
  }
  throw Error(errc::non_transverse, "curve grazes the surface");
}

}  // namespace tubelab
