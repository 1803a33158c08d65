#include "tubelab/polyline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "tubelab/error.hpp"

namespace tubelab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

// Along-curve / Euclidean ratio above which an edge pair counts as a genuine
// self-approach.  Locally the curve tracks itself at ratio ~1; doubling back
// around a cap costs at least pi/2.
constexpr real kDoublebackRatio = 1.4L;

real clamp01(real x) { return x < 0 ? 0 : (x > 1 ? 1 : x); }

}  // namespace

Polyline Polyline::closed(std::vector<Vec3> vertices, real feature_scale) {
  const int n = static_cast<int>(vertices.size());
  if (n < 8) {
    throw Error(errc::infeasible_geometry,
                "closed curve needs at least 8 vertices, got " +
                    std::to_string(n));
  }

  Polyline p;
  p.v_ = std::move(vertices);
  p.cum_.resize(std::size_t(n) + 1);
  p.cum_[0] = 0;
  real scale = 0;
  for (int i = 0; i < n; ++i) {
    const Vec3 d = p.v_[std::size_t((i + 1) % n)] - p.v_[std::size_t(i)];
    const real len = norm(d);
    p.cum_[std::size_t(i) + 1] = p.cum_[std::size_t(i)] + len;
    scale = std::max(scale, norm(p.v_[std::size_t(i)] - p.v_[0]));
  }
  p.total_ = p.cum_[std::size_t(n)];
  scale = std::max(scale, p.total_ / n);

  // Degeneracy threshold: relative to extent by default, relative to the
  // declared feature size when given, floored at a few hundred ulp of the
  // coordinate magnitude so sub-representable features still get caught.
  const real coord = norm(p.v_[0]) + scale;
  real tiny = feature_scale > 0 ? 1e-3L * feature_scale : 1e-14L * scale;
  tiny = std::max(tiny, 256 * kEps * coord);
  for (int i = 0; i < n; ++i) {
    if (p.segment_length(i) <= tiny) {
      throw Error(errc::infeasible_geometry,
                  "degenerate edge at vertex " + std::to_string(i));
    }
  }
  for (int i = 0; i < n; ++i) {
    const Vec3 a = normalized(p.v_[std::size_t((i + 1) % n)] - p.v_[std::size_t(i)]);
    const Vec3 b = normalized(p.v_[std::size_t((i + 2) % n)] - p.v_[std::size_t((i + 1) % n)]);
    if (dot(a, b) < -1 + 1e-12L) {
      throw Error(errc::infeasible_geometry,
                  "curve doubles back at vertex " + std::to_string((i + 1) % n));
    }
  }
  // Self-intersection: any touching pair of non-adjacent edges is illegal.
  // A touching pair has arc separation far above the doubling-back ratio, so
  // the clearance scan cannot exempt it.
  if (self_clearance_below(p, 2 * tiny) <= tiny) {
    throw Error(errc::infeasible_geometry, "curve intersects itself");
  }
  return p;
}

const Vec3& Polyline::vertex(int i) const {
  const int n = size();
  int k = i % n;
  if (k < 0) k += n;
  return v_[std::size_t(k)];
}

real Polyline::cum_length(int i) const {
  const int n = size();
  if (i >= 0 && i <= n) return cum_[std::size_t(i)];
  int k = i % n;
  if (k < 0) k += n;
  return cum_[std::size_t(k)];
}

real Polyline::segment_length(int i) const {
  const int n = size();
  int k = i % n;
  if (k < 0) k += n;
  return cum_[std::size_t(k) + 1] - cum_[std::size_t(k)];
}

real Polyline::wrap(real s) const {
  real r = std::fmod(s, total_);
  if (r < 0) r += total_;
  if (r >= total_) r = 0;  // adding total_ to -0.5ulp rounds to the seam
  return r;
}

int Polyline::segment_index(real s) const {
  const real w = wrap(s);
  auto it = std::upper_bound(cum_.begin(), cum_.end(), w);
  int i = static_cast<int>(it - cum_.begin()) - 1;
  if (i >= size()) i = size() - 1;
  if (i < 0) i = 0;
  return i;
}

Vec3 Polyline::point_at(real s) const {
  const real w = wrap(s);
  const int i = segment_index(w);
  const real li = segment_length(i);
  const real u = (w - cum_[std::size_t(i)]) / li;
  return vertex(i) + (vertex(i + 1) - vertex(i)) * u;
}

Vec3 Polyline::tangent_at(real s) const {
  const int i = segment_index(s);
  return normalized(vertex(i + 1) - vertex(i));
}

real Polyline::arc_distance(real s0, real s1) const {
  const real a = wrap(s0), b = wrap(s1);
  const real d = std::fabs(a - b);
  return std::min(d, total_ - d);
}

std::vector<Frame> rm_frames(const Polyline& p) {
  const int n = p.size();
  std::vector<Vec3> tang(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    tang[std::size_t(i)] = normalized(p.vertex(i + 1) - p.vertex(i - 1));
  }

  std::vector<Frame> fr(static_cast<std::size_t>(n));
  fr[0].t = tang[0];
  fr[0].n = any_orthogonal(tang[0]);
  fr[0].b = cross(fr[0].t, fr[0].n);

  // Double-reflection propagation, one extra step to measure holonomy.
  auto propagate = [&](const Frame& f, const Vec3& pi, const Vec3& pj,
                       const Vec3& tj) {
    const Vec3 v1 = pj - pi;
    const real c1 = dot(v1, v1);
    Vec3 rl = f.n, tl = f.t;
    if (c1 > 0) {
      rl = f.n - v1 * (2 / c1 * dot(v1, f.n));
      tl = f.t - v1 * (2 / c1 * dot(v1, f.t));
    }
    const Vec3 v2 = tj - tl;
    const real c2 = dot(v2, v2);
    Vec3 rj = rl;
    if (c2 > 0) rj = rl - v2 * (2 / c2 * dot(v2, rl));
    Frame out;
    out.t = tj;
    out.n = normalized(rj - tj * dot(tj, rj));
    out.b = cross(out.t, out.n);
    return out;
  };

  for (int i = 1; i < n; ++i) {
    fr[std::size_t(i)] = propagate(fr[std::size_t(i - 1)], p.vertex(i - 1),
                                   p.vertex(i), tang[std::size_t(i)]);
  }
  const Frame back = propagate(fr[std::size_t(n - 1)], p.vertex(n - 1),
                               p.vertex(n), tang[0]);

  // Spread the closing twist uniformly in arclength.
  const real twist =
      std::atan2(dot(cross(back.n, fr[0].n), fr[0].t), dot(back.n, fr[0].n));
  for (int i = 0; i < n; ++i) {
    const real ang = twist * (p.cum_length(i) / p.length());
    Frame& f = fr[std::size_t(i)];
    const Vec3 nn = f.n * std::cos(ang) + f.b * std::sin(ang);
    f.n = normalized(nn - f.t * dot(f.t, nn));
    f.b = cross(f.t, f.n);
  }
  return fr;
}

Frame frame_at(const Polyline& p, const std::vector<Frame>& frames, real s) {
  const real w = p.wrap(s);
  const int i = p.segment_index(w);
  const real u = (w - p.cum_length(i)) / p.segment_length(i);
  const Frame& f0 = frames[std::size_t(i)];
  const Frame& f1 = frames[std::size_t((i + 1) % p.size())];
  Frame out;
  out.t = normalized(f0.t * (1 - u) + f1.t * u);
  const Vec3 nmix = f0.n * (1 - u) + f1.n * u;
  out.n = normalized(nmix - out.t * dot(out.t, nmix));
  out.b = cross(out.t, out.n);
  return out;
}

real vertex_curvature(const Polyline& p, int i) {
  const Vec3 e0 = p.vertex(i) - p.vertex(i - 1);
  const Vec3 e1 = p.vertex(i + 1) - p.vertex(i);
  const real l0 = norm(e0), l1 = norm(e1);
  const real c = dot(e0, e1) / (l0 * l1);
  const real turn = std::acos(std::clamp(c, real(-1), real(1)));
  return 2 * std::sin(turn / 2) / std::sqrt(l0 * l1);
}

real max_curvature(const Polyline& p) {
  real k = 0;
  for (int i = 0; i < p.size(); ++i) k = std::max(k, vertex_curvature(p, i));
  return k;
}

namespace {

bool edges_adjacent(int i, int j, int n) {
  const int d = std::abs(i - j);
  return d == 0 || d == 1 || d == n - 1;
}

real pair_clearance(const Polyline& p, int i, int j) {
  real s = 0, t = 0;
  const real d = dist_segments(p.vertex(i), p.vertex(i + 1), p.vertex(j),
                               p.vertex(j + 1), &s, &t);
  // Compare the along-curve and Euclidean separations of the closest points.
  const real si = p.cum_length(i) + s * p.segment_length(i);
  const real sj = p.cum_length(j) + t * p.segment_length(j);
  const real arc = p.arc_distance(si, sj);
  if (arc < kDoublebackRatio * d) return kInf;
  return d;
}

}  // namespace

real self_clearance(const Polyline& p) {
  const int n = p.size();
  real best = kInf;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      best = std::min(best, pair_clearance(p, i, j));
    }
  }
  return best;
}

real self_clearance_below(const Polyline& p, real cutoff) {
  const int n = p.size();
  real maxseg = 0;
  for (int i = 0; i < n; ++i) maxseg = std::max(maxseg, p.segment_length(i));
  const real cell = cutoff + maxseg;

  // Hash edges into a uniform grid; only pairs sharing a neighborhood can be
  // closer than cutoff.
  auto key = [&](long long ix, long long iy, long long iz) {
    return (ix * 73856093LL) ^ (iy * 19349663LL) ^ (iz * 83492791LL);
  };
  std::unordered_multimap<long long, int> grid;
  grid.reserve(std::size_t(n) * 2);
  auto cell_of = [&](const Vec3& q) {
    return std::array<long long, 3>{
        static_cast<long long>(std::floor(q.x / cell)),
        static_cast<long long>(std::floor(q.y / cell)),
        static_cast<long long>(std::floor(q.z / cell))};
  };
  for (int i = 0; i < n; ++i) {
    const Vec3 mid = (p.vertex(i) + p.vertex(i + 1)) * 0.5L;
    const auto c = cell_of(mid);
    grid.emplace(key(c[0], c[1], c[2]), i);
  }

  real best = cutoff;
  for (int i = 0; i < n; ++i) {
    const Vec3 mid = (p.vertex(i) + p.vertex(i + 1)) * 0.5L;
    const auto c = cell_of(mid);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy)
        for (long long dz = -1; dz <= 1; ++dz) {
          auto [lo, hi] = grid.equal_range(key(c[0] + dx, c[1] + dy, c[2] + dz));
          for (auto it = lo; it != hi; ++it) {
            const int j = it->second;
            if (j <= i || edges_adjacent(i, j, n)) continue;
            best = std::min(best, pair_clearance(p, i, j));
          }
        }
  }
  return best;
}

namespace {

// 2D monotone chain on points projected into the plane (u, v); returns
// indices into pts.
std::vector<int> hull2d(const std::vector<Vec3>& pts, const Vec3& u,
                        const Vec3& v) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[std::size_t(i)] = i;
  auto px = [&](int i) { return dot(pts[std::size_t(i)], u); };
  auto py = [&](int i) { return dot(pts[std::size_t(i)], v); };
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return px(a) < px(b) || (px(a) == px(b) && py(a) < py(b));
  });
  auto cr = [&](int o, int a, int b) {
    return (px(a) - px(o)) * (py(b) - py(o)) - (py(a) - py(o)) * (px(b) - px(o));
  };
  std::vector<int> h(static_cast<std::size_t>(2 * n));
  int k = 0;
  for (int ii = 0; ii < n; ++ii) {
    const int i = idx[std::size_t(ii)];
    while (k >= 2 && cr(h[std::size_t(k - 2)], h[std::size_t(k - 1)], i) <= 0) --k;
    h[std::size_t(k++)] = i;
  }
  for (int ii = n - 2, t = k + 1; ii >= 0; --ii) {
    const int i = idx[std::size_t(ii)];
    while (k >= t && cr(h[std::size_t(k - 2)], h[std::size_t(k - 1)], i) <= 0) --k;
    h[std::size_t(k++)] = i;
  }
  h.resize(std::size_t(k > 0 ? k - 1 : 0));
  return h;
}

real brute_diameter(const std::vector<Vec3>& pts) {
  real best2 = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best2 = std::max(best2, norm2(pts[i] - pts[j]));
    }
  }
  return std::sqrt(best2);
}

struct HullFace {
  int a, b, c;
  Vec3 nrm;
  bool alive = true;
  std::vector<int> outside;
};

// Quickhull; assumes a non-degenerate initial tetrahedron exists.
std::vector<int> hull3d(const std::vector<Vec3>& pts, int i0, int i1, int i2,
                        int i3) {
  std::vector<HullFace> faces;
  auto mk = [&](int a, int b, int c, const Vec3& inside) {
    HullFace f;
    f.a = a;
    f.b = b;
    f.c = c;
    f.nrm = cross(pts[std::size_t(b)] - pts[std::size_t(a)],
                  pts[std::size_t(c)] - pts[std::size_t(a)]);
    if (dot(f.nrm, inside - pts[std::size_t(a)]) > 0) {
      std::swap(f.b, f.c);
      f.nrm = -f.nrm;
    }
    faces.push_back(std::move(f));
  };
  const Vec3 centroid = (pts[std::size_t(i0)] + pts[std::size_t(i1)] +
                         pts[std::size_t(i2)] + pts[std::size_t(i3)]) /
                        4;
  mk(i0, i1, i2, centroid);
  mk(i0, i1, i3, centroid);
  mk(i0, i2, i3, centroid);
  mk(i1, i2, i3, centroid);

  auto above = [&](const HullFace& f, int i) {
    return dot(f.nrm, pts[std::size_t(i)] - pts[std::size_t(f.a)]);
  };
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    for (auto& f : faces) {
      if (above(f, i) > 0) {
        f.outside.push_back(i);
        break;
      }
    }
  }

  std::vector<std::size_t> pending;
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    if (!faces[fi].outside.empty()) pending.push_back(fi);
  }
  while (!pending.empty()) {
    const std::size_t fi = pending.back();
    pending.pop_back();
    if (!faces[fi].alive || faces[fi].outside.empty()) continue;

    int far = -1;
    real fd = 0;
    for (int i : faces[fi].outside) {
      const real d = above(faces[fi], i);
      if (d > fd) {
        fd = d;
        far = i;
      }
    }
    if (far < 0) continue;

    // Visible set and its horizon.
    std::vector<std::size_t> visible;
    for (std::size_t gi = 0; gi < faces.size(); ++gi) {
      if (faces[gi].alive && above(faces[gi], far) > 0) visible.push_back(gi);
    }
    std::vector<std::pair<int, int>> edge_count;
    auto add_edge = [&](int a, int b) {
      for (auto it = edge_count.begin(); it != edge_count.end(); ++it) {
        if ((it->first == b && it->second == a) ||
            (it->first == a && it->second == b)) {
          edge_count.erase(it);
          return;
        }
      }
      edge_count.emplace_back(a, b);
    };
    std::vector<int> orphans;
    for (std::size_t gi : visible) {
      HullFace& g = faces[gi];
      g.alive = false;
      add_edge(g.a, g.b);
      add_edge(g.b, g.c);
      add_edge(g.c, g.a);
      for (int i : g.outside) {
        if (i != far) orphans.push_back(i);
      }
      g.outside.clear();
    }
    const Vec3 inside = centroid;
    for (auto [a, b] : edge_count) {
      mk(a, b, far, inside);
      HullFace& nf = faces.back();
      for (int i : orphans) {
        if (dot(nf.nrm, pts[std::size_t(i)] - pts[std::size_t(nf.a)]) > 0) {
          nf.outside.push_back(i);
        }
      }
      if (!nf.outside.empty()) pending.push_back(faces.size() - 1);
    }
    // Orphans not claimed by any new face are interior now; drop them.
  }

  std::vector<int> verts;
  for (const auto& f : faces) {
    if (!f.alive) continue;
    verts.push_back(f.a);
    verts.push_back(f.b);
    verts.push_back(f.c);
  }
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  return verts;
}

}  // namespace

real diameter(const std::vector<Vec3>& pts) {
  const std::size_t n = pts.size();
  if (n < 2) return 0;
  if (n <= 10000) return brute_diameter(pts);

  // Initial simplex from extreme points.
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int i = 1; i < static_cast<int>(n); ++i) {
    const real c[3] = {pts[std::size_t(i)].x, pts[std::size_t(i)].y,
                       pts[std::size_t(i)].z};
    for (int a = 0; a < 3; ++a) {
      const real lov = a == 0 ? pts[std::size_t(lo[a])].x
                              : (a == 1 ? pts[std::size_t(lo[a])].y
                                        : pts[std::size_t(lo[a])].z);
      const real hiv = a == 0 ? pts[std::size_t(hi[a])].x
                              : (a == 1 ? pts[std::size_t(hi[a])].y
                                        : pts[std::size_t(hi[a])].z);
      if (c[a] < lov) lo[a] = i;
      if (c[a] > hiv) hi[a] = i;
    }
  }
  int i0 = lo[0], i1 = hi[0];
  real best = 0;
  for (int a = 0; a < 3; ++a) {
    const real d = dist(pts[std::size_t(lo[a])], pts[std::size_t(hi[a])]);
    if (d > best) {
      best = d;
      i0 = lo[a];
      i1 = hi[a];
    }
  }
  if (best == 0) return 0;

  int i2 = -1;
  real d2 = 0;
  for (int i = 0; i < static_cast<int>(n); ++i) {
    const real d = dist_point_segment(pts[std::size_t(i)], pts[std::size_t(i0)],
                                      pts[std::size_t(i1)]);
    if (d > d2) {
      d2 = d;
      i2 = i;
    }
  }
  const real span = dist(pts[std::size_t(i0)], pts[std::size_t(i1)]);
  if (i2 < 0 || d2 <= 1e-12L * span) {
    // Collinear: the two extreme points realize the diameter.
    return span;
  }

  int i3 = -1;
  real d3 = 0;
  const Vec3 nrm = cross(pts[std::size_t(i1)] - pts[std::size_t(i0)],
                         pts[std::size_t(i2)] - pts[std::size_t(i0)]);
  const Vec3 un = normalized(nrm);
  for (int i = 0; i < static_cast<int>(n); ++i) {
    const real d = std::fabs(dot(un, pts[std::size_t(i)] - pts[std::size_t(i0)]));
    if (d > d3) {
      d3 = d;
      i3 = i;
    }
  }
  std::vector<int> hull_idx;
  if (i3 < 0 || d3 <= 1e-10L * span) {
    // Coplanar within tolerance: 2D hull in the spanning plane.
    const Vec3 u = normalized(pts[std::size_t(i1)] - pts[std::size_t(i0)]);
    const Vec3 v = normalized(cross(un, u));
    hull_idx = hull2d(pts, u, v);
  } else {
    hull_idx = hull3d(pts, i0, i1, i2, i3);
  }
  std::vector<Vec3> hp;
  hp.reserve(hull_idx.size());
  for (int i : hull_idx) hp.push_back(pts[std::size_t(i)]);
  return brute_diameter(hp);
}

real diameter(const Polyline& p) { return diameter(p.vertices()); }

real dist_point_segment(const Vec3& x, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const real dd = dot(d, d);
  if (dd == 0) return dist(x, a);
  const real t = clamp01(dot(x - a, d) / dd);
  return dist(x, a + d * t);
}

real dist_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                   const Vec3& q2, real* s_out, real* t_out) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const real a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  real s = 0, t = 0;
  const real tiny = 0;
  if (a <= tiny && e <= tiny) {
    s = t = 0;
  } else if (a <= tiny) {
    t = clamp01(f / e);
  } else {
    const real c = dot(d1, r);
    if (e <= tiny) {
      s = clamp01(-c / a);
    } else {
      const real b = dot(d1, d2);
      const real denom = a * e - b * b;
      s = denom > 0 ? clamp01((b * f - c * e) / denom) : 0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = clamp01(-c / a);
      } else if (t > 1) {
        t = 1;
        s = clamp01((b - c) / a);
      }
    }
  }
  if (s_out) *s_out = s;
  if (t_out) *t_out = t;
  return dist(p1 + d1 * s, p2 + d2 * t);
}

real dist_to_polyline(const Vec3& x, const Polyline& p) {
  real best = kInf;
  for (int i = 0; i < p.size(); ++i) {
    best = std::min(best, dist_point_segment(x, p.vertex(i), p.vertex(i + 1)));
  }
  return best;
}

real dist_polylines(const Polyline& a, const Polyline& b) {
  real best = kInf;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) {
      best = std::min(best, dist_segments(a.vertex(i), a.vertex(i + 1),
                                          b.vertex(j), b.vertex(j + 1)));
    }
  }
  return best;
}

}  // namespace tubelab
