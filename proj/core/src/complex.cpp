#include "tubelab/complex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "tubelab/error.hpp"
#include "tubelab/polyline.hpp"
#include "tubelab/rng.hpp"
#include "tubelab/tube.hpp"

namespace tubelab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();
constexpr int kMinModelCells = 64;
constexpr int kMaxComplexCells = 4'000'000;

std::string fmt(real v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17Lg", v);
  return buf;
}

Error too_coarse(const std::string& what) {
  return Error(errc::mesh_too_coarse, what);
}

// ---------------------------------------------------------------- meshing

struct Grid {
  Vec3 lo;  // position of voxel center (0, 0, 0)
  real pitch = 0;
  int nx = 0, ny = 0, nz = 0;
  // 0 outside, 1 model region, 2 and 3 the two child holes.
  std::vector<signed char> kind;

  int raw(int ix, int iy, int iz) const { return (iz * ny + iy) * nx + ix; }
  Vec3 center(int ix, int iy, int iz) const {
    return {lo.x + pitch * ix, lo.y + pitch * iy, lo.z + pitch * iz};
  }
  signed char at(int ix, int iy, int iz) const {
    if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz)
      return 0;
    return kind[static_cast<std::size_t>(raw(ix, iy, iz))];
  }
};

// Param-and-angle coordinates of a point relative to a core curve: u is the
// normalized arclength of the closest core point, theta the angle of the
// offset in that point's rotation-minimizing frame.
struct CoreCoords {
  real u = 0;
  real theta = 0;
};

CoreCoords core_coords(const Polyline& core, const std::vector<Frame>& frames,
                       const Vec3& p) {
  real best_d2 = kInf;
  real best_s = 0;
  const int n = core.size();
  for (int i = 0; i < n; ++i) {
    const Vec3& a = core.vertex(i);
    const Vec3 ab = core.vertex(i + 1) - a;
    const real len2 = norm2(ab);
    real t = len2 > 0 ? dot(p - a, ab) / len2 : 0;
    t = std::clamp(t, 0.0L, 1.0L);
    const real d2 = norm2(p - (a + ab * t));
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = core.cum_length(i) + t * core.segment_length(i);
    }
  }
  const real s = core.wrap(best_s);
  const Frame f = frame_at(core, frames, s);
  const Vec3 d = p - core.point_at(s);
  return {s / core.length(), std::atan2(dot(d, f.b), dot(d, f.n))};
}

real wrap_gap(real d, real period) {
  d = std::fabs(d);
  return std::min(d, period - d);
}

// For every left cell the closest right cell in (u, theta), weighted by the
// physical scales of the receiving wall.  Strict comparison keeps the lowest
// right index on ties, so the map is deterministic.
std::vector<std::pair<int, int>> match_rings(
    const std::vector<CoreCoords>& left, const std::vector<CoreCoords>& right,
    real u_scale, real theta_scale) {
  std::vector<std::pair<int, int>> out;
  out.reserve(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    real best = kInf;
    int pick = -1;
    for (std::size_t j = 0; j < right.size(); ++j) {
      const real du = wrap_gap(left[i].u - right[j].u, 1.0L) * u_scale;
      const real dt =
          wrap_gap(left[i].theta - right[j].theta, 2 * kPi) * theta_scale;
      const real d = du * du + dt * dt;
      if (d < best) {
        best = d;
        pick = static_cast<int>(j);
      }
    }
    out.emplace_back(static_cast<int>(i), pick);
  }
  return out;
}

struct ModelBuild {
  MeshModel mesh;
  std::vector<std::array<int, 2>> face_edges;  // 3D cell index pairs
  // Glue pairs (socket cell of the parent copy, wall cell of the child
  // copy), one list per child.
  std::array<std::vector<std::pair<int, int>>, 2> glue;
};

// Voxelizes the region of `root` minus the two child tubes (when given) and
// derives the adjacency, the outer wall, and the child-interface glue maps.
ModelBuild build_model(const Tube& root, const Tube* k1, const Tube* k2,
                       real pitch, int n) {
  Vec3 mn = root.core.vertex(0);
  Vec3 mx = mn;
  for (const Vec3& v : root.core.vertices()) {
    mn = {std::min(mn.x, v.x), std::min(mn.y, v.y), std::min(mn.z, v.z)};
    mx = {std::max(mx.x, v.x), std::max(mx.y, v.y), std::max(mx.z, v.z)};
  }
  const real pad = root.radius + 2.5L * pitch;
  mn -= {pad, pad, pad};
  mx += {pad, pad, pad};

  Grid g;
  g.pitch = pitch;
  g.lo = mn;
  g.nx = static_cast<int>((mx.x - mn.x) / pitch) + 1;
  g.ny = static_cast<int>((mx.y - mn.y) / pitch) + 1;
  g.nz = static_cast<int>((mx.z - mn.z) / pitch) + 1;
  const long long raw_total =
      static_cast<long long>(g.nx) * g.ny * g.nz;
  if (raw_total > 64'000'000)
    throw Error(errc::size_exceeded,
                "voxel grid would need " + std::to_string(raw_total) +
                    " probes; raise mesh_scale");
  g.kind.assign(static_cast<std::size_t>(raw_total), 0);

  // Children thinner than the mesh are carved at ~3/4 voxel so the holes
  // and their interfaces survive coarsening.
  const real carve1 = k1 ? std::max(k1->radius, 0.75L * pitch) : 0;
  const real carve2 = k2 ? std::max(k2->radius, 0.75L * pitch) : 0;
  long long hole1 = 0, hole2 = 0;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const Vec3 c = g.center(ix, iy, iz);
        const bool in1 = k1 && dist_to_polyline(c, k1->core) <= carve1;
        const bool in2 = k2 && dist_to_polyline(c, k2->core) <= carve2;
        if (in1 && in2)
          throw too_coarse("child tubes merge at pitch " + fmt(pitch));
        if (!in1 && !in2 && dist_to_polyline(c, root.core) > root.radius)
          continue;
        if ((in1 || in2) &&
            dist_to_polyline(c, root.core) > root.radius)
          throw too_coarse("carved child voxels poke through the outer wall "
                           "at pitch " +
                           fmt(pitch));
        const signed char kind = in1 ? 2 : (in2 ? 3 : 1);
        g.kind[static_cast<std::size_t>(g.raw(ix, iy, iz))] = kind;
        hole1 += in1;
        hole2 += in2;
        // Raster order means the -x/-y/-z neighbors are classified already;
        // a face shared by the two holes means the brothers have fused.
        if (kind >= 2) {
          const std::array<std::array<int, 3>, 3> prev = {
              {{ix - 1, iy, iz}, {ix, iy - 1, iz}, {ix, iy, iz - 1}}};
          for (const auto& [jx, jy, jz] : prev) {
            const signed char o = g.at(jx, jy, jz);
            if (o >= 2 && o != kind)
              throw too_coarse("child tubes touch at pitch " + fmt(pitch));
          }
        }
      }
  if (k1 && (hole1 == 0 || hole2 == 0))
    throw too_coarse("a child tube leaves no voxels at pitch " + fmt(pitch));

  ModelBuild out;
  std::vector<int> cell(static_cast<std::size_t>(raw_total), -1);
  for (int iz = 0; iz < g.nz; ++iz)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const int r = g.raw(ix, iy, iz);
        if (g.kind[static_cast<std::size_t>(r)] != 1) continue;
        cell[static_cast<std::size_t>(r)] =
            static_cast<int>(out.mesh.pos.size());
        out.mesh.pos.push_back(g.center(ix, iy, iz));
      }
  const int m = static_cast<int>(out.mesh.pos.size());
  if (m < kMinModelCells)
    throw too_coarse("model region resolved only " + std::to_string(m) +
                     " cells at pitch " + fmt(pitch));

  std::vector<int> sock1, sock2;
  for (int iz = 0; iz < g.nz; ++iz)
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const int id = cell[static_cast<std::size_t>(g.raw(ix, iy, iz))];
        if (id < 0) continue;
        const std::array<std::array<int, 3>, 6> nb = {
            {{ix + 1, iy, iz},
             {ix - 1, iy, iz},
             {ix, iy + 1, iz},
             {ix, iy - 1, iz},
             {ix, iy, iz + 1},
             {ix, iy, iz - 1}}};
        bool wall = false, s1 = false, s2 = false;
        for (const auto& [jx, jy, jz] : nb) {
          const signed char k = g.at(jx, jy, jz);
          wall |= k == 0;
          s1 |= k == 2;
          s2 |= k == 3;
          if (k == 1 && (jx > ix || jy > iy || jz > iz)) {
            const int other = cell[static_cast<std::size_t>(g.raw(jx, jy, jz))];
            out.face_edges.push_back({id, other});
          }
        }
        // A cell may see both holes: near the mid plane the separating wall
        // is legitimately one voxel thin, and the cell glues to both copies.
        if (wall) out.mesh.plug.push_back(id);
        if (s1) sock1.push_back(id);
        if (s2) sock2.push_back(id);
      }

  // The model region must be one piece or copies will come apart.
  {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
    for (const auto& [a, b] : out.face_edges) {
      adj[static_cast<std::size_t>(a)].push_back(b);
      adj[static_cast<std::size_t>(b)].push_back(a);
    }
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int found = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : adj[static_cast<std::size_t>(v)])
        if (!seen[static_cast<std::size_t>(u)]) {
          seen[static_cast<std::size_t>(u)] = 1;
          ++found;
          stack.push_back(u);
        }
    }
    if (found != m)
      throw too_coarse("model region mesh is disconnected at pitch " +
                       fmt(pitch));
  }

  if (k1) {
    if (sock1.empty() || sock2.empty())
      throw too_coarse("a child interface has no cells at pitch " +
                       fmt(pitch));
    const std::vector<Frame> root_frames = rm_frames(root.core);
    const std::array<const Tube*, 2> kids = {k1, k2};
    const std::array<const std::vector<int>*, 2> socks = {&sock1, &sock2};
    std::vector<CoreCoords> wall_co;
    wall_co.reserve(out.mesh.plug.size());
    for (int id : out.mesh.plug)
      wall_co.push_back(core_coords(root.core, root_frames,
                                    out.mesh.pos[static_cast<std::size_t>(id)]));
    for (int side = 0; side < 2; ++side) {
      const std::vector<Frame> child_frames = rm_frames(kids[side]->core);
      std::vector<CoreCoords> sock_co;
      sock_co.reserve(socks[side]->size());
      for (int id : *socks[side])
        sock_co.push_back(
            core_coords(kids[side]->core, child_frames,
                        out.mesh.pos[static_cast<std::size_t>(id)]));
      // Both directions so neither ring is left with unmatched cells; the
      // pair set is deduplicated below.
      std::vector<std::pair<int, int>> pairs;
      for (const auto& [si, wi] :
           match_rings(sock_co, wall_co, root.core.length(), root.radius))
        pairs.emplace_back((*socks[side])[static_cast<std::size_t>(si)],
                           out.mesh.plug[static_cast<std::size_t>(wi)]);
      for (const auto& [wi, si] :
           match_rings(wall_co, sock_co, root.core.length(), root.radius))
        pairs.emplace_back((*socks[side])[static_cast<std::size_t>(si)],
                           out.mesh.plug[static_cast<std::size_t>(wi)]);
      std::sort(pairs.begin(), pairs.end());
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
      out.glue[static_cast<std::size_t>(side)] = std::move(pairs);
    }
  }

  out.mesh.pitch = pitch;
  if (n == 4) {
    const int steps =
        2 * std::max(4, static_cast<int>(std::lround(kPi / pitch)));
    out.mesh.circle_steps = steps;
    out.mesh.arc = 2 * kPi / steps;
  }
  return out;
}

// ------------------------------------------------------------- shortest paths

// Label-setting single-source pass.  The queue orders by (distance, id), so
// ties settle on the lower cell id and reruns are bit-identical.  cutoff < 0
// disables the radius bound; target >= 0 stops once that cell settles.
std::vector<real> sssp(const SemmesComplex& c, int source, real cutoff,
                       int target) {
  const int n = static_cast<int>(c.cells.size());
  std::vector<real> dist(static_cast<std::size_t>(n), kInf);
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  using Item = std::pair<real, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[static_cast<std::size_t>(source)] = 0;
  pq.push({0, source});
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (done[static_cast<std::size_t>(v)]) continue;
    done[static_cast<std::size_t>(v)] = 1;
    if (v == target) break;
    for (int e = c.adj_start[static_cast<std::size_t>(v)];
         e < c.adj_start[static_cast<std::size_t>(v) + 1]; ++e) {
      const int u = c.adj_cell[static_cast<std::size_t>(e)];
      if (done[static_cast<std::size_t>(u)]) continue;
      const real nd = d + c.adj_len[static_cast<std::size_t>(e)];
      if (cutoff >= 0 && nd > cutoff) continue;
      if (nd < dist[static_cast<std::size_t>(u)]) {
        dist[static_cast<std::size_t>(u)] = nd;
        pq.push({nd, u});
      }
    }
  }
  return dist;
}

void check_cell(const SemmesComplex& c, int id, const char* who) {
  if (id < 0 || id >= static_cast<int>(c.cells.size()))
    throw Error(errc::config_invalid,
                std::string(who) + " cell id " + std::to_string(id) +
                    " out of range");
}

real min_incident(const SemmesComplex& c, int v) {
  real m = kInf;
  for (int e = c.adj_start[static_cast<std::size_t>(v)];
       e < c.adj_start[static_cast<std::size_t>(v) + 1]; ++e)
    m = std::min(m, c.adj_len[static_cast<std::size_t>(e)]);
  return m;
}

// Log-uniform radius between the center's own resolution scale and a fixed
// fraction of the reach, clamped so it never exceeds the diameter.
real sample_radius(const SemmesComplex& c, Rng& rng, int center, real hi_frac) {
  const real lo = 3 * min_incident(c, center);
  real hi = c.reach * hi_frac;
  if (!(hi > lo)) hi = lo;
  const real r = lo * std::exp(rng.uniform01() * std::log(hi / lo));
  return std::min(r, c.reach);
}

}  // namespace

// ----------------------------------------------------------------- structure

int SemmesComplex::cell_id(int piece, int model_id) const {
  if (piece < 0 || piece >= static_cast<int>(pieces.size()))
    throw Error(errc::config_invalid, "piece index out of range");
  const ComplexPiece& p = pieces[static_cast<std::size_t>(piece)];
  if (model_id < 0 || model_id >= p.cell_count)
    throw Error(errc::config_invalid, "model cell index out of range");
  return p.first_cell + model_id;
}

Vec3 SemmesComplex::cell_pos(int id) const {
  check_cell(*this, id, "position");
  const ComplexCell& cell = cells[static_cast<std::size_t>(id)];
  const MeshModel& m = models[static_cast<std::size_t>(
      pieces[static_cast<std::size_t>(cell.piece)].model)];
  return m.pos[static_cast<std::size_t>(cell.model_id / m.circle_steps)];
}

real SemmesComplex::cell_angle(int id) const {
  check_cell(*this, id, "angle");
  const ComplexCell& cell = cells[static_cast<std::size_t>(id)];
  const MeshModel& m = models[static_cast<std::size_t>(
      pieces[static_cast<std::size_t>(cell.piece)].model)];
  if (m.circle_steps <= 1) return 0;
  return (cell.model_id % m.circle_steps + 0.5L) * m.arc;
}

void finalize(SemmesComplex& c) {
  const int n = static_cast<int>(c.cells.size());
  if (n == 0) throw Error(errc::config_invalid, "complex has no cells");
  for (const ComplexEdge& e : c.edges) {
    check_cell(c, e.a, "edge");
    check_cell(c, e.b, "edge");
    if (!(e.length > 0))
      throw Error(errc::config_invalid, "edge length must be positive");
  }
  c.adj_start.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const ComplexEdge& e : c.edges) {
    ++c.adj_start[static_cast<std::size_t>(e.a) + 1];
    ++c.adj_start[static_cast<std::size_t>(e.b) + 1];
  }
  for (int i = 0; i < n; ++i)
    c.adj_start[static_cast<std::size_t>(i) + 1] +=
        c.adj_start[static_cast<std::size_t>(i)];
  c.adj_cell.assign(c.adj_start.back(), 0);
  c.adj_len.assign(c.adj_start.back(), 0);
  std::vector<int> fill(c.adj_start.begin(), c.adj_start.end() - 1);
  for (const ComplexEdge& e : c.edges) {
    c.adj_cell[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.a)])] =
        e.b;
    c.adj_len[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.a)]++)] =
        e.length;
    c.adj_cell[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.b)])] =
        e.a;
    c.adj_len[static_cast<std::size_t>(fill[static_cast<std::size_t>(e.b)]++)] =
        e.length;
  }
  const std::vector<real> dist = sssp(c, 0, -1, -1);
  c.reach = 0;
  c.connected = true;
  for (real d : dist) {
    if (d == kInf)
      c.connected = false;
    else
      c.reach = std::max(c.reach, d);
  }
}

void scale_complex(SemmesComplex& c, real factor) {
  if (!(factor > 0))
    throw Error(errc::config_invalid, "scale factor must be positive");
  const real wf = std::pow(factor, static_cast<real>(c.n));
  for (ComplexCell& cell : c.cells) cell.weight *= wf;
  for (ComplexEdge& e : c.edges) e.length *= factor;
  for (real& l : c.adj_len) l *= factor;
  c.reach *= factor;
  // Mesh templates keep their own coordinates; only realized lengths and
  // weights carry the factor.
}

int piece_index(const SemmesComplex& c, const Word& w) {
  if (!is_valid_word(w))
    throw Error(errc::config_invalid, "malformed word '" + w + "'");
  if (c.pieces.empty() || c.pieces.front().tree != 0)
    throw Error(errc::config_invalid,
                "word addressing needs a single-tree complex");
  int off = 0;
  for (char ch : w) off = 2 * off + (ch - '1');
  const int idx = TubeTree::level_begin(word_depth(w)) + off;
  if (idx >= static_cast<int>(c.pieces.size()))
    throw Error(errc::config_invalid,
                "word '" + w + "' is deeper than the complex");
  return idx;
}

// -------------------------------------------------------------------- build

TubeTree metric_model_tree(int depth) {
  if (depth < 0 || depth > kDefaultMaxDepth)
    throw Error(errc::depth_overflow,
                "model tree depth " + std::to_string(depth) + " out of range");
  const int total = (1 << (depth + 1)) - 1;
  const int internal = (1 << depth) - 1;
  std::vector<real> z(static_cast<std::size_t>(total), 0);
  std::vector<real> rho(static_cast<std::size_t>(total), 0.45L);
  std::vector<Word> words(static_cast<std::size_t>(total));
  // Children sit a fixed fraction above and below the parent ring, with a
  // fixed share of its thickness; every level is the same picture rescaled.
  const real lift = 23.0L / 45;
  const real share = 29.0L / 90;
  for (int i = 0; i < internal; ++i) {
    const std::size_t k1 = static_cast<std::size_t>(2 * i + 1);
    const std::size_t k2 = static_cast<std::size_t>(2 * i + 2);
    const std::size_t p = static_cast<std::size_t>(i);
    z[k1] = z[p] + lift * rho[p];
    z[k2] = z[p] - lift * rho[p];
    rho[k1] = rho[k2] = share * rho[p];
    words[k1] = words[p] + '1';
    words[k2] = words[p] + '2';
  }
  TubeTree tree;
  tree.depth = depth;
  tree.nodes.reserve(static_cast<std::size_t>(total));
  const Polyline ring = make_round_core(1.0L, 96);
  for (int i = 0; i < total; ++i) {
    std::vector<Vec3> vs;
    vs.reserve(static_cast<std::size_t>(ring.size()));
    for (const Vec3& v : ring.vertices())
      vs.push_back({v.x, v.y, v.z + z[static_cast<std::size_t>(i)]});
    tree.nodes.push_back(tube_of(Polyline::closed(std::move(vs)),
                                 rho[static_cast<std::size_t>(i)],
                                 words[static_cast<std::size_t>(i)]));
  }
  return tree;
}

SemmesComplex build_complex(const TubeTree& tree, real lambda, real mesh_scale,
                            int n) {
  if (!(lambda > 0) || !(lambda < 1))
    throw Error(errc::config_invalid, "lambda must sit inside (0, 1)");
  if (n != 3 && n != 4)
    throw Error(errc::config_invalid, "dimension must be 3 or 4");
  if (!(mesh_scale > 0))
    throw Error(errc::config_invalid, "mesh_scale must be positive");
  if (tree.depth < 0 || tree.depth > kDefaultMaxDepth)
    throw Error(errc::depth_overflow, "tree depth out of range");
  const int copies = (1 << (tree.depth + 1)) - 1;
  if (static_cast<int>(tree.nodes.size()) != copies)
    throw Error(errc::config_invalid, "tree is not a full dyadic nesting");

  const Tube* k1 = tree.depth >= 1 ? &tree.nodes[1] : nullptr;
  const Tube* k2 = tree.depth >= 1 ? &tree.nodes[2] : nullptr;
  ModelBuild mb = build_model(tree.nodes[0], k1, k2, mesh_scale, n);
  const int m3 = static_cast<int>(mb.mesh.pos.size());
  const int steps = mb.mesh.circle_steps;
  const int m = mb.mesh.cell_count();
  if (static_cast<long long>(m) * copies > kMaxComplexCells)
    throw Error(errc::size_exceeded,
                "stamping would create " + std::to_string(
                    static_cast<long long>(m) * copies) + " cells");

  SemmesComplex c;
  c.lambda = lambda;
  c.n = n;
  c.models.push_back(std::move(mb.mesh));

  const real vol = n == 3 ? mesh_scale * mesh_scale * mesh_scale
                          : mesh_scale * mesh_scale * mesh_scale *
                                c.models[0].arc;
  c.pieces.reserve(static_cast<std::size_t>(copies));
  c.cells.reserve(static_cast<std::size_t>(copies) *
                  static_cast<std::size_t>(m));
  for (int k = 0; k <= tree.depth; ++k) {
    const real weight = std::pow(lambda, static_cast<real>(n * k)) * vol;
    for (const Word& w : word_level(k)) {
      ComplexPiece p;
      p.word = w;
      p.tree = 0;
      p.depth = k;
      p.model = 0;
      p.first_cell = static_cast<int>(c.cells.size());
      p.cell_count = m;
      const int piece = static_cast<int>(c.pieces.size());
      c.pieces.push_back(std::move(p));
      for (int id = 0; id < m; ++id) c.cells.push_back({piece, id, weight});
    }
  }

  // One stamped copy of the model adjacency per piece, then glue each parent
  // interface to the outer wall of the matching child copy.  A glue edge
  // spans half a voxel on each side at the two scales involved.
  for (int piece = 0; piece < copies; ++piece) {
    const ComplexPiece& p = c.pieces[static_cast<std::size_t>(piece)];
    const real scale = std::pow(lambda, static_cast<real>(p.depth));
    for (const auto& [a3, b3] : mb.face_edges)
      for (int s = 0; s < steps; ++s)
        c.edges.push_back({p.first_cell + a3 * steps + s,
                           p.first_cell + b3 * steps + s,
                           scale * mesh_scale});
    if (steps > 1)
      for (int a3 = 0; a3 < m3; ++a3)
        for (int s = 0; s < steps; ++s)
          c.edges.push_back({p.first_cell + a3 * steps + s,
                             p.first_cell + a3 * steps + (s + 1) % steps,
                             scale * c.models[0].arc});
    if (p.depth == tree.depth) continue;
    const real glue_len = scale * mesh_scale * (1 + lambda) / 2;
    for (int side = 0; side < 2; ++side) {
      const ComplexPiece& child =
          c.pieces[static_cast<std::size_t>(2 * piece + 1 + side)];
      for (const auto& [s3, w3] : mb.glue[static_cast<std::size_t>(side)])
        for (int s = 0; s < steps; ++s)
          c.edges.push_back({p.first_cell + s3 * steps + s,
                             child.first_cell + w3 * steps + s, glue_len});
    }
  }

  finalize(c);
  if (!c.connected)
    throw too_coarse("stamped complex came apart; refine mesh_scale");
  return c;
}

// ------------------------------------------------------------------- queries

real distance(const SemmesComplex& c, int x, int y) {
  check_cell(c, x, "distance");
  check_cell(c, y, "distance");
  if (x == y) return 0;
  const int s = std::min(x, y);
  const int t = std::max(x, y);
  return sssp(c, s, -1, t)[static_cast<std::size_t>(t)];
}

std::vector<std::pair<int, real>> metric_ball(const SemmesComplex& c,
                                              int center, real radius) {
  check_cell(c, center, "ball center");
  if (!(radius >= 0))
    throw Error(errc::config_invalid, "ball radius must be nonnegative");
  const std::vector<real> dist = sssp(c, center, radius, -1);
  std::vector<std::pair<int, real>> out;
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] <= radius) out.emplace_back(static_cast<int>(i), dist[i]);
  return out;
}

std::vector<int> depth_cells(const SemmesComplex& c, int k) {
  std::vector<int> out;
  for (const ComplexPiece& p : c.pieces) {
    if (p.tree < 0 || p.depth != k) continue;
    for (int i = 0; i < p.cell_count; ++i) out.push_back(p.first_cell + i);
  }
  return out;
}

std::vector<int> piece_cells(const SemmesComplex& c, int piece) {
  if (piece < 0 || piece >= static_cast<int>(c.pieces.size()))
    throw Error(errc::config_invalid, "piece index out of range");
  const ComplexPiece& p = c.pieces[static_cast<std::size_t>(piece)];
  std::vector<int> out(static_cast<std::size_t>(p.cell_count));
  for (int i = 0; i < p.cell_count; ++i)
    out[static_cast<std::size_t>(i)] = p.first_cell + i;
  return out;
}

real measure(const SemmesComplex& c, const std::vector<int>& cell_set) {
  // Within a piece every cell weighs the same, so the sum collapses to one
  // count-times-weight product per piece; that keeps disjoint unions
  // additive to a rounding and the level law checkable at 1e-12.
  std::vector<long long> count(c.pieces.size(), 0);
  for (int id : cell_set) {
    check_cell(c, id, "measure");
    ++count[static_cast<std::size_t>(
        c.cells[static_cast<std::size_t>(id)].piece)];
  }
  real mu = 0;
  for (std::size_t p = 0; p < c.pieces.size(); ++p)
    if (count[p] > 0)
      mu += static_cast<real>(count[p]) *
            c.cells[static_cast<std::size_t>(c.pieces[p].first_cell)].weight;
  return mu;
}

// -------------------------------------------------------------------- audits

RegularityReport audit_regularity(const SemmesComplex& c, int sample_count,
                                  std::uint64_t seed) {
  if (sample_count < 1)
    throw Error(errc::config_invalid, "sample_count must be at least 1");
  const std::uint64_t n = c.cells.size();
  Rng base(seed);
  RegularityReport rep;
  rep.ratio_min = kInf;
  rep.ratio_max = 0;
  for (int i = 0; i < sample_count; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i));
    const int center = static_cast<int>(rng.next_u64() % n);
    if (min_incident(c, center) == kInf) continue;  // isolated cell
    const real radius = sample_radius(c, rng, center, 2.0L / 3);
    std::vector<int> ids;
    for (const auto& [id, d] : metric_ball(c, center, radius))
      ids.push_back(id);
    RegularitySample s;
    s.center = center;
    s.radius = radius;
    s.measure = measure(c, ids);
    s.ratio = s.measure / std::pow(radius, static_cast<real>(c.n));
    rep.ratio_min = std::min(rep.ratio_min, s.ratio);
    rep.ratio_max = std::max(rep.ratio_max, s.ratio);
    rep.samples.push_back(s);
  }
  return rep;
}

real audit_connectivity(const SemmesComplex& c, int sample_count,
                        std::uint64_t seed) {
  if (sample_count < 1)
    throw Error(errc::config_invalid, "sample_count must be at least 1");
  // A complex that has come apart has pairs no factor can join.
  if (!c.connected) return kInf;
  const std::uint64_t n = c.cells.size();
  Rng base(seed);
  real worst = 1;
  for (int i = 0; i < sample_count; ++i) {
    Rng rng = base.fork(static_cast<std::uint64_t>(i));
    const int center = static_cast<int>(rng.next_u64() % n);
    const real radius = sample_radius(c, rng, center, 0.25L);
    const auto ball = metric_ball(c, center, radius);
    if (ball.size() < 2) continue;
    for (int t = 0; t < 3; ++t) {
      const auto& [u, du] = ball[rng.next_u64() % ball.size()];
      const auto& [v, dv] = ball[rng.next_u64() % ball.size()];
      if (u == v) continue;
      // Both legs of the center's shortest-path tree stay inside the ball
      // of the larger leg, so the joining factor of a live pair never
      // exceeds 1; the audit's information is in the disconnection flag.
      const real join = std::max(du, dv) / radius;
      worst = std::max(worst, std::max(join, 1.0L));
    }
  }
  return worst;
}

real quasi_self_similarity_check(const SemmesComplex& c, const Word& w,
                                 int pair_count, std::uint64_t seed) {
  if (pair_count < 1)
    throw Error(errc::config_invalid, "pair_count must be at least 1");
  const int piece = piece_index(c, w);
  const int depth = c.pieces.back().depth;
  if (word_depth(w) > depth - 1)
    throw Error(errc::config_invalid,
                "word must sit at least one level above the leaves");
  if (w.empty()) return 1;  // identity map
  const int m = c.pieces[static_cast<std::size_t>(piece)].cell_count;
  const real scale = std::pow(c.lambda, static_cast<real>(word_depth(w)));
  Rng rng(seed);
  real worst = 1;
  for (int t = 0; t < pair_count; ++t) {
    const int x = static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(m));
    const int y = static_cast<int>(
        (static_cast<std::uint64_t>(x) + 1 +
         rng.next_u64() % static_cast<std::uint64_t>(m - 1)) %
        static_cast<std::uint64_t>(m));
    const real d0 = distance(c, c.cell_id(0, x), c.cell_id(0, y));
    const real dw = distance(c, c.cell_id(piece, x), c.cell_id(piece, y));
    const real ratio = dw / (scale * d0);
    worst = std::max({worst, ratio, 1 / ratio});
  }
  return worst;
}

// ------------------------------------------------------------------ assembly

real planted_ball_radius(int k) {
  if (k < 1)
    throw Error(errc::config_invalid, "ball index must be at least 1");
  const real kk = static_cast<real>(k);
  return std::min(0.1L / kk, 0.45L / (kk * (kk + 1)));
}

SemmesComplex assemble_point_singularity(int K, real lambda, int n) {
  if (K < 1)
    throw Error(errc::config_invalid, "need at least one planted tree");
  if (K > 5)
    throw Error(errc::size_exceeded,
                "ambient mesh for K > 5 would be enormous");
  if (n != 3 && n != 4)
    throw Error(errc::config_invalid, "dimension must be 3 or 4");
  const real critical = std::pow(2.0L, -1.0L / static_cast<real>(n));
  if (!(lambda > 0) || !(lambda < critical))
    throw Error(errc::config_invalid,
                "lambda " + fmt(lambda) + " must stay below " + fmt(critical) +
                    " for summable tree mass");

  std::vector<Vec3> centers(static_cast<std::size_t>(K) + 1);
  std::vector<real> radii(static_cast<std::size_t>(K) + 1, 0);
  for (int k = 1; k <= K; ++k) {
    centers[static_cast<std::size_t>(k)] = {1.0L / static_cast<real>(k), 0, 0};
    radii[static_cast<std::size_t>(k)] = planted_ball_radius(k);
    if (radii[static_cast<std::size_t>(k)] >
        norm(centers[static_cast<std::size_t>(k)]) / 10)
      throw Error(errc::overlap, "planted ball outgrew a tenth of its norm");
  }
  for (int k = 1; k < K; ++k) {
    const real gap = dist(centers[static_cast<std::size_t>(k)],
                          centers[static_cast<std::size_t>(k) + 1]) -
                     radii[static_cast<std::size_t>(k)] -
                     radii[static_cast<std::size_t>(k) + 1];
    if (!(gap > 0))
      throw Error(errc::overlap,
                  "planted balls " + std::to_string(k) + " and " +
                      std::to_string(k + 1) + " touch");
  }

  // Scaled tree complexes, one per depth.
  const real tree_pitch = 0.14L;
  std::vector<SemmesComplex> trees;
  std::vector<real> tree_scale(static_cast<std::size_t>(K) + 1, 0);
  for (int k = 1; k <= K; ++k) {
    SemmesComplex tc = build_complex(metric_model_tree(k), lambda, tree_pitch,
                                     n);
    real extent = 0;
    for (const Vec3& p : tc.models[0].pos)
      extent = std::max(extent, norm(p));
    extent += tree_pitch;
    const real s = 0.9L * radii[static_cast<std::size_t>(k)] / extent;
    scale_complex(tc, s);
    tree_scale[static_cast<std::size_t>(k)] = s;
    trees.push_back(std::move(tc));
  }
  const int steps = trees[0].models[0].circle_steps;
  const real arc = trees[0].models[0].arc;

  // Ambient ball large enough to keep every planted ball well inside.
  const Vec3 A = {0.55L, 0, 0};
  const real R = 0.62L;
  const real pitch = std::min(0.1L, 0.8L * radii[static_cast<std::size_t>(K)]);
  MeshModel ambient;
  ambient.pitch = pitch;
  ambient.circle_steps = steps;
  ambient.arc = arc;
  const int half = static_cast<int>(R / pitch) + 2;
  std::vector<std::array<int, 2>> amb_edges;
  std::vector<std::vector<int>> rings(static_cast<std::size_t>(K) + 1);
  {
    const int side = 2 * half + 1;
    std::vector<int> cell(
        static_cast<std::size_t>(side) * side * side, -1);
    auto raw = [&](int ix, int iy, int iz) {
      return (static_cast<std::size_t>(iz + half) * side + (iy + half)) *
                 side +
             (ix + half);
    };
    auto inside = [&](int ix, int iy, int iz, int* hole) {
      const Vec3 p = A + Vec3{pitch * ix, pitch * iy, pitch * iz};
      if (norm(p - A) > R) return false;
      for (int k = 1; k <= K; ++k)
        if (dist(p, centers[static_cast<std::size_t>(k)]) <=
            radii[static_cast<std::size_t>(k)]) {
          if (hole) *hole = k;
          return false;
        }
      return true;
    };
    for (int iz = -half; iz <= half; ++iz)
      for (int iy = -half; iy <= half; ++iy)
        for (int ix = -half; ix <= half; ++ix)
          if (inside(ix, iy, iz, nullptr)) {
            cell[raw(ix, iy, iz)] = static_cast<int>(ambient.pos.size());
            ambient.pos.push_back(A + Vec3{pitch * ix, pitch * iy, pitch * iz});
          }
    for (int iz = -half; iz <= half; ++iz)
      for (int iy = -half; iy <= half; ++iy)
        for (int ix = -half; ix <= half; ++ix) {
          const int id = cell[raw(ix, iy, iz)];
          if (id < 0) continue;
          const std::array<std::array<int, 3>, 6> nb = {
              {{ix + 1, iy, iz},
               {ix - 1, iy, iz},
               {ix, iy + 1, iz},
               {ix, iy - 1, iz},
               {ix, iy, iz + 1},
               {ix, iy, iz - 1}}};
          bool ringed = false;
          for (const auto& [jx, jy, jz] : nb) {
            if (jx > half || jy > half || jz > half || jx < -half ||
                jy < -half || jz < -half)
              continue;
            const int other = cell[raw(jx, jy, jz)];
            if (other >= 0) {
              if (jx > ix || jy > iy || jz > iz)
                amb_edges.push_back({id, other});
              continue;
            }
            int hole = 0;
            if (!inside(jx, jy, jz, &hole) && hole > 0 && !ringed) {
              rings[static_cast<std::size_t>(hole)].push_back(id);
              ringed = true;
            }
          }
        }
  }
  for (int k = 1; k <= K; ++k)
    if (rings[static_cast<std::size_t>(k)].empty())
      throw too_coarse("ambient mesh cannot see planted ball " +
                       std::to_string(k));

  SemmesComplex c;
  c.lambda = lambda;
  c.n = n;
  // Reserve up front: `amb` must stay valid while tree models are appended.
  c.models.reserve(static_cast<std::size_t>(K) + 1);
  c.models.push_back(std::move(ambient));
  const MeshModel& amb = c.models[0];
  const int am3 = static_cast<int>(amb.pos.size());
  {
    ComplexPiece p;
    p.word = "";
    p.tree = -1;
    p.depth = 0;
    p.model = 0;
    p.first_cell = 0;
    p.cell_count = amb.cell_count();
    c.pieces.push_back(std::move(p));
  }
  const real avol =
      n == 3 ? pitch * pitch * pitch : pitch * pitch * pitch * arc;
  for (int id = 0; id < amb.cell_count(); ++id)
    c.cells.push_back({0, id, avol});
  for (const auto& [a3, b3] : amb_edges)
    for (int s = 0; s < steps; ++s)
      c.edges.push_back(
          {a3 * steps + s, b3 * steps + s, pitch});
  if (steps > 1)
    for (int a3 = 0; a3 < am3; ++a3)
      for (int s = 0; s < steps; ++s)
        c.edges.push_back(
            {a3 * steps + s, a3 * steps + (s + 1) % steps, arc});

  // Merge the scaled trees and glue each root wall to its ambient ring.
  for (int k = 1; k <= K; ++k) {
    SemmesComplex& tc = trees[static_cast<std::size_t>(k) - 1];
    const int cell_base = static_cast<int>(c.cells.size());
    const int piece_base = static_cast<int>(c.pieces.size());
    const int model_base = static_cast<int>(c.models.size());
    for (ComplexPiece p : tc.pieces) {
      p.tree = k;
      p.model += model_base;
      p.first_cell += cell_base;
      c.pieces.push_back(std::move(p));
    }
    for (ComplexCell cell : tc.cells) {
      cell.piece += piece_base;
      c.cells.push_back(cell);
    }
    for (ComplexEdge e : tc.edges) {
      e.a += cell_base;
      e.b += cell_base;
      c.edges.push_back(e);
    }

    const MeshModel& tm = tc.models[0];
    const real s_k = tree_scale[static_cast<std::size_t>(k)];
    const Vec3 x_k = centers[static_cast<std::size_t>(k)];
    const std::vector<int>& ring = rings[static_cast<std::size_t>(k)];
    const real glue_len = (pitch + s_k * tm.pitch) / 2;
    std::vector<std::pair<int, int>> pairs;  // (tree wall 3D id, ambient 3D id)
    auto nearest_ring = [&](const Vec3& p) {
      real best = kInf;
      int pick = ring[0];
      for (int a3 : ring) {
        const real d = norm2(p - amb.pos[static_cast<std::size_t>(a3)]);
        if (d < best) {
          best = d;
          pick = a3;
        }
      }
      return pick;
    };
    for (int w3 : tm.plug) {
      const Vec3 world = x_k + tm.pos[static_cast<std::size_t>(w3)] * s_k;
      pairs.emplace_back(w3, nearest_ring(world));
    }
    for (int a3 : ring) {
      const Vec3& p = amb.pos[static_cast<std::size_t>(a3)];
      real best = kInf;
      int pick = tm.plug[0];
      for (int w3 : tm.plug) {
        const real d =
            norm2(p - (x_k + tm.pos[static_cast<std::size_t>(w3)] * s_k));
        if (d < best) {
          best = d;
          pick = w3;
        }
      }
      pairs.emplace_back(pick, a3);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (const auto& [w3, a3] : pairs)
      for (int s = 0; s < steps; ++s)
        c.edges.push_back({cell_base + w3 * steps + s, a3 * steps + s,
                           glue_len});

    c.models.push_back(std::move(tc.models[0]));
  }

  finalize(c);
  if (!c.connected)
    throw too_coarse("assembled complex came apart");
  return c;
}

// ------------------------------------------------------------------- exports

std::string complex_json(const SemmesComplex& c) {
  std::string out = "{\"lambda\":" + fmt(c.lambda) +
                    ",\"n\":" + std::to_string(c.n) + ",\"cells\":[";
  for (std::size_t i = 0; i < c.cells.size(); ++i) {
    const ComplexCell& cell = c.cells[i];
    const ComplexPiece& p = c.pieces[static_cast<std::size_t>(cell.piece)];
    const Vec3 pos = c.cell_pos(static_cast<int>(i));
    if (i) out += ',';
    out += "{\"id\":" + std::to_string(i) +
           ",\"word\":\"" + p.word + "\"" +
           ",\"tree\":" + std::to_string(p.tree) +
           ",\"depth\":" + std::to_string(p.depth) +
           ",\"weight\":" + fmt(cell.weight) +
           ",\"pos\":[" + fmt(pos.x) + ',' + fmt(pos.y) + ',' + fmt(pos.z) +
           "]}";
  }
  out += "],\"edges\":[";
  for (std::size_t i = 0; i < c.edges.size(); ++i) {
    const ComplexEdge& e = c.edges[i];
    if (i) out += ',';
    out += '[' + std::to_string(e.a) + ',' + std::to_string(e.b) + ',' +
           fmt(e.length) + ']';
  }
  out += "]}";
  return out;
}

std::string regularity_csv(const RegularityReport& r) {
  std::string out = "center_id,radius,measure,ratio\n";
  for (const RegularitySample& s : r.samples)
    out += std::to_string(s.center) + ',' + fmt(s.radius) + ',' +
           fmt(s.measure) + ',' + fmt(s.ratio) + '\n';
  return out;
}

}  // namespace tubelab
