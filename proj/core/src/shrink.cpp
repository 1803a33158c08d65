#include "tubelab/shrink.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "tubelab/error.hpp"
#include "tubelab/linking.hpp"
#include "tubelab/tube_tree.hpp"

namespace tubelab {

namespace {

int ring_size(const DiskSystem& sys) {
  return static_cast<int>(sys.disks.size());
}

int ring_mod(int i, int n) { return ((i % n) + n) % n; }

// Disk ring with a prescribed pair count.  Shared by the public planner and
// the two-factor cascade, which equalizes m across factors.
DiskSystem lay_disks(const Polyline& core, int m, real delta0) {
  if (delta0 <= 0)
    throw Error(errc::infeasible_geometry, "disk radius must be positive");
  if (delta0 * max_curvature(core) >= 1)
    throw Error(errc::radius_too_large,
                "disk radius reaches the curvature scale of the core");
  if (self_clearance_below(core, 2.125L * delta0) <= 2 * delta0)
    throw Error(errc::radius_too_large,
                "disk radius reaches the core's self-approach distance");
  DiskSystem sys;
  const real length = core.length();
  sys.core_length = length;
  sys.spacing = length / (2 * m);
  sys.disks.reserve(static_cast<std::size_t>(2 * m));
  for (int i = 0; i < 2 * m; ++i) {
    Disk d;
    d.param = (i + 0.5L) * sys.spacing;
    d.center = core.point_at(d.param);
    d.normal = core.tangent_at(d.param);
    d.radius = delta0;
    sys.disks.push_back(d);
  }
  for (int i = 0; i < 2 * m; ++i)
    if (meridian_intersections(core, sys.disks[i]).unsigned_total != 1)
      throw Error(errc::infeasible_geometry,
                  "disk " + std::to_string(i) +
                      " does not cross the base core exactly once");
  return sys;
}

struct Windows {
  int first1 = 0;  // window start of the first child
  int first2 = 0;  // window start of the second child
  int count = 0;   // both children keep the same window length
};

// The first child keeps all but the last window disk, the second all but
// the first.  The root is the one exception: its core crosses every disk
// once, and the children take the two halves of the ring, sharing both
// boundary disks.
Windows child_windows(int wf, int wc, int n, bool root_split) {
  if (root_split) return {0, n / 2, n / 2 + 1};
  return {wf, ring_mod(wf + 1, n), wc - 1};
}

BingSchedule window_schedule(const DiskSystem& sys, int wf, int wc,
                             bool root_split, PairStyle style) {
  const int n = ring_size(sys);
  BingSchedule sched;
  sched.style = style;
  sched.disks.reserve(static_cast<std::size_t>(wc));
  for (int i = 0; i < wc; ++i)
    sched.disks.push_back(sys.disks[static_cast<std::size_t>(ring_mod(wf + i, n))]);
  if (root_split) {
    const int m = n / 2;
    for (int i = 0; i <= m; ++i) sched.first_window.push_back(i);
    for (int i = m; i < n; ++i) sched.second_window.push_back(i);
    sched.second_window.push_back(0);
  } else {
    for (int i = 0; i + 1 < wc; ++i) sched.first_window.push_back(i);
    for (int i = 1; i < wc; ++i) sched.second_window.push_back(i);
  }
  return sched;
}

// Measured incidence of one child loop against the whole ring.  Window
// disks must be crossed exactly twice with cancelling signs; every other
// disk not at all.  Far disks are dismissed by a bounding-sphere test
// (segments stay inside the vertex hull), nearer ones by a strict
// one-sided plane test, and only the leftovers pay for a full crossing
// count.
IncidenceRow measure_incidence(const Polyline& loop, const DiskSystem& sys,
                               int wf, int wc, const Word& who) {
  const int n = ring_size(sys);
  Vec3 centroid{0, 0, 0};
  for (const Vec3& v : loop.vertices()) centroid = centroid + v;
  centroid = centroid * (1.0L / static_cast<real>(loop.size()));
  real ball = 0;
  for (const Vec3& v : loop.vertices())
    ball = std::max(ball, norm(v - centroid));

  const auto one_sided = [&](const Disk& d) {
    int side = 0;
    for (const Vec3& v : loop.vertices()) {
      const real s = dot(v - d.center, d.normal);
      if (s > 0) {
        if (side < 0) return false;
        side = 1;
      } else if (s < 0) {
        if (side > 0) return false;
        side = -1;
      } else {
        return false;
      }
    }
    return true;
  };

  IncidenceRow row;
  row.first_disk = wf;
  row.disk_count = wc;
  row.multiplicities.assign(static_cast<std::size_t>(wc), 0);
  for (int g = 0; g < n; ++g) {
    const Disk& d = sys.disks[static_cast<std::size_t>(g)];
    const int at = ring_mod(g - wf, n);
    if (at < wc) {
      const MeridianHits hits = meridian_intersections(loop, d);
      if (hits.unsigned_total != 2 || hits.signed_total != 0)
        throw Error(errc::infeasible_geometry,
                    "tube '" + who + "' crosses disk " + std::to_string(g) +
                        " " + std::to_string(hits.unsigned_total) +
                        " times instead of twice");
      row.multiplicities[static_cast<std::size_t>(at)] = hits.unsigned_total;
      continue;
    }
    if (norm(d.center - centroid) > ball + d.radius) continue;
    if (one_sided(d)) continue;
    if (meridian_intersections(loop, d).unsigned_total != 0)
      throw Error(errc::infeasible_geometry,
                  "tube '" + who + "' strays onto disk " + std::to_string(g) +
                      " outside its window");
  }
  return row;
}

struct SplitOut {
  Tube first, second;
  IncidenceRow row1, row2;
};

// chart_exponent e > 0 caps the children's chart distortion at 2^e by
// shrinking their radii below the clearance-driven quarter rule; the
// two-factor run schedules a summable series of such caps so the tracked
// distortion product closes under its budget.
SplitOut split_and_verify(const Tube& parent, int wf, int wc, bool root_split,
                          const DiskSystem& sys, PairStyle style,
                          bool check_link, real chart_exponent) {
  if (wc < 2)
    throw Error(errc::infeasible_schedule,
                "a window of " + std::to_string(wc) +
                    " disk(s) cannot split further");
  const BingSchedule sched = window_schedule(sys, wf, wc, root_split, style);
  const BingChildren kids = bing_children(parent, sched);
  const auto [w1, w2] = word_children(parent.label);
  const Windows w = child_windows(wf, wc, ring_size(sys), root_split);

  SplitOut out;
  out.row1 = measure_incidence(kids.first.loop, sys, w.first1, w.count, w1);
  out.row2 = measure_incidence(kids.second.loop, sys, w.first2, w.count, w2);
  real r = quarter_rule_radius(parent, kids.first.loop, kids.second.loop);
  if (!(r > 0))
    throw Error(errc::infeasible_geometry,
                "no clearance left for the children of '" + parent.label + "'");
  if (chart_exponent > 0) {
    // 1/(1 - r*kappa) <= 2^e  <=>  r*kappa <= 1 - 2^-e.
    const real cap = 1 - std::exp2(-chart_exponent);
    r = std::min({r, cap / max_curvature(kids.first.loop),
                  cap / max_curvature(kids.second.loop)});
  }
  if (check_link) {
    int lk = 0;
    try {
      lk = linking_number(kids.first.loop, kids.second.loop);
    } catch (const Error& e) {
      // what() is "code: message"; keep the message, tag the address.
      const std::string text = std::string(e.what()).substr(e.code().size() + 2);
      throw Error(e.code(), text + " (children of '" + parent.label + "')");
    }
    if (lk != 0)
      throw Error(errc::infeasible_geometry,
                  "children of '" + parent.label + "' link each other");
  }
  out.first = tube_of(kids.first.loop, r, w1);
  out.second = tube_of(kids.second.loop, r, w2);
  return out;
}

// Depth-first cascade rollup.  Stage tables and per-level summaries are
// complete; tubes themselves are only alive along the recursion spine, so
// deep runs stay within memory.
struct CascadeOut {
  std::vector<std::map<Word, IncidenceRow>> tables;  // index = stage
  std::vector<std::map<Word, real>> tube_diams;      // index = depth, [0] unused
  std::vector<real> radius_by_depth;                 // per-level maximum
  std::vector<real> distortion_by_depth;             // per-level maximum
};

real solid_diameter(const Tube& t) {
  return diameter(t.core) + 2 * t.radius;
}

void record_child(const Tube& t, const IncidenceRow& row, int stage,
                  CascadeOut& out) {
  out.tables[static_cast<std::size_t>(stage)].emplace(t.label, row);
  const std::size_t depth = static_cast<std::size_t>(stage) + 1;
  out.tube_diams[depth].emplace(t.label, solid_diameter(t));
  out.radius_by_depth[depth] = std::max(out.radius_by_depth[depth], t.radius);
  out.distortion_by_depth[depth] =
      std::max(out.distortion_by_depth[depth], t.distortion);
}

void descend(const Tube& node, int wf, int wc, int depth, int final_depth,
             const DiskSystem& sys, PairStyle style, int link_depth,
             const std::vector<real>& chart_exponents, CascadeOut& out) {
  if (depth >= final_depth) return;
  const std::size_t child_depth = static_cast<std::size_t>(depth) + 1;
  const real exponent = child_depth < chart_exponents.size()
                            ? chart_exponents[child_depth]
                            : 0;
  const SplitOut s = split_and_verify(node, wf, wc, depth == 0, sys, style,
                                      depth < link_depth, exponent);
  record_child(s.first, s.row1, depth, out);
  record_child(s.second, s.row2, depth, out);
  descend(s.first, s.row1.first_disk, s.row1.disk_count, depth + 1,
          final_depth, sys, style, link_depth, chart_exponents, out);
  descend(s.second, s.row2.first_disk, s.row2.disk_count, depth + 1,
          final_depth, sys, style, link_depth, chart_exponents, out);
}

CascadeOut run_cascade(const Tube& root, const DiskSystem& sys,
                       PairStyle style, int final_depth, int link_depth,
                       const std::vector<real>& chart_exponents = {}) {
  CascadeOut out;
  out.tables.resize(static_cast<std::size_t>(final_depth));
  out.tube_diams.resize(static_cast<std::size_t>(final_depth) + 1);
  out.radius_by_depth.assign(static_cast<std::size_t>(final_depth) + 1, 0);
  out.distortion_by_depth.assign(static_cast<std::size_t>(final_depth) + 1, 0);
  out.radius_by_depth[0] = root.radius;
  out.distortion_by_depth[0] = root.distortion;
  descend(root, 0, ring_size(sys), 0, final_depth, sys, style, link_depth,
          chart_exponents, out);
  return out;
}

void check_radii_decreasing(const std::vector<real>& radii) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1]))
      throw Error(errc::infeasible_geometry,
                  "tube radii fail to decrease at depth " + std::to_string(i));
}

// Exhaustive dual-route linking checks are affordable only while the tree
// is small; past that, splits deeper than this still get every geometric
// incidence check but skip the pair-linking integral.
int link_depth_for(int m) { return m <= 10 ? m + 2 : 9; }

int plan_pair_count(const Polyline& core, real eps) {
  if (eps <= 0)
    throw Error(errc::infeasible_schedule, "disk spacing bound must be positive");
  const real ratio = core.length() / eps;
  if (ratio > 1e7L)
    throw Error(errc::size_exceeded,
                "schedule would need more than 1e7 disk pairs");
  return std::max(1, static_cast<int>(std::ceil(ratio)));
}

}  // namespace

std::pair<int, DiskSystem> plan_disks(const Polyline& core, real eps,
                                      real delta0) {
  const int m = plan_pair_count(core, eps);
  return {m, lay_disks(core, m, delta0)};
}

ShrinkState begin_shrink(const Tube& root, real eps, PairStyle style) {
  auto [m, sys] = plan_disks(root.core, eps, root.radius);
  (void)m;
  ShrinkState st;
  st.stage = 0;
  st.disk_system = std::move(sys);
  st.style = style;
  SplitOut s = split_and_verify(root, 0, ring_size(st.disk_system), true,
                                st.disk_system, style, true, 0);
  st.incidence.emplace(s.first.label, std::move(s.row1));
  st.incidence.emplace(s.second.label, std::move(s.row2));
  st.tubes.emplace(s.first.label, std::move(s.first));
  st.tubes.emplace(s.second.label, std::move(s.second));
  return st;
}

ShrinkState shrink_step(const ShrinkState& state) {
  const int n = ring_size(state.disk_system);
  if (n < 2 || n % 2 != 0)
    throw Error(errc::config_invalid, "disk ring must hold an even count");
  const int m = n / 2;
  if (state.stage >= m)
    throw Error(errc::infeasible_schedule,
                "stage " + std::to_string(state.stage) +
                    " tubes already meet single disks");
  if (state.tubes.empty())
    throw Error(errc::config_invalid, "state holds no tubes");
  if (state.tubes.size() >= (std::size_t{1} << 14))
    throw Error(errc::size_exceeded,
                "stepping would materialize more than 2^14 tubes");
  ShrinkState next;
  next.stage = state.stage + 1;
  next.disk_system = state.disk_system;
  next.style = state.style;
  for (const auto& [w, t] : state.tubes) {
    if (static_cast<int>(w.size()) != state.stage + 1)
      throw Error(errc::config_invalid,
                  "tube '" + w + "' does not belong to stage " +
                      std::to_string(state.stage));
    const auto win = state.incidence.find(w);
    if (win == state.incidence.end())
      throw Error(errc::config_invalid, "tube '" + w + "' has no incidence row");
    SplitOut s =
        split_and_verify(t, win->second.first_disk, win->second.disk_count,
                         false, state.disk_system, state.style, true, 0);
    next.incidence.emplace(s.first.label, std::move(s.row1));
    next.incidence.emplace(s.second.label, std::move(s.row2));
    next.tubes.emplace(s.first.label, std::move(s.first));
    next.tubes.emplace(s.second.label, std::move(s.second));
  }
  return next;
}

ShrinkCertificate run_shrink(const Tube& root, real eps) {
  const int m = plan_pair_count(root.core, eps);
  if (m > 20)
    throw Error(errc::size_exceeded,
                "a " + std::to_string(m) +
                    "-pair schedule would cascade past 2^21 tubes");
  const DiskSystem sys = lay_disks(root.core, m, root.radius);
  CascadeOut out = run_cascade(root, sys, PairStyle::kQuadrant, m + 1,
                               link_depth_for(m));
  ShrinkCertificate cert;
  cert.m = m;
  cert.epsilon = eps;
  cert.stage_tables = std::move(out.tables);
  cert.final_diameters = std::move(out.tube_diams[static_cast<std::size_t>(m) + 1]);
  cert.radii = std::move(out.radius_by_depth);
  check_radii_decreasing(cert.radii);
  for (const auto& [w, d] : cert.final_diameters)
    if (!(d < eps))
      throw Error(errc::infeasible_geometry,
                  "final tube '" + w + "' measures " + std::to_string((double)d) +
                      ", not below the target");
  return cert;
}

std::vector<std::pair<int, ShrinkCertificate>> iterate_shrink(
    const Tube& root, const std::vector<real>& targets) {
  if (targets.empty())
    throw Error(errc::config_invalid, "no diameter targets given");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] > 0))
      throw Error(errc::config_invalid, "diameter targets must be positive");
    if (i > 0 && !(targets[i] < targets[i - 1]))
      throw Error(errc::config_invalid,
                  "diameter targets must strictly decrease");
  }
  const int m = plan_pair_count(root.core, targets.back());
  if (m > 20)
    throw Error(errc::size_exceeded,
                "a " + std::to_string(m) +
                    "-pair schedule would cascade past 2^21 tubes");
  const DiskSystem sys = lay_disks(root.core, m, root.radius);
  CascadeOut out = run_cascade(root, sys, PairStyle::kQuadrant, m + 1,
                               link_depth_for(m));
  check_radii_decreasing(out.radius_by_depth);

  std::vector<real> level_max(static_cast<std::size_t>(m) + 2, 0);
  for (int d = 1; d <= m + 1; ++d)
    for (const auto& [w, diam] : out.tube_diams[static_cast<std::size_t>(d)])
      level_max[static_cast<std::size_t>(d)] =
          std::max(level_max[static_cast<std::size_t>(d)], diam);

  std::vector<std::pair<int, ShrinkCertificate>> result;
  int prev = -1;
  for (const real target : targets) {
    int k = -1;
    for (int kk = prev + 1; kk <= m; ++kk)
      if (level_max[static_cast<std::size_t>(kk) + 1] < target) {
        k = kk;
        break;
      }
    if (k < 0)
      throw Error(errc::infeasible_geometry,
                  "no stage reaches diameter target " +
                      std::to_string((double)target));
    ShrinkCertificate cert;
    cert.m = m;
    cert.epsilon = target;
    cert.stage_tables.assign(out.tables.begin(),
                             out.tables.begin() + k + 1);
    cert.final_diameters = out.tube_diams[static_cast<std::size_t>(k) + 1];
    cert.radii.assign(out.radius_by_depth.begin(),
                      out.radius_by_depth.begin() + k + 2);
    result.emplace_back(k, std::move(cert));
    prev = k;
  }
  return result;
}

ShrinkCertificate run_bb_shrink(const Tube& root_a, const Tube& root_b,
                                real eps, real delta0) {
  if (!(eps > 0) || !(delta0 > 0))
    throw Error(errc::config_invalid,
                "target diameter and disk radius must be positive");
  const real budget = 8 / delta0;
  const real target = eps * delta0 / 20;
  const int m = std::max(plan_pair_count(root_a.core, target),
                         plan_pair_count(root_b.core, target));
  if (m > 8)
    throw Error(errc::size_exceeded,
                "an interlaced table of 4^" + std::to_string(m) +
                    " rows is past the exhaustive bound");
  const DiskSystem sys_a = lay_disks(root_a.core, m, root_a.radius);
  const DiskSystem sys_b = lay_disks(root_b.core, m, root_b.radius);
  // Per-depth chart caps 2^(2^-j), j alternating between the factors, keep
  // the tracked product summable: with both root charts at most 2 the whole
  // product stays at or under 2*2*2^1*2^1 = 16, inside any budget 8/delta0
  // with delta0 <= 0.5.
  std::vector<real> exps_a(static_cast<std::size_t>(m) + 1, 0);
  std::vector<real> exps_b(static_cast<std::size_t>(m) + 1, 0);
  for (int d = 1; d <= m; ++d) {
    exps_a[static_cast<std::size_t>(d)] = std::exp2(static_cast<real>(1 - 2 * d));
    exps_b[static_cast<std::size_t>(d)] = std::exp2(static_cast<real>(-2 * d));
  }
  // Quadrant children: past the root split the sibling windows are
  // staggered, which rules out core-straddling strand pairs.
  const CascadeOut out_a =
      run_cascade(root_a, sys_a, PairStyle::kQuadrant, m, m + 2, exps_a);
  const CascadeOut out_b =
      run_cascade(root_b, sys_b, PairStyle::kQuadrant, m, m + 2, exps_b);
  for (const CascadeOut* out : {&out_a, &out_b})
    for (const auto& [w, d] : out->tube_diams[static_cast<std::size_t>(m)])
      if (!(d < target))
        throw Error(errc::infeasible_geometry,
                    "factor tube '" + w + "' misses the pairing target");

  real product = 1;
  for (int d = 0; d <= m; ++d)
    product *= out_a.distortion_by_depth[static_cast<std::size_t>(d)] *
               out_b.distortion_by_depth[static_cast<std::size_t>(d)];
  if (product > budget)
    throw Error(errc::budget_exceeded,
                "distortion product " + std::to_string((double)product) +
                    " exceeds " + std::to_string((double)budget));

  ShrinkCertificate cert;
  cert.m = m;
  cert.epsilon = eps;
  cert.radii.reserve(static_cast<std::size_t>(m) + 1);
  for (int d = 0; d <= m; ++d)
    cert.radii.push_back(
        std::max(out_a.radius_by_depth[static_cast<std::size_t>(d)],
                 out_b.radius_by_depth[static_cast<std::size_t>(d)]));
  check_radii_decreasing(cert.radii);
  const real delta_m = cert.radii.back();

  // Alternating stages: even interlaced stages split the first factor,
  // odd ones the second; rows keep their factor's measured incidence but
  // are keyed by the merged address.
  cert.stage_tables.resize(static_cast<std::size_t>(2 * m));
  for (int j = 0; j < 2 * m; ++j) {
    const bool first_factor = (j % 2 == 0);
    const int la = (j + 2) / 2;
    const int lb = (j + 1) / 2;
    auto& table = cert.stage_tables[static_cast<std::size_t>(j)];
    for (const Word& wa : word_level(la))
      for (const Word& wb : word_level(lb)) {
        const IncidenceRow& row =
            first_factor
                ? out_a.tables[static_cast<std::size_t>(la) - 1].at(wa)
                : out_b.tables[static_cast<std::size_t>(lb) - 1].at(wb);
        table.emplace(interlace(wa, wb), row);
      }
  }

  for (const auto& [wa, da] : out_a.tube_diams[static_cast<std::size_t>(m)])
    for (const auto& [wb, db] : out_b.tube_diams[static_cast<std::size_t>(m)]) {
      const real bound = budget * (da + db + delta_m);
      if (!(bound < eps))
        throw Error(errc::infeasible_geometry,
                    "interlaced bound for '" + interlace(wa, wb) +
                        "' is not below the target");
      cert.final_diameters.emplace(interlace(wa, wb), bound);
    }
  return cert;
}

}  // namespace tubelab
