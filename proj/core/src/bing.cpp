#include "tubelab/bing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "tubelab/error.hpp"
#include "tubelab/linking.hpp"

namespace tubelab {

namespace {

struct Dir2 {
  real n = 0, b = 0;  // offset direction as coefficients on (normal, binormal)
};

struct LoopPlan {
  real t0 = 0, t1 = 0;  // core params, unwrapped so t1 > t0
  real h = 0;           // strand offset
  Dir2 u1, u2;          // strand directions; u1 runs forward, u2 back
  real cap_t = 0;       // cap reach along the tangent
  int cap_samples = 10;
};

Vec3 dir_at(const Frame& f, const Dir2& d) { return f.n * d.n + f.b * d.b; }

// Strands along the core at two fixed frame offsets, joined by elliptic
// caps: forward along u1, turn at t1 bulging +T, back along u2, turn at t0
// bulging -T.  Cap tangents match the strands, so the loop is corner-free.
// The bounded surface comes along: a ribbon of chords between the strands
// plus a fan per cap, anchored at the chord midpoint.
BingChild build_offset_loop(const Polyline& core,
                            const std::vector<Frame>& frames,
                            const LoopPlan& lp) {
  std::vector<real> params;
  params.push_back(lp.t0);
  {
    const int i0 = core.segment_index(core.wrap(lp.t0));
    real p = lp.t0 + (core.cum_length(i0 + 1) - core.wrap(lp.t0));
    int i = i0 + 1;
    // Keep the last strand chord at the scale of the first cap chord
    // (~0.3 cap_t); a sample landing right at the junction would make the
    // discrete turn curvature there blow up past the cap's own 1/cap_t.
    const real skip = 0.3L * lp.cap_t;
    while (p < lp.t1) {
      if (p - lp.t0 > skip && lp.t1 - p > skip) params.push_back(p);
      p += core.segment_length(i);
      ++i;
    }
  }
  params.push_back(lp.t1);

  std::vector<Vec3> s1, s2;
  s1.reserve(params.size());
  s2.reserve(params.size());
  for (const real q : params) {
    const Frame f = frame_at(core, frames, q);
    const Vec3 P = core.point_at(q);
    s1.push_back(P + dir_at(f, lp.u1) * lp.h);
    s2.push_back(P + dir_at(f, lp.u2) * lp.h);
  }
  // Cap polylines sampled from the u1 side to the u2 side inclusive.
  const auto cap_points = [&](real t, real bulge) {
    const Frame f = frame_at(core, frames, t);
    const Vec3 P = core.point_at(t);
    const Vec3 M = P + (dir_at(f, lp.u1) + dir_at(f, lp.u2)) * (lp.h / 2);
    const Vec3 A = (dir_at(f, lp.u1) - dir_at(f, lp.u2)) * (lp.h / 2);
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(lp.cap_samples) + 1);
    for (int j = 0; j <= lp.cap_samples; ++j) {
      const real s = kPi * j / lp.cap_samples;
      pts.push_back(M + A * std::cos(s) +
                    f.t * (bulge * lp.cap_t * std::sin(s)));
    }
    return std::pair<std::vector<Vec3>, Vec3>(std::move(pts), M);
  };
  const auto [cap1, mid1] = cap_points(lp.t1, +1);
  const auto [cap0, mid0] = cap_points(lp.t0, -1);

  BingChild out;
  std::vector<Vec3> v;
  v.reserve(2 * params.size() + 2 * static_cast<std::size_t>(lp.cap_samples));
  v.insert(v.end(), s1.begin(), s1.end());
  for (int j = 1; j < lp.cap_samples; ++j) v.push_back(cap1[j]);
  for (auto it = s2.rbegin(); it != s2.rend(); ++it) v.push_back(*it);
  for (int j = lp.cap_samples - 1; j >= 1; --j) v.push_back(cap0[j]);

  for (std::size_t i = 0; i + 1 < params.size(); ++i) {
    out.ribbon.push_back({s1[i], s1[i + 1], s2[i + 1]});
    out.ribbon.push_back({s1[i], s2[i + 1], s2[i]});
  }
  for (int j = 0; j < lp.cap_samples; ++j) {
    out.caps.push_back({mid1, cap1[j], cap1[j + 1]});
    out.caps.push_back({mid0, cap0[j + 1], cap0[j]});
  }

  const real axis = lp.h *
      0.5L * std::hypot(lp.u1.n - lp.u2.n, lp.u1.b - lp.u2.b);
  out.loop = Polyline::closed(std::move(v), 0.25L * std::min(axis, lp.cap_t));
  return out;
}

BingChildren clasped_pair(const Tube& parent, const BingParams& bp) {
  const Polyline& core = parent.core;
  const std::vector<Frame> frames = rm_frames(core);
  const real len = core.length();
  const real h = bp.offset_ratio * parent.radius;
  const real gap = 0.5L * h;   // junction half-gap between cap anchors
  const real c = 1.5L * gap;   // cap reach: deep enough to pierce, not exit

  const real j1 = bp.junction_at * len;
  const real j2 = j1 + 0.5L * len;
  LoopPlan a;
  a.t0 = j1 + gap;
  a.t1 = j2 - gap;
  a.h = h;
  a.u1 = {1, 0};
  a.u2 = {-1, 0};
  a.cap_t = c;
  a.cap_samples = bp.cap_samples;
  LoopPlan b;
  b.t0 = j2 + gap;
  b.t1 = j1 - gap + len;
  b.h = h;
  b.u1 = {0, 1};
  b.u2 = {0, -1};
  b.cap_t = c;
  b.cap_samples = bp.cap_samples;
  return {build_offset_loop(core, frames, a),
          build_offset_loop(core, frames, b)};
}

struct RunPick {
  real p_first = 0, p_last = 0;       // unwrapped event params
  real gap_before = 0, gap_after = 0; // to the neighboring events
  real ref_gap = 0;                   // typical free gap at this run
};

// True when the indices form one consecutive cyclic run in [0, count).
bool consecutive_mod(std::vector<int> w, int count) {
  std::sort(w.begin(), w.end());
  if (std::adjacent_find(w.begin(), w.end()) != w.end()) return false;
  int breaks = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int cur = w[i];
    const int nxt = w[(i + 1) % w.size()];
    if ((cur + 1) % count != nxt % count) ++breaks;
  }
  return breaks <= 1;
}

// Finds the first cyclic run of the parent's crossing sequence that visits
// each window disk exactly once and nothing else.
RunPick find_run(const std::vector<std::pair<real, int>>& ev, real len,
                 const std::vector<int>& window) {
  const int E = static_cast<int>(ev.size());
  const int T = static_cast<int>(window.size());
  if (T < 1 || T > E)
    throw Error(errc::infeasible_schedule, "window size unrealizable");
  std::vector<int> need(window);
  std::sort(need.begin(), need.end());
  for (int s = 0; s < E; ++s) {
    std::vector<int> got;
    got.reserve(static_cast<std::size_t>(T));
    for (int k = 0; k < T; ++k)
      got.push_back(ev[static_cast<std::size_t>((s + k) % E)].second);
    std::sort(got.begin(), got.end());
    if (got != need) continue;
    RunPick r;
    r.p_first = ev[static_cast<std::size_t>(s)].first;
    r.p_last = ev[static_cast<std::size_t>((s + T - 1) % E)].first;
    if (s + T - 1 >= E) r.p_last += len;
    real prev = ev[static_cast<std::size_t>((s - 1 + E) % E)].first;
    while (prev >= r.p_first) prev -= len;
    real next = ev[static_cast<std::size_t>((s + T) % E)].first;
    while (next <= r.p_last) next += len;
    r.gap_before = r.p_first - prev;
    r.gap_after = next - r.p_last;
    if (T >= 2) {
      r.ref_gap = std::numeric_limits<real>::infinity();
      real q = r.p_first;
      for (int k = 1; k < T; ++k) {
        real e = ev[static_cast<std::size_t>((s + k) % E)].first;
        while (e <= q) e += len;
        r.ref_gap = std::min(r.ref_gap, e - q);
        q = e;
      }
    } else {
      r.ref_gap = std::min(r.gap_before, r.gap_after);
    }
    return r;
  }
  throw Error(errc::infeasible_schedule,
              "window is not a consecutive run of the parent's crossings");
}

BingChildren scheduled_pair(const Tube& parent, const BingSchedule& sched,
                            const BingParams& bp) {
  if (sched.style == PairStyle::kClasped)
    throw Error(errc::config_invalid,
                "scheduled children are hook-free; use paired or quadrant");
  if (!consecutive_mod(sched.first_window,
                       static_cast<int>(sched.disks.size())) ||
      !consecutive_mod(sched.second_window,
                       static_cast<int>(sched.disks.size())))
    throw Error(errc::infeasible_schedule, "window disks are not consecutive");

  const Polyline& core = parent.core;
  std::vector<std::pair<real, int>> ev;
  for (int d = 0; d < static_cast<int>(sched.disks.size()); ++d) {
    const MeridianHits mh =
        meridian_intersections(core, sched.disks[static_cast<std::size_t>(d)]);
    for (const DiskCrossing& cr : mh.crossings) ev.push_back({cr.param, d});
  }
  std::sort(ev.begin(), ev.end());
  const real len = core.length();
  const RunPick r1 = find_run(ev, len, sched.first_window);
  const RunPick r2 = find_run(ev, len, sched.second_window);

  const auto interval = [](const RunPick& r, bool shared, real* cap_room) {
    if (shared) {
      // The run takes every crossing, so both outer gaps are one and the
      // same free arc: quarter it for the margins and split what is left
      // between the two turnbacks approaching each other inside it.
      const real m = 0.25L * std::min(r.gap_before, r.ref_gap);
      *cap_room = 0.5L * (r.gap_before - 2 * m);
      return std::pair<real, real>{r.p_first - m, r.p_last + m};
    }
    const real m0 = 0.5L * std::min(r.gap_before, r.ref_gap);
    const real m1 = 0.5L * std::min(r.gap_after, r.ref_gap);
    *cap_room = std::min(r.gap_before - m0, r.gap_after - m1);
    return std::pair<real, real>{r.p_first - m0, r.p_last + m1};
  };
  real room1 = 0, room2 = 0;
  const auto [a0, a1] =
      interval(r1, sched.first_window.size() == ev.size(), &room1);
  const auto [b0, b1] =
      interval(r2, sched.second_window.size() == ev.size(), &room2);

  const bool quadrant = sched.style == PairStyle::kQuadrant;
  // Cap reach along the core is h for paired turnbacks and h/sqrt(2) for
  // quadrant ones; the balance ratio equalizes sibling and boundary
  // clearance, which the child radius rule then quarters.
  const real reach_per_h = quadrant ? 0.7071067811865475L : 1.0L;
  const real balance = quadrant ? 0.4142135623730950L : 0.5L;
  const real room = bp.cap_gap_fraction * std::min(room1, room2);
  const real h =
      std::min(balance * parent.radius * 0.98L, room / reach_per_h);
  if (!(h > 0))
    throw Error(errc::infeasible_schedule,
                "no room for turnbacks between crossings");

  const std::vector<Frame> frames = rm_frames(core);
  LoopPlan a;
  a.t0 = a0;
  a.t1 = a1;
  a.h = h;
  a.u1 = {1, 0};
  a.u2 = quadrant ? Dir2{0, 1} : Dir2{-1, 0};
  a.cap_t = h * reach_per_h;
  a.cap_samples = bp.cap_samples;
  LoopPlan b;
  b.t0 = b0;
  b.t1 = b1;
  b.h = h;
  b.u1 = quadrant ? Dir2{-1, 0} : Dir2{0, 1};
  b.u2 = {0, -1};
  b.cap_t = h * reach_per_h;
  b.cap_samples = bp.cap_samples;
  return {build_offset_loop(core, frames, a),
          build_offset_loop(core, frames, b)};
}

}  // namespace

BingChildren bing_children(const Tube& parent,
                           const std::optional<BingSchedule>& schedule,
                           const BingParams& params) {
  if (!schedule) return clasped_pair(parent, params);
  return scheduled_pair(parent, *schedule, params);
}

}  // namespace tubelab
