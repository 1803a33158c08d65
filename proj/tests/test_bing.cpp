#include "tubelab/bing.hpp"

#include <algorithm>
#include <vector>

#include "doctest.h"
#include "tubelab/error.hpp"
#include "tubelab/linking.hpp"

using namespace tubelab;

namespace {

// Max distance from any vertex of the loop to the reference core.
real max_offset(const Polyline& loop, const Polyline& core) {
  real m = 0;
  for (const Vec3& v : loop.vertices())
    m = std::max(m, dist_to_polyline(v, core));
  return m;
}

// Pattern of the loop against one disk: {signed, unsigned}.
std::pair<int, int> pattern(const Polyline& loop, const Disk& d) {
  const MeridianHits h = meridian_intersections(loop, d);
  return {h.signed_total, h.unsigned_total};
}

// Child radius rule: a quarter of the tightest clearance, where clearance
// is the smaller of sibling separation and room to the parent boundary.
real quarter_rule(const Tube& parent, const Polyline& a, const Polyline& b) {
  const real sib = dist_polylines(a, b);
  const real wall = parent.radius -
      std::max(max_offset(a, parent.core), max_offset(b, parent.core));
  return 0.25L * std::min(sib, wall);
}

}  // namespace

TEST_CASE("clasped pair: linked-looking but unlinked, nested, disjoint") {
  const Polyline core = make_round_core(1.0L, 96);
  const Tube parent = tube_of(core, 0.25L);
  const BingChildren kids = bing_children(parent);
  const real h = 0.36L * parent.radius;

  // Null linking by both routes, independently.
  Rng rng(7);
  CHECK(linking_gauss(kids.first.loop, kids.second.loop) == 0);
  CHECK(linking_projection(kids.first.loop, kids.second.loop, rng) == 0);
  CHECK(linking_number(kids.first.loop, kids.second.loop) == 0);

  // The clasp signature: each child pierces the other's turnback fans
  // exactly twice, once per junction, with cancelling signs, and never
  // touches the other's strand ribbon.
  {
    const MeridianHits c12 = surface_crossings(kids.second.loop, kids.first.caps);
    CHECK(c12.unsigned_total == 2);
    CHECK(c12.signed_total == 0);
    CHECK(surface_crossings(kids.second.loop, kids.first.ribbon).unsigned_total == 0);
    const MeridianHits c21 = surface_crossings(kids.first.loop, kids.second.caps);
    CHECK(c21.unsigned_total == 2);
    CHECK(c21.signed_total == 0);
    CHECK(surface_crossings(kids.first.loop, kids.second.ribbon).unsigned_total == 0);
  }

  // The hooks interleave: the pair passes closer than a strand offset but
  // never touches, and the gap fits two quarter-rule tubes.
  const real sib = dist_polylines(kids.first.loop, kids.second.loop);
  CHECK(sib > 0.2L * h);
  CHECK(sib < 1.2L * h);
  const real r = quarter_rule(parent, kids.first.loop, kids.second.loop);
  CHECK(sib > 2 * r);

  // Both children stay well inside the parent.
  CHECK(max_offset(kids.first.loop, core) < 0.45L * parent.radius);
  CHECK(max_offset(kids.second.loop, core) < 0.45L * parent.radius);

  // Each child doubles back through the parent: meridian probes see two
  // balanced crossings inside the child's span and none outside.
  int two_two = 0, zero_zero = 0;
  for (const Disk& d : plan_disks(parent, core.length() / 6)) {
    for (const Polyline* c : {&kids.first.loop, &kids.second.loop}) {
      const auto [sg, un] = pattern(*c, d);
      CHECK(sg == 0);
      CHECK((un == 0 || un == 2));
      if (un == 2) ++two_two;
      if (un == 0) ++zero_zero;
    }
  }
  CHECK(two_two >= 8);
  CHECK(zero_zero >= 2);

  // Children support tubes at the quarter rule, nested in the parent.
  const Tube t1 = tube_of(kids.first.loop, r, Word("1"));
  const Tube t2 = tube_of(kids.second.loop, r, Word("2"));
  CHECK(tube_contains_tube(parent, t1));
  CHECK(tube_contains_tube(parent, t2));
  CHECK(t1.distortion < 1.5L);
  CHECK(t2.distortion < 1.5L);
}

TEST_CASE("clasped pair is deterministic") {
  const Polyline core = make_round_core(1.0L, 64);
  const Tube parent = tube_of(core, 0.2L);
  const BingChildren a = bing_children(parent);
  const BingChildren b = bing_children(parent);
  REQUIRE(a.first.loop.size() == b.first.loop.size());
  for (int i = 0; i < a.first.loop.size(); ++i) {
    CHECK(a.first.loop.vertex(i).x == b.first.loop.vertex(i).x);
    CHECK(a.first.loop.vertex(i).y == b.first.loop.vertex(i).y);
    CHECK(a.first.loop.vertex(i).z == b.first.loop.vertex(i).z);
  }
}

namespace {

// Four equally spaced disks is the smallest halving layout: windows {0,1,2} and
// {2,3,0} split the loop with shared extremes.
BingSchedule halving_schedule(const Tube& parent, PairStyle style) {
  BingSchedule s;
  s.disks = plan_disks(parent, parent.core.length() / 2);
  REQUIRE(s.disks.size() == 4);
  s.first_window = {0, 1, 2};
  s.second_window = {2, 3, 0};
  s.style = style;
  return s;
}

}  // namespace

TEST_CASE("scheduled pair meets exactly the window disks") {
  const Polyline core = make_round_core(1.0L, 96);
  const Tube parent = tube_of(core, 0.3L);

  for (const PairStyle style : {PairStyle::kQuadrant, PairStyle::kPaired}) {
    CAPTURE(static_cast<int>(style));
    const BingSchedule sched = halving_schedule(parent, style);
    const BingChildren kids = bing_children(parent, sched);

    // Window disks crossed twice with balanced directions, others missed.
    const std::vector<std::vector<int>> want = {{0, 1, 2}, {2, 3, 0}};
    const Polyline* loops[2] = {&kids.first.loop, &kids.second.loop};
    for (int c = 0; c < 2; ++c) {
      for (int d = 0; d < 4; ++d) {
        const bool in = std::count(want[c].begin(), want[c].end(), d) > 0;
        const auto [sg, un] = pattern(*loops[c], sched.disks[d]);
        CAPTURE(c);
        CAPTURE(d);
        CHECK(sg == 0);
        CHECK(un == (in ? 2 : 0));
      }
    }

    // Hook-free: unlinked by both routes, no turnback piercings either
    // way, and separated by a full strand offset, inside the parent.
    CHECK(linking_number(kids.first.loop, kids.second.loop) == 0);
    CHECK(surface_crossings(kids.second.loop, kids.first.caps).unsigned_total ==
          0);
    CHECK(surface_crossings(kids.first.loop, kids.second.caps).unsigned_total ==
          0);
    const MeridianHits rib =
        surface_crossings(kids.second.loop, kids.first.ribbon);
    CHECK(rib.signed_total == 0);
    const real sep = dist_polylines(kids.first.loop, kids.second.loop);
    const real off = std::max(max_offset(kids.first.loop, core),
                              max_offset(kids.second.loop, core));
    CHECK(sep > 0.9L * off);
    CHECK(off < parent.radius * 0.495L);

    const real r = quarter_rule(parent, kids.first.loop, kids.second.loop);
    const Tube t1 = tube_of(kids.first.loop, r, Word("1"));
    const Tube t2 = tube_of(kids.second.loop, r, Word("2"));
    CHECK(tube_contains_tube(parent, t1));
    CHECK(tube_contains_tube(parent, t2));
  }
}

TEST_CASE("scheduling recurses: grandchildren split the inherited window") {
  const Polyline core = make_round_core(1.0L, 96);
  const Tube parent = tube_of(core, 0.3L);
  const BingSchedule sched = halving_schedule(parent, PairStyle::kQuadrant);
  const BingChildren kids = bing_children(parent, sched);

  const real r = quarter_rule(parent, kids.first.loop, kids.second.loop);
  const Tube child = tube_of(kids.first.loop, r, Word("1"));

  // The child crosses its three window disks twice each; its own children
  // drop one extreme disk apiece.
  BingSchedule next;
  next.disks = sched.disks;
  next.first_window = {0, 1};
  next.second_window = {1, 2};
  next.style = PairStyle::kQuadrant;
  const BingChildren grand = bing_children(child, next);

  const std::vector<std::vector<int>> want = {{0, 1}, {1, 2}};
  const Polyline* loops[2] = {&grand.first.loop, &grand.second.loop};
  for (int c = 0; c < 2; ++c) {
    for (int d = 0; d < 4; ++d) {
      const bool in = std::count(want[c].begin(), want[c].end(), d) > 0;
      const auto [sg, un] = pattern(*loops[c], sched.disks[d]);
      CAPTURE(c);
      CAPTURE(d);
      CHECK(sg == 0);
      CHECK(un == (in ? 2 : 0));
    }
  }
  CHECK(linking_number(grand.first.loop, grand.second.loop) == 0);

  const real rg = quarter_rule(child, grand.first.loop, grand.second.loop);
  CHECK(tube_contains_tube(child, tube_of(grand.first.loop, rg)));
  CHECK(tube_contains_tube(child, tube_of(grand.second.loop, rg)));
}

TEST_CASE("schedule rejections") {
  const Polyline core = make_round_core(1.0L, 96);
  const Tube parent = tube_of(core, 0.3L);
  BingSchedule sched = halving_schedule(parent, PairStyle::kQuadrant);

  SUBCASE("non-consecutive window indices") {
    sched.first_window = {0, 2};
    CHECK_THROWS_WITH_AS(bing_children(parent, sched),
                         doctest::Contains("consecutive"), Error);
    try {
      bing_children(parent, sched);
    } catch (const Error& e) {
      CHECK(e.code() == errc::infeasible_schedule);
    }
  }

  SUBCASE("window consecutive by index but not along the curve") {
    std::swap(sched.disks[1], sched.disks[2]);
    sched.first_window = {0, 1};
    sched.second_window = {2, 3};
    bool threw = false;
    try {
      bing_children(parent, sched);
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code() == errc::infeasible_schedule);
    }
    CHECK(threw);
  }

  SUBCASE("clasped style cannot be scheduled") {
    sched.style = PairStyle::kClasped;
    bool threw = false;
    try {
      bing_children(parent, sched);
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code() == errc::config_invalid);
    }
    CHECK(threw);
  }

  SUBCASE("repeated disk in a window") {
    sched.first_window = {1, 1};
    bool threw = false;
    try {
      bing_children(parent, sched);
    } catch (const Error& e) {
      threw = true;
      CHECK(e.code() == errc::infeasible_schedule);
    }
    CHECK(threw);
  }
}
