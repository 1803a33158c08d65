#include <cmath>
#include <vector>

#include "doctest.h"
#include "tubelab/error.hpp"
#include "tubelab/linking.hpp"
#include "tubelab/polyline.hpp"
#include "tubelab/rng.hpp"
#include "tubelab/tube.hpp"

using namespace tubelab;

namespace {

Polyline circle_xy(real radius, int n, Vec3 center = {}) {
  std::vector<Vec3> v;
  for (int i = 0; i < n; ++i) {
    const real t = 2 * kPi * i / n;
    v.push_back(center + Vec3{radius * std::cos(t), radius * std::sin(t), 0});
  }
  return Polyline::closed(v);
}

// Circle of radius 1 in the xz-plane centered at (1,0,0), running from +x
// toward +z.  Its spanning disk meets the unit xy-circle once, against the
// disk orientation, so the pair links with sign -1.
Polyline hopf_partner(int n) {
  std::vector<Vec3> v;
  for (int i = 0; i < n; ++i) {
    const real t = 2 * kPi * i / n;
    v.push_back({1 + std::cos(t), 0, std::sin(t)});
  }
  return Polyline::closed(v);
}

Polyline reversed(const Polyline& p) {
  std::vector<Vec3> v(p.vertices().rbegin(), p.vertices().rend());
  return Polyline::closed(v);
}

// Closed loop from random low harmonics; nullopt-style retries live in the
// caller, which resamples on validation failure.
Polyline random_loop(Rng& rng) {
  Vec3 a1{rng.uniform(0.8L, 1.2L), rng.uniform_sym() * 0.3L,
          rng.uniform_sym() * 0.3L};
  Vec3 b1{rng.uniform_sym() * 0.3L, rng.uniform(0.8L, 1.2L),
          rng.uniform_sym() * 0.3L};
  Vec3 a2{rng.uniform_sym() * 0.2L, rng.uniform_sym() * 0.2L,
          rng.uniform_sym() * 0.2L};
  Vec3 b2{rng.uniform_sym() * 0.2L, rng.uniform_sym() * 0.2L,
          rng.uniform_sym() * 0.2L};
  Vec3 a3{rng.uniform_sym() * 0.1L, rng.uniform_sym() * 0.1L,
          rng.uniform_sym() * 0.1L};
  const Vec3 shift{rng.uniform_sym(), rng.uniform_sym(), rng.uniform_sym()};
  std::vector<Vec3> v;
  const int n = 48;
  for (int i = 0; i < n; ++i) {
    const real t = 2 * kPi * i / n;
    v.push_back(shift + a1 * std::cos(t) + b1 * std::sin(t) +
                a2 * std::cos(2 * t) + b2 * std::sin(2 * t) +
                a3 * std::cos(3 * t));
  }
  return Polyline::closed(v);
}

}  // namespace

TEST_CASE("linking sign convention pinned by a disk count") {
  const Polyline a = circle_xy(1.0L, 64);
  const Polyline b = hopf_partner(64);
  CHECK(linking_gauss(a, b) == -1);
  Rng rng(7);
  CHECK(linking_projection(a, b, rng) == -1);
  CHECK(linking_number(a, b) == -1);
  CHECK(linking_number(b, a) == -1);  // symmetric

  CHECK(linking_number(a, reversed(b)) == 1);
  CHECK(linking_number(reversed(a), reversed(b)) == -1);
}

TEST_CASE("split and unlinked pairs have linking zero") {
  const Polyline a = circle_xy(1.0L, 48);
  const Polyline far = circle_xy(1.0L, 48, {5, 0, 0});
  CHECK(linking_number(a, far) == 0);
  const Polyline above = circle_xy(0.3L, 48, {0, 0, 2});
  CHECK(linking_number(a, above) == 0);
}

TEST_CASE("double wind around the core links twice") {
  const Polyline a = circle_xy(1.0L, 64);
  // Curve on the torus around a, winding twice in the meridian direction.
  // Both meridian passes cross the spanning disk downward: linking -2.
  std::vector<Vec3> v;
  const int n = 256;
  const real r = 0.4L;
  for (int i = 0; i < n; ++i) {
    const real t = 2 * kPi * i / n;
    const real rad = 1 + r * std::cos(2 * t);
    v.push_back({rad * std::cos(t), rad * std::sin(t), r * std::sin(2 * t)});
  }
  const Polyline b = Polyline::closed(v);
  CHECK(linking_gauss(a, b) == -2);
  Rng rng(11);
  CHECK(linking_projection(a, b, rng) == -2);
}

TEST_CASE("tightly linked circles still resolve") {
  const Polyline a = circle_xy(1.0L, 96);
  // Oversized partner whose inner rim passes within 0.05 of the far side
  // of a, so the direction-map quadrilaterals there get large.
  std::vector<Vec3> v;
  for (int i = 0; i < 96; ++i) {
    const real t = 2 * kPi * i / 96;
    v.push_back({1 + 1.95L * std::cos(t), 0, 1.95L * std::sin(t)});
  }
  const Polyline b = Polyline::closed(v);
  CHECK(dist_polylines(a, b) < 0.06L);
  CHECK(dist_polylines(a, b) > 0.03L);
  CHECK(linking_number(a, b) == -1);
}

TEST_CASE("gauss and projection agree on 200 seeded loop pairs") {
  Rng base(20260816);
  int built = 0;
  int attempts = 0;
  while (built < 200 && attempts < 4000) {
    Rng item = Rng(99).fork(static_cast<std::uint64_t>(attempts));
    ++attempts;
    try {
      Polyline a = random_loop(item);
      Polyline b = random_loop(item);
      if (dist_polylines(a, b) < 1e-3L) continue;
      const int g = linking_gauss(a, b);
      Rng proj = base.fork(static_cast<std::uint64_t>(built));
      const int p = linking_projection(a, b, proj);
      CHECK(g == p);
      ++built;
    } catch (const Error&) {
      continue;  // resample invalid or touching geometry
    }
  }
  CHECK(built == 200);
}

TEST_CASE("meridian crossings count sign and multiplicity") {
  const Polyline a = circle_xy(1.0L, 128);

  Disk d;
  d.center = {1, 0, 0};
  d.normal = {0, 1, 0};  // tangent direction of a at its rightmost point
  d.radius = 0.3L;

  SUBCASE("single pass along the normal") {
    const MeridianHits h = meridian_intersections(a, d);
    CHECK(h.signed_total == 1);
    CHECK(h.unsigned_total == 1);
    REQUIRE(h.crossings.size() == 1);
    const real s = h.crossings[0].param;
    CHECK(std::min(s, a.length() - s) < 0.08L);  // at the rightmost point
  }

  SUBCASE("single pass against the normal") {
    Disk flipped = d;
    flipped.normal = {0, -1, 0};
    const MeridianHits h = meridian_intersections(a, flipped);
    CHECK(h.signed_total == -1);
    CHECK(h.unsigned_total == 1);
  }

  SUBCASE("null-homologous double pass") {
    const Polyline small = circle_xy(0.2L, 32, {1, 0, 0});
    const MeridianHits h = meridian_intersections(small, d);
    CHECK(h.signed_total == 0);
    CHECK(h.unsigned_total == 2);
    REQUIRE(h.crossings.size() == 2);
    CHECK(h.crossings[0].sign + h.crossings[1].sign == 0);
  }

  SUBCASE("missing the disk entirely") {
    const Polyline off = circle_xy(0.2L, 32, {4, 0, 0});
    const MeridianHits h = meridian_intersections(off, d);
    CHECK(h.signed_total == 0);
    CHECK(h.unsigned_total == 0);
    CHECK(h.crossings.empty());
  }

  SUBCASE("vertex touching the plane resolves by jitter") {
    // Loop living in y >= 0 dipping to the disk plane at one vertex inside
    // the disk: transversality comes from the jittered retries.
    std::vector<Vec3> v;
    const int n = 32;
    for (int i = 0; i < n; ++i) {
      const real t = 2 * kPi * i / n;
      v.push_back({1 + 0.1L * std::cos(t),
                   0.2L * (1 - std::cos(t)) / 2, 0.1L * std::sin(t)});
    }
    v[0].y = 0;  // exact touch
    const Polyline touch = Polyline::closed(v);
    const MeridianHits h = meridian_intersections(touch, d);
    CHECK(h.signed_total == 0);
    CHECK(h.unsigned_total % 2 == 0);
  }
}
