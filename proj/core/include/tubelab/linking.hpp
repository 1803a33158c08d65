#pragma once

#include <cstdint>
#include <vector>

#include "tubelab/polyline.hpp"
#include "tubelab/rng.hpp"
#include "tubelab/tube.hpp"

namespace tubelab {

// Linking number of two disjoint closed curves via the degree of the
// pairwise direction map: each segment pair contributes the signed area of a
// spherical quadrilateral of difference directions, triangulated and summed.
// Exact for polylines up to roundoff; the integer-rounding residual is
// checked and a large residual throws non-transverse.
int linking_gauss(const Polyline& a, const Polyline& b);

// The same invariant from signed crossings in a random axonometric
// projection.  Directions producing near-degenerate crossings are redrawn
// from rng, at most 8 times, then non-transverse is thrown.
int linking_projection(const Polyline& a, const Polyline& b, Rng& rng);

// Both routes, which must agree; a disagreement means one route silently
// lost a crossing and is reported as non-transverse rather than guessed at.
int linking_number(const Polyline& a, const Polyline& b,
                   std::uint64_t seed = 2026);

struct DiskCrossing {
  real param = 0;  // arclength along the curve
  int sign = 0;    // +1 along the disk normal, -1 against it
};

struct MeridianHits {
  int signed_total = 0;
  int unsigned_total = 0;
  std::vector<DiskCrossing> crossings;  // ordered by param
};

// Transverse intersections of a closed curve with a flat spanning disk.
// Grazing configurations (vertex on the plane near the disk, crossing at the
// rim, segment lying in the plane) are retried with the disk jittered by
// 1e-9 of its radius, at most 8 times, then non-transverse is thrown.
MeridianHits meridian_intersections(const Polyline& curve, const Disk& disk);

// Transverse piercings of a triangulated surface patch by a closed curve.
// Signs follow the triangle orientations.  Hits too close to a triangle
// edge or a curve vertex are resolved by retrying with the surface shifted
// by 1e-9 of its extent, at most 8 times, then non-transverse is thrown.
MeridianHits surface_crossings(const Polyline& curve,
                               const std::vector<Triangle>& surface);

}  // namespace tubelab
