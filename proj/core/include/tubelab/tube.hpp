#pragma once

#include <vector>

#include "tubelab/polyline.hpp"
#include "tubelab/vec3.hpp"
#include "tubelab/word.hpp"

namespace tubelab {

// Solid tube: the set of points within `radius` of the core curve.  The
// distortion field bounds how far the normal-disk chart of the tube deviates
// from an isometry; it is 1/(1 - radius * max_curvature).
struct Tube {
  Polyline core;
  real radius = 0;
  real distortion = 1;
  Word label;  // address in the ambient nesting tree, empty for a root
};

// Regular polygon inscribed in the circle of the given radius, in the
// xy-plane, centered at the origin.
Polyline make_round_core(real radius, int n_vertices);

// Validates that a tube of this radius embeds around the core (radius below
// both the curvature scale and half the self-clearance) and computes the
// chart distortion bound.  Throws radius-too-large otherwise.
Tube tube_of(const Polyline& core, real radius, Word label = {});

// Flat spanning disk transverse to a core: center, unit normal, radius, and
// the core parameter it sits at.
struct Disk {
  Vec3 center;
  Vec3 normal;
  real radius = 0;
  real param = 0;
};

// 2m meridian disks equally spaced along the tube core, consecutive spacing
// at most eps/2.  m = max(1, ceil(length / eps)).
std::vector<Disk> plan_disks(const Tube& tube, real eps);

// A pair of tubes whose nesting addresses combine by letter interlace, with
// the diameter budget their union must respect.
struct InterlacedTube {
  Tube a, b;
  real diam_bound = 0;
};

// Pairs two tubes and records the diameter budget
// budget * (diam(a) + diam(b) + max radius).
InterlacedTube interlaced_tube(const Tube& a, const Tube& b, real budget);

// True when x lies inside the tube (within radius of the core).
bool tube_contains(const Tube& t, const Vec3& x);
// True when every vertex of the inner core is inside the outer tube with
// the inner tube's thickness to spare.
bool tube_contains_tube(const Tube& outer, const Tube& inner);

}  // namespace tubelab
