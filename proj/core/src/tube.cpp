#include "tubelab/tube.hpp"

#include <cmath>
#include <string>

#include "tubelab/error.hpp"

namespace tubelab {

Polyline make_round_core(real radius, int n_vertices) {
  if (radius <= 0) {
    throw Error(errc::infeasible_geometry, "circle radius must be positive");
  }
  std::vector<Vec3> v;
  v.reserve(std::size_t(std::max(n_vertices, 0)));
  for (int i = 0; i < n_vertices; ++i) {
    const real a = 2 * kPi * i / n_vertices;
    v.push_back({radius * std::cos(a), radius * std::sin(a), 0});
  }
  return Polyline::closed(std::move(v));
}

Tube tube_of(const Polyline& core, real radius, Word label) {
  if (radius <= 0) {
    throw Error(errc::infeasible_geometry, "tube radius must be positive");
  }
  const real kappa = max_curvature(core);
  if (radius * kappa >= 1) {
    throw Error(errc::radius_too_large,
                "radius " + std::to_string(double(radius)) +
                    " reaches the curvature scale 1/" +
                    std::to_string(double(kappa)));
  }
  const real clear2 = self_clearance_below(core, real(2.125) * radius);
  if (clear2 <= 2 * radius) {
    throw Error(errc::radius_too_large,
                "radius " + std::to_string(double(radius)) +
                    " exceeds half the self-clearance " +
                    std::to_string(double(clear2)));
  }
  Tube t;
  t.core = core;
  t.radius = radius;
  t.distortion = 1 / (1 - radius * kappa);
  t.label = std::move(label);
  return t;
}

std::vector<Disk> plan_disks(const Tube& tube, real eps) {
  if (eps <= 0) {
    throw Error(errc::infeasible_schedule, "disk spacing eps must be positive");
  }
  const real L = tube.core.length();
  const int m = std::max(1, static_cast<int>(std::ceil(L / eps)));
  std::vector<Disk> disks;
  disks.reserve(std::size_t(2 * m));
  for (int i = 0; i < 2 * m; ++i) {
    const real s = L * i / real(2 * m);
    Disk d;
    d.param = s;
    d.center = tube.core.point_at(s);
    d.normal = tube.core.tangent_at(s);
    d.radius = tube.radius;
    disks.push_back(d);
  }
  return disks;
}

InterlacedTube interlaced_tube(const Tube& a, const Tube& b, real budget) {
  if (budget <= 0) {
    throw Error(errc::budget_exceeded, "diameter budget must be positive");
  }
  InterlacedTube it;
  it.a = a;
  it.b = b;
  it.diam_bound =
      budget * (diameter(a.core) + diameter(b.core) + std::max(a.radius, b.radius));
  return it;
}

bool tube_contains(const Tube& t, const Vec3& x) {
  return dist_to_polyline(x, t.core) <= t.radius;
}

bool tube_contains_tube(const Tube& outer, const Tube& inner) {
  for (const Vec3& x : inner.core.vertices()) {
    if (dist_to_polyline(x, outer.core) + inner.radius > outer.radius) {
      return false;
    }
  }
  return true;
}

}  // namespace tubelab
