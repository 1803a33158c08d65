#pragma once

#include <vector>

#include "tubelab/vec3.hpp"

namespace tubelab {

// Closed simple polygonal curve in R^3.  The edge from the last vertex back
// to the first is implicit; arclength parameters wrap modulo length().
class Polyline {
 public:
  // Validates and builds: at least 8 vertices, no degenerate edges, no
  // doubling back at a vertex, and no two non-adjacent edges touching.
  // feature_scale, when positive, tells validation how small genuine
  // features are; deeply nested construction needs this because feature
  // size there sits many orders below curve extent.
  static Polyline closed(std::vector<Vec3> vertices, real feature_scale = 0);

  int size() const { return static_cast<int>(v_.size()); }
  const std::vector<Vec3>& vertices() const { return v_; }
  const Vec3& vertex(int i) const;  // cyclic index
  real length() const { return total_; }

  // cum_length(i) is the arclength from vertex 0 to cyclic vertex i.
  real cum_length(int i) const;
  real segment_length(int i) const;

  Vec3 point_at(real s) const;
  Vec3 tangent_at(real s) const;  // unit tangent of the containing segment
  int segment_index(real s) const;
  // Wraps any real parameter into [0, length()).
  real wrap(real s) const;
  // Cyclic arclength separation, the shorter way around.
  real arc_distance(real s0, real s1) const;

 private:
  std::vector<Vec3> v_;
  std::vector<real> cum_;  // size n+1, cum_[n] == total_
  real total_ = 0;
};

struct Frame {
  Vec3 t, n, b;  // right-handed orthonormal: b == cross(t, n)
};

// Rotation-minimizing frames at each vertex (double reflection), with the
// holonomy twist of the closed loop spread uniformly in arclength so the
// framing closes up.
std::vector<Frame> rm_frames(const Polyline& p);

// Frame at parameter s, interpolated between vertex frames and
// re-orthonormalized.
Frame frame_at(const Polyline& p, const std::vector<Frame>& frames, real s);

// Discrete curvature at vertex i: 2 sin(turn/2) / sqrt(l_prev * l_next).
// For a regular polygon inscribed in a circle of radius R this is exactly
// 1/R, which keeps tube validity thresholds free of mesh-dependent slack.
real vertex_curvature(const Polyline& p, int i);
real max_curvature(const Polyline& p);

// Smallest distance between non-adjacent edges that genuinely double back:
// pairs whose along-curve separation exceeds 1.4x their Euclidean distance.
// Pairs below that ratio are the curve passing along itself and say nothing
// about embeddable tube thickness.  Returns +inf when no pair qualifies.
real self_clearance(const Polyline& p);
// Same value capped at cutoff: exact for results < cutoff, returns cutoff
// otherwise.  Grid-accelerated, meant for small cutoffs on long curves.
real self_clearance_below(const Polyline& p, real cutoff);

// Max pairwise distance.  Exact pairwise scan up to 10000 points; larger
// inputs go through a convex hull first.
real diameter(const std::vector<Vec3>& pts);
real diameter(const Polyline& p);

real dist_point_segment(const Vec3& x, const Vec3& a, const Vec3& b);
// Closest-approach distance of segments [p1,q1] and [p2,q2]; optionally
// reports the parameters of the closest points.
real dist_segments(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                   const Vec3& q2, real* s_out = nullptr, real* t_out = nullptr);
real dist_to_polyline(const Vec3& x, const Polyline& p);
real dist_polylines(const Polyline& a, const Polyline& b);

}  // namespace tubelab
