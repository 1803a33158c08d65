#pragma once

#include <optional>
#include <vector>

#include "tubelab/polyline.hpp"
#include "tubelab/tube.hpp"

namespace tubelab {

// How a child pair sits inside its parent tube.
enum class PairStyle {
  // Caps interlock at two junctions with opposite crossing signs: the pair
  // is inseparable but has linking number zero.  This is the pattern the
  // essential-intersection lower bounds rest on.
  kClasped,
  // Strands at +/-N and +/-B with plain turnback caps, no hooks.  Each
  // child straddles the parent core, so a sibling whose window overlaps at
  // one end only would get threaded by this child's cap: safe for windows
  // that are disjoint or share both ends (a root split), not for the
  // staggered windows of deeper stages.
  kPaired,
  // Strands at (N,B) and (-N,-B), no hooks.  Largest child radius per
  // stage, which is what keeps very deep nests above roundoff.
  kQuadrant,
};

struct BingParams {
  // Strand offset as a fraction of parent radius (clasped style; scheduled
  // styles balance the offset against clearances and gaps themselves).
  real offset_ratio = 0.36L;
  // First junction as a fraction of core length (clasped style).
  real junction_at = 0.37L;
  // Interior sample count per cap arc.
  int cap_samples = 10;
  // Fraction of the free gap a cap may reach along the core (scheduled).
  real cap_gap_fraction = 0.7L;
};

// A prescription of which disks each child must cross exactly twice.  Disk
// indices refer to positions in `disks`, which is cyclically ordered along
// the base curve.
struct BingSchedule {
  std::vector<Disk> disks;
  std::vector<int> first_window;
  std::vector<int> second_window;
  PairStyle style = PairStyle::kQuadrant;
};

// One child loop plus a triangulation of the surface it bounds: the ribbon
// between its two strands and the two turnback fans.  The fans are kept
// separate because sibling piercings through them are what distinguishes a
// clasped pair from a merely adjacent one.
struct BingChild {
  Polyline loop;
  std::vector<Triangle> ribbon;
  std::vector<Triangle> caps;
};

struct BingChildren {
  BingChild first, second;
};

// The two-component child pattern inside a parent tube, as bare cores.
// Without a schedule: the clasped pair.  With one: hook-free loops whose
// strands cross exactly the prescribed disks, twice each with opposite
// signs; a window that is not a consecutive run of the parent's crossing
// sequence throws infeasible-schedule.
BingChildren bing_children(const Tube& parent,
                           const std::optional<BingSchedule>& schedule = {},
                           const BingParams& params = {});

}  // namespace tubelab
