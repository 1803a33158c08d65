#pragma once

#include <vector>

#include "tubelab/bing.hpp"
#include "tubelab/tube.hpp"
#include "tubelab/word.hpp"

namespace tubelab {

// What was verified about one internal node's child pair at build time.
// The hook counts are measurements, not pass bits: a clasped pair shows 2
// per direction, scheduled pairs 0, and downstream audits branch on that.
struct NestingCertificate {
  Word parent;
  int hooks_first = 0;   // piercings of child 2 through child 1's fans
  int hooks_second = 0;  // and the reverse
  bool unlinked = false;  // linking number zero by both routes
  bool balanced = false;  // every probe disk: signed zero, even unsigned
  bool nested = false;    // both child tubes inside the parent tube
  bool disjoint = false;  // sibling tubes separated beyond their thickness

  bool ok() const { return unlinked && balanced && nested && disjoint; }
};

// Dyadic nesting of tubes, fully materialized: heap order, root at index
// 0, children of i at 2i+1 and 2i+2, every level down to `depth`.
struct TubeTree {
  std::vector<Tube> nodes;
  std::vector<NestingCertificate> certificates;  // internal nodes, in order
  int depth = 0;
  PairStyle style = PairStyle::kClasped;

  static int level_begin(int k) { return (1 << k) - 1; }
  static int level_end(int k) { return (1 << (k + 1)) - 1; }
  const Tube& at(const Word& w) const;
};

// Child tube radius from measured clearances: a quarter of the smaller of
// sibling separation and the room left between child strands and the
// parent wall.
real quarter_rule_radius(const Tube& parent, const Polyline& a,
                         const Polyline& b);

// Builds the tree by recursive child-pair insertion.  kClasped nests the
// hooked template; the scheduled styles re-plan four meridian disks at
// every node and split them into overlapping half windows.  With certify,
// each internal node gets a NestingCertificate; building never hides a
// failed check behind a default.
TubeTree build_tube_tree(const Tube& root, int depth,
                         PairStyle style = PairStyle::kClasped,
                         bool certify = true);

}  // namespace tubelab
