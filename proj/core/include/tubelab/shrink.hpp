#pragma once

#include <map>
#include <utility>
#include <vector>

#include "tubelab/bing.hpp"
#include "tubelab/tube.hpp"
#include "tubelab/word.hpp"

namespace tubelab {

// Meridian disks of a base tube, cyclically ordered along its core.  Disk i
// is centered at arc position (i + 1/2) * spacing, so disks sit mid-gap
// between sample points rather than on curve vertices.
struct DiskSystem {
  std::vector<Disk> disks;  // size 2m
  real spacing = 0;         // consecutive center gap along the core
  real core_length = 0;
};

// How one tube core meets the disk ring: the met disks form a single
// cyclically consecutive window and the core crosses each of them twice,
// once per strand, with cancelling signs.
struct IncidenceRow {
  int first_disk = 0;               // global index of the window start
  int disk_count = 0;               // window length
  std::vector<int> multiplicities;  // measured crossings per window disk
};

// One cascade stage, fully materialized: every tube of depth stage+1
// together with its measured incidence.  Stage k tubes meet m-k+1 disks.
struct ShrinkState {
  int stage = 0;
  DiskSystem disk_system;
  std::map<Word, Tube> tubes;
  std::map<Word, IncidenceRow> incidence;
  PairStyle style = PairStyle::kQuadrant;
};

// Everything a finished cascade certifies.  stage_tables[k] holds a row for
// every word of length k+1; radii holds one value per tube depth present
// (the per-level maximum), strictly decreasing; final_diameters maps each
// deepest word to the measured diameter of its solid tube, i.e. the vertex
// set diameter plus a radius on each side.
struct ShrinkCertificate {
  int m = 0;
  real epsilon = 0;
  std::vector<std::map<Word, IncidenceRow>> stage_tables;
  std::map<Word, real> final_diameters;
  std::vector<real> radii;
};

// 2m disks of radius delta0 with arc spacing <= eps/2, so every core point
// is within eps/4 of a disk center along the curve.  Each disk must cross
// the core exactly once; delta0 beyond the curvature scale or half the
// core's self-clearance throws radius-too-large.
std::pair<int, DiskSystem> plan_disks(const Polyline& core, real eps,
                                      real delta0);

// Splits the root into the stage-0 pair.  Each child meets m+1 consecutive
// disks: the two halves of the ring, sharing the two boundary disks.
ShrinkState begin_shrink(const Tube& root, real eps,
                         PairStyle style = PairStyle::kQuadrant);

// One cascade stage: every tube is replaced by a child pair, the first
// child keeping all but the last window disk, the second all but the
// first.  Throws infeasible-schedule at stage m, where windows are single
// disks and cannot shrink further.
ShrinkState shrink_step(const ShrinkState& state);

// Full cascade to the single-disk stage.  The disk ring is planned from
// eps with disk radius equal to the root radius; children are quadrant
// pairs, whose larger per-level radius is what keeps deep stages above
// roundoff.  Every row of every stage table is re-measured from raw
// geometry, and all final solid-tube diameters must come out below eps.
ShrinkCertificate run_shrink(const Tube& root, real eps);

// Interlaced two-factor cascade.  Both factors are shrunk with the same
// number of stages (the finer schedule wins) down to depth m where their
// measured diameters reach eps*delta0/20; children are paired style, the
// cheapest per stage for the tracked distortion product, which must stay
// within 8/delta0 or budget-exceeded is thrown.  Certificate rows are keyed
// by interlaced addresses; final values are the certified diameter bounds
// (8/delta0) * (diam_a + diam_b + delta_m), each below eps.
ShrinkCertificate run_bb_shrink(const Tube& root_a, const Tube& root_b,
                                real eps, real delta0);

// One cascade sized for the finest target, snapshotted once per target:
// k_i is the first stage past k_{i-1} whose tubes all measure below
// target i, and certificate i is the cascade prefix through stage k_i.
// Later entries extend earlier ones, so earlier incidence data is shared
// verbatim.  Targets must be positive and strictly decreasing.
std::vector<std::pair<int, ShrinkCertificate>> iterate_shrink(
    const Tube& root, const std::vector<real>& targets);

}  // namespace tubelab
