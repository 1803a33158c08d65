#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tubelab/real.hpp"
#include "tubelab/tube_tree.hpp"
#include "tubelab/vec3.hpp"
#include "tubelab/word.hpp"

namespace tubelab {

// One voxel mesh, shared by every copy stamped from it.  The 3D factor is a
// list of voxel centers in model coordinates; a circle factor with
// circle_steps > 1 turns each voxel into that many product cells.
struct MeshModel {
  std::vector<Vec3> pos;  // voxel centers of the 3D factor
  std::vector<int> plug;  // 3D indices of voxels on the outer wall
  real pitch = 0;
  int circle_steps = 1;  // 1 means no circle factor
  real arc = 0;          // circle edge length 2*pi/steps, 0 without a factor
  int cell_count() const {
    return static_cast<int>(pos.size()) * circle_steps;
  }
};

// A stamped copy of a mesh model.  Cells of a piece occupy one contiguous
// id range, which keeps piece lookups O(1) and cell sets cheap to group.
struct ComplexPiece {
  Word word;  // address inside its tree
  int tree = 0;        // planted-tree number; -1 marks ambient filler
  int depth = 0;       // scaling exponent: lengths shrink by lambda^depth
  int model = 0;       // index into SemmesComplex::models
  int first_cell = 0;
  int cell_count = 0;
};

struct ComplexCell {
  int piece = 0;
  int model_id = 0;  // 3d_index * circle_steps + step in the piece's model
  real weight = 0;   // lambda^(n*depth) times the model cell volume
};

struct ComplexEdge {
  int a = 0;
  int b = 0;
  real length = 0;
};

// Weighted cell complex over a tube nesting: the region between a tube and
// its two children is meshed once, and one copy is stamped per tree word
// with all lengths scaled by lambda^depth and all cell weights by
// lambda^(n*depth).  Copies glue to their parent across the child-tube
// interface, so the whole graph is connected while each subtree is an exact
// scaled replica of the full complex truncated to its remaining depth.
struct SemmesComplex {
  real lambda = 0.4L;
  int n = 3;  // weight dimension, 3 or 4 (4 adds the circle factor)
  real tolerance = 2.0L;  // allowed copy-versus-model distance distortion
  bool connected = false;
  real reach = 0;  // max distance from cell 0 within its component

  std::vector<MeshModel> models;
  std::vector<ComplexPiece> pieces;
  std::vector<ComplexCell> cells;
  std::vector<ComplexEdge> edges;

  // CSR adjacency mirroring `edges`, rebuilt by finalize().
  std::vector<int> adj_start;
  std::vector<int> adj_cell;
  std::vector<real> adj_len;

  int cell_id(int piece, int model_id) const;
  Vec3 cell_pos(int id) const;    // 3D-factor voxel center, model coordinates
  real cell_angle(int id) const;  // circle-factor angle, 0 without a factor
};

// Nesting whose cores are all translated circles and whose child tubes keep
// a fixed, generous share of the parent thickness (ratio 29/90).  The
// linking-driven builders size children off measured clearances and end up
// far thinner than any practical voxel pitch; this tree exists so metric
// audits can mesh every feature.  Certificates are not populated.
TubeTree metric_model_tree(int depth);

// Builds the stamped complex for the full dyadic word set of the tree.
// mesh_scale is the voxel pitch of the model region; child tubes thinner
// than the pitch are carved at ~3/4 voxel so the annulus topology survives
// coarsening.  Throws mesh_too_coarse when the model region is too small,
// disconnected, or fails to separate the child tubes; config_invalid for
// parameter misuse; size_exceeded when the stamped complex would be huge.
SemmesComplex build_complex(const TubeTree& tree, real lambda,
                            real mesh_scale, int n = 3);

// Recomputes the adjacency and reach after edge surgery.  Does not throw on
// a disconnected graph; it records the fact instead so audits can flag it.
void finalize(SemmesComplex& c);

// Rescales every length by `factor` and every weight by factor^n.
void scale_complex(SemmesComplex& c, real factor);

// Piece index of a word in a single-tree complex (level order, matching
// TubeTree node indices).
int piece_index(const SemmesComplex& c, const Word& w);

// Shortest-path distance between cells.  Label-setting with ties broken on
// cell id, and always measured from the lower id, so symmetry is an
// identity rather than a summation-order accident.
real distance(const SemmesComplex& c, int x, int y);

// All cells within `radius` of the center, with their distances, sorted by
// cell id.
std::vector<std::pair<int, real>> metric_ball(const SemmesComplex& c,
                                              int center, real radius);

// Cell ids at one stamping depth (across all planted trees), sorted.
std::vector<int> depth_cells(const SemmesComplex& c, int k);
// Cell ids of one piece, sorted.
std::vector<int> piece_cells(const SemmesComplex& c, int piece);

// Total weight of a set of distinct cell ids.  Grouped per piece before
// summing; with equal per-piece weights the result is count * weight up to
// one rounding per piece, which is what makes the level law testable at
// 1e-12 and additivity at a few ulps.
real measure(const SemmesComplex& c, const std::vector<int>& cell_set);

struct RegularitySample {
  int center = 0;
  real radius = 0;
  real measure = 0;
  real ratio = 0;  // measure / radius^n
};

struct RegularityReport {
  std::vector<RegularitySample> samples;
  real ratio_min = 0;
  real ratio_max = 0;
};

// Seeded ball-measure survey: centers uniform over cells, radii log-uniform
// between the center's own resolution scale and a fixed fraction of the
// reach, so every sampled radius stays below the diameter.
RegularityReport audit_regularity(const SemmesComplex& c, int sample_count,
                                  std::uint64_t seed);

// Worst factor C over seeded samples such that cell pairs inside a ball
// B(x, r) are joined inside B(x, C*r).  Joins may route through the center's
// shortest-path tree, so a connected complex reports exactly 1; the audit's
// signal is the infinity returned when the complex has come apart.
real audit_connectivity(const SemmesComplex& c, int sample_count,
                        std::uint64_t seed);

// Max over sampled model cell pairs (x, y) of the ratio between the distance
// of their copies under the word w and lambda^|w| times the model distance,
// folded with its reciprocal.  1 exactly for the empty word.
real quasi_self_similarity_check(const SemmesComplex& c, const Word& w,
                                 int pair_count, std::uint64_t seed);

// Radius of the k-th planted ball at center e1/k: at most a tenth of the
// center norm, shrinking fast enough that consecutive balls never touch.
real planted_ball_radius(int k);

// Plants K tube-tree complexes of depths 1..K in disjoint balls B(e1/k,
// r_k) inside one meshed ambient ball, glued where each tree's outer wall
// meets the ambient mesh.  Ambient cells weigh their plain voxel volume;
// tree cells keep their stamped weights times the placement scale^n.
SemmesComplex assemble_point_singularity(int K, real lambda, int n);

// Graph dump {"cells": [...], "edges": [...], "lambda": ...}.
std::string complex_json(const SemmesComplex& c);
// CSV with columns center_id,radius,measure,ratio.
std::string regularity_csv(const RegularityReport& r);

}  // namespace tubelab
