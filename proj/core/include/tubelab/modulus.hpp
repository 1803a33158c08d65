#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tubelab/complex.hpp"
#include "tubelab/real.hpp"
#include "tubelab/word.hpp"

namespace tubelab {

// Sparse nonnegative mass over cells: each entry is (cell id, mass carried on
// that cell).  Entries are sorted by cell id and unique.
struct Surface {
  std::vector<std::pair<int, real>> mass;

  real total() const {
    real t = 0;
    for (const auto& [id, m] : mass) t += m;
    return t;
  }
};

struct SurfaceFamily {
  std::vector<Surface> members;
};

enum class OracleMode { kAuto, kOff, kForce };

struct ModulusOptions {
  real tol = 1e-9L;        // relative duality-gap target
  long max_iter = 20000;   // subgradient phase budget
  bool kkt_polish = true;  // dual Newton refinement after the subgradient phase
  int threads = 1;
  OracleMode oracle = OracleMode::kAuto;
};

struct ModulusResult {
  real p = 2;
  real value = 0;
  std::vector<real> density;  // indexed by cell id
  real admissibility_slack = 0;
  long iterations = 0;
  bool converged = false;
  std::optional<real> oracle_gap;
};

// (ok, slack): ok iff every member integrates rho to at least 1; slack is the
// worst member integral minus 1.  Empty families are vacuously admissible.
std::pair<bool, real> is_admissible(const std::vector<real>& rho,
                                    const SurfaceFamily& fam);

// Least p-energy of a density that every member integrates to at least 1.
// The returned density is always admissible (rescaled before reporting), so
// the value is a true upper bound for the discrete optimum even when the
// iteration budget runs out (converged = false).
ModulusResult modulus(const SurfaceFamily& fam, real p,
                      const std::vector<real>& volume,
                      const ModulusOptions& opts = {});

// Independent check solver: cyclic dual coordinate ascent with exact
// one-dimensional solves, certified by the duality gap.  Guarded to small
// instances (cells <= 5000, members <= 500).
real lp_oracle(const SurfaceFamily& fam, real p,
               const std::vector<real>& volume);

// Closed-form optimum for a family of exactly one member.
real one_member_modulus(const Surface& s, real p,
                        const std::vector<real>& volume);

// Base-times-fiber mesh: square cells of side h whose centers lie in the
// planar annulus, crossed with an evenly meshed (n-2)-torus fiber.  Cell id
// = base_index * fiber.size() + fiber_index.
struct ProductGrid {
  real h = 0;
  std::vector<std::array<real, 2>> base;  // kept base cell centers
  real base_area = 0;                     // h^2 * base.size()
  std::vector<real> fiber;                // fiber cell measures
  int n = 3;
};

ProductGrid annulus_product_grid(real r_in, real r_out, real h, int n,
                                 int fiber_steps);
std::vector<real> grid_volumes(const ProductGrid& g);

// One member per base cell, supported on that cell's fiber column with the
// fiber cell measures as masses.
SurfaceFamily product_family(const ProductGrid& g);

// Cell weights of a complex as a dense volume vector for the solvers.
std::vector<real> complex_volumes(const SemmesComplex& c);

// fiber_measure^(-2/(n-2)) * area: what constant densities achieve on a
// product family, hence a floor for its modulus.
real lower_bound_holder(real area, real fiber_measure, int n);

// diam^n / (c * delta^(n-2))^(n/(n-2)) with c the (n-2)-ball volume (2 for
// n = 3, pi for n = 4): the decay bound driven by shrunk tube diameters.
real upper_bound_boxing(real diam, real delta, int n);

// Seeded sample of displaced core circles (crossed with the whole fiber
// circle when n = 4) inside the copy at word w, avoiding the carved child
// regions; masses are intrinsic lengths/areas on that copy's cells.  Samples
// are drawn in a fixed sequence, so a smaller count yields a prefix of a
// larger one at the same seed.
SurfaceFamily core_family(const SemmesComplex& c, const Word& w,
                          int sample_count, std::uint64_t seed);

}  // namespace tubelab
