#include "tubelab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "doctest.h"
#include "tubelab/complex.hpp"
#include "tubelab/error.hpp"
#include "tubelab/rng.hpp"

using namespace tubelab;

namespace {

bool close_rel(real a, real b, real tol) {
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

real energy(const std::vector<real>& rho, real p,
            const std::vector<real>& vol) {
  real e = 0;
  for (std::size_t i = 0; i < vol.size(); ++i)
    e += vol[i] * std::pow(rho[i], p);
  return e;
}

// Random overlapping family on `cells` cells; every member gets between
// `lo_sup` and `hi_sup` support cells with masses in [0.1, 1.1).
SurfaceFamily random_family(Rng& rng, int cells, int members, int lo_sup,
                            int hi_sup) {
  SurfaceFamily fam;
  for (int s = 0; s < members; ++s) {
    const int sup =
        lo_sup + static_cast<int>(rng.next_u64() %
                                  static_cast<std::uint64_t>(hi_sup - lo_sup + 1));
    std::vector<int> ids(static_cast<std::size_t>(cells));
    std::iota(ids.begin(), ids.end(), 0);
    for (int j = 0; j < sup; ++j) {
      const std::size_t k =
          static_cast<std::size_t>(j) +
          rng.next_u64() % (ids.size() - static_cast<std::size_t>(j));
      std::swap(ids[static_cast<std::size_t>(j)], ids[k]);
    }
    Surface m;
    for (int j = 0; j < sup; ++j)
      m.mass.emplace_back(ids[static_cast<std::size_t>(j)],
                          rng.uniform(0.1L, 1.1L));
    std::sort(m.mass.begin(), m.mass.end());
    fam.members.push_back(std::move(m));
  }
  return fam;
}

std::vector<real> random_volumes(Rng& rng, int cells, real lo, real hi) {
  std::vector<real> vol(static_cast<std::size_t>(cells));
  for (real& v : vol) v = rng.uniform(lo, hi);
  return vol;
}

}  // namespace

TEST_CASE("modulus: admissibility reports the worst member") {
  SurfaceFamily fam;
  fam.members.push_back({{{0, 1.0L}, {2, 3.0L}}});
  fam.members.push_back({{{1, 2.0L}, {3, 2.0L}}});

  const std::vector<real> zero(4, 0.0L);
  const auto [ok0, s0] = is_admissible(zero, fam);
  CHECK(!ok0);
  CHECK(s0 == -1.0L);

  // Every member totals 4, so the constant 1/4 integrates to exactly 1.
  const std::vector<real> quarter(4, 0.25L);
  const auto [ok1, s1] = is_admissible(quarter, fam);
  CHECK(ok1);
  CHECK(s1 == 0.0L);

  // First member now integrates to 0.875, second to 1.0.
  const std::vector<real> rho = {0.5L, 0.25L, 0.125L, 0.25L};
  const auto [ok2, s2] = is_admissible(rho, fam);
  CHECK(!ok2);
  CHECK(s2 == -0.125L);

  // Indicator density at height 1/(c * delta) against members whose mass
  // inside the support reaches c * delta: admissible with nonnegative slack.
  const real cd = 2.0L * 0.1L;
  SurfaceFamily cores;
  cores.members.push_back({{{0, cd}, {1, 0.07L}}});
  cores.members.push_back({{{1, 0.5L * cd}, {2, 0.6L * cd}}});
  std::vector<real> chi(3, 1.0L / cd);
  const auto [ok3, s3] = is_admissible(chi, cores);
  CHECK(ok3);
  CHECK(s3 >= 0.0L);
}

TEST_CASE("modulus: one-member families match the closed form") {
  Surface s;
  for (int i = 0; i < 8; ++i) s.mass.emplace_back(i, 0.25L);
  const std::vector<real> vol(8, 0.5L);
  // Uniform masses m = 1/4 over 8 cells of volume 1/2: constant density is
  // optimal by symmetry, so p = 2 gives (sum m^2/v)^-1 = 1 and p = 3 gives
  // rho = 1/2 with energy 8 * (1/2) * (1/2)^3 = 1/2.
  CHECK(close_rel(one_member_modulus(s, 2, vol), 1.0L, 1e-15L));
  CHECK(close_rel(one_member_modulus(s, 3, vol), 0.5L, 1e-15L));

  // Uneven instance: W = 1/0.5 + 9/2 = 6.5, value = 2/13.
  Surface t;
  t.mass = {{0, 1.0L}, {1, 3.0L}};
  const std::vector<real> vt = {0.5L, 2.0L};
  CHECK(close_rel(one_member_modulus(t, 2, vt), 2.0L / 13, 1e-15L));

  SurfaceFamily fam;
  fam.members.push_back(s);
  const ModulusResult r = modulus(fam, 2, vol);
  CHECK(r.converged);
  CHECK(r.p == 2.0L);
  CHECK(close_rel(r.value, 1.0L, 1e-8L));
  CHECK(r.admissibility_slack >= -1e-9L);
  REQUIRE(r.oracle_gap.has_value());
  CHECK(*r.oracle_gap <= 1e-6L);
  CHECK(close_rel(energy(r.density, 2, vol), r.value, 1e-12L));

  CHECK(close_rel(lp_oracle(fam, 2, vol), 1.0L, 1e-9L));
  CHECK(close_rel(lp_oracle(fam, 3, vol), 0.5L, 1e-9L));

  SurfaceFamily uneven;
  uneven.members.push_back(t);
  CHECK(close_rel(lp_oracle(uneven, 2, vt), 2.0L / 13, 1e-9L));
}

TEST_CASE("modulus: disjoint copies decouple and add") {
  Surface a, b;
  for (int i = 0; i < 5; ++i) {
    const real m = 0.2L + 0.1L * i;
    a.mass.emplace_back(i, m);
    b.mass.emplace_back(i + 5, m);
  }
  std::vector<real> vol(10);
  for (int i = 0; i < 10; ++i) vol[static_cast<std::size_t>(i)] = 0.3L + 0.05L * (i % 5);

  const real single = one_member_modulus(a, 3, vol);
  SurfaceFamily fam;
  fam.members = {a, b};
  const ModulusResult r = modulus(fam, 3, vol);
  CHECK(r.converged);
  CHECK(close_rel(r.value, 2 * single, 1e-8L));
  CHECK(close_rel(lp_oracle(fam, 3, vol), 2 * single, 1e-9L));
}

TEST_CASE("modulus: product families hit the analytic value") {
  // h = 1/4 keeps 40 base cells: discrete area 2.5, value 2.5/(4 pi^2).
  const ProductGrid g3 = annulus_product_grid(0.5L, 1.0L, 0.25L, 3, 32);
  REQUIRE(g3.base.size() == 40);
  CHECK(close_rel(g3.base_area, 2.5L, 1e-15L));
  CHECK(close_rel(std::accumulate(g3.fiber.begin(), g3.fiber.end(), 0.0L),
                  2 * kPi, 1e-12L));

  const SurfaceFamily f3 = product_family(g3);
  REQUIRE(f3.members.size() == 40);
  const std::vector<real> v3 = grid_volumes(g3);
  REQUIRE(v3.size() == 40 * 32);

  const real expect4 = 2.5L / (4 * kPi * kPi);
  const ModulusResult r3 = modulus(f3, 3, v3);
  CHECK(r3.converged);
  CHECK(close_rel(r3.value, expect4, 1e-8L));
  REQUIRE(r3.oracle_gap.has_value());
  CHECK(*r3.oracle_gap <= 1e-6L * r3.value);
  CHECK(r3.admissibility_slack >= -1e-9L);

  // Same base in n = 4: the fiber measure (2 pi)^2 at exponent p = 2 gives
  // the identical value.
  const ProductGrid g4 = annulus_product_grid(0.5L, 1.0L, 0.25L, 4, 8);
  REQUIRE(g4.fiber.size() == 64);
  const ModulusResult r4 = modulus(product_family(g4), 2, grid_volumes(g4));
  CHECK(r4.converged);
  CHECK(close_rel(r4.value, expect4, 1e-8L));

  // Refinement moves toward 3/(16 pi) and never drops below the
  // constant-density floor.
  const ProductGrid g8 = annulus_product_grid(0.5L, 1.0L, 0.125L, 3, 32);
  REQUIRE(g8.base.size() == 156);
  const ModulusResult r8 = modulus(product_family(g8), 3, grid_volumes(g8));
  CHECK(close_rel(r8.value, 2.4375L / (4 * kPi * kPi), 1e-8L));
  REQUIRE(r8.oracle_gap.has_value());
  CHECK(*r8.oracle_gap <= 1e-6L * r8.value);

  const real limit = 3.0L / (16 * kPi);
  CHECK(std::fabs(r8.value - limit) < std::fabs(r3.value - limit));
  const real floor3 = lower_bound_holder(3 * kPi / 4, 2 * kPi, 3);
  CHECK(r3.value >= 0.95L * floor3);
  CHECK(r8.value >= 0.95L * floor3);
}

TEST_CASE("modulus: constant-density floor formula") {
  CHECK(lower_bound_holder(0.0L, 5.0L, 3) == 0.0L);
  CHECK(close_rel(lower_bound_holder(3 * kPi / 4, 4 * kPi * kPi, 4),
                  3.0L / (16 * kPi), 1e-15L));
  CHECK(close_rel(lower_bound_holder(1.0L, 2 * kPi, 3), 1.0L / (4 * kPi * kPi),
                  1e-15L));
  CHECK_THROWS_AS(lower_bound_holder(1.0L, 0.0L, 3), Error);
  CHECK_THROWS_AS(lower_bound_holder(1.0L, 1.0L, 2), Error);
}

TEST_CASE("modulus: diameter-decay ceiling formula") {
  CHECK(close_rel(upper_bound_boxing(0.5L, 0.1L, 3), 15.625L, 1e-12L));
  CHECK(close_rel(upper_bound_boxing(1.0L, 0.5L, 4), 16 / (kPi * kPi),
                  1e-15L));
  // Halving the diameter in n = 3 divides the ceiling by 8.
  CHECK(close_rel(upper_bound_boxing(0.25L, 0.1L, 3), 15.625L / 8, 1e-12L));
  CHECK(upper_bound_boxing(1e-9L, 0.1L, 3) < 1e-20L);
  CHECK_THROWS_AS(upper_bound_boxing(1.0L, 0.0L, 3), Error);
  CHECK_THROWS_AS(upper_bound_boxing(1.0L, 0.1L, 5), Error);
}

TEST_CASE("modulus: conformal exponent cancels uniform scaling") {
  Rng rng(101);
  const SurfaceFamily fam = random_family(rng, 60, 8, 6, 12);
  const std::vector<real> vol = random_volumes(rng, 60, 0.1L, 0.9L);

  for (const int n : {3, 4}) {
    const real p = static_cast<real>(n) / (n - 2);
    const real s = 1.7L;
    SurfaceFamily scaled = fam;
    for (Surface& m : scaled.members)
      for (auto& [id, mass] : m.mass)
        mass *= std::pow(s, static_cast<real>(n - 2));
    std::vector<real> vols = vol;
    for (real& v : vols) v *= std::pow(s, static_cast<real>(n));

    const real base = lp_oracle(fam, p, vol);
    const real moved = lp_oracle(scaled, p, vols);
    CHECK(close_rel(base, moved, 1e-9L));

    const ModulusResult rb = modulus(fam, p, vol);
    const ModulusResult rm = modulus(scaled, p, vols);
    CHECK(close_rel(rb.value, rm.value, 1e-9L));
  }
}

TEST_CASE("modulus: more members never lower the value") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Rng local = rng.fork(static_cast<std::uint64_t>(trial));
    const std::vector<real> vol = random_volumes(local, 40, 0.2L, 1.0L);
    const SurfaceFamily big = random_family(local, 40, 5, 4, 9);
    SurfaceFamily small;
    small.members.assign(big.members.begin(), big.members.begin() + 3);
    const real p = trial % 2 ? 3.0L : 2.0L;
    const real lo = lp_oracle(small, p, vol);
    const real hi = lp_oracle(big, p, vol);
    CHECK(hi >= lo - 1e-9L);
  }
}

TEST_CASE("modulus: fatter members only lower the value") {
  Rng rng(19);
  for (int trial = 0; trial < 12; ++trial) {
    Rng local = rng.fork(static_cast<std::uint64_t>(trial));
    const std::vector<real> vol = random_volumes(local, 30, 0.2L, 1.0L);
    const SurfaceFamily lean = random_family(local, 30, 4, 4, 8);
    // Every fat member dominates its lean counterpart cellwise.
    SurfaceFamily fat = lean;
    for (Surface& m : fat.members) {
      for (auto& [id, mass] : m.mass) mass *= 1 + local.uniform(0.0L, 0.8L);
      const int extra = static_cast<int>(local.next_u64() % 3);
      for (int j = 0; j < extra; ++j) {
        const int id = static_cast<int>(local.next_u64() % 30);
        bool present = false;
        for (const auto& [eid, em] : m.mass) present |= eid == id;
        if (!present) m.mass.emplace_back(id, local.uniform(0.1L, 0.5L));
      }
      std::sort(m.mass.begin(), m.mass.end());
    }

    // Admissibility transfers from the lean family to the fat one.
    std::vector<real> rho = random_volumes(local, 30, 0.0L, 2.0L);
    real worst = std::numeric_limits<real>::infinity();
    for (const Surface& m : lean.members) {
      real integral = 0;
      for (const auto& [id, mass] : m.mass)
        integral += rho[static_cast<std::size_t>(id)] * mass;
      worst = std::min(worst, integral);
    }
    if (worst > 0) {
      for (real& x : rho) x /= worst;
      CHECK(is_admissible(rho, lean).first);
      CHECK(is_admissible(rho, fat).first);
    }

    const real p = trial % 2 ? 3.0L : 2.0L;
    CHECK(lp_oracle(fat, p, vol) <= lp_oracle(lean, p, vol) + 1e-9L);
  }
}

TEST_CASE("modulus: sampled core rings scale conformally across levels") {
  const SemmesComplex c = build_complex(metric_model_tree(3), 0.4L, 0.14L);
  const std::vector<real> vol = complex_volumes(c);
  REQUIRE(vol.size() == c.cells.size());

  const SurfaceFamily one = core_family(c, "", 1, 3);
  REQUIRE(one.members.size() == 1);
  CHECK(one.members[0].total() > 0);

  const SurfaceFamily f0 = core_family(c, "", 6, 3);
  const SurfaceFamily f0s = core_family(c, "", 3, 3);
  REQUIRE(f0.members.size() == 6);
  REQUIRE(f0s.members.size() == 3);
  // Same seed, smaller count: a prefix of the same sample sequence.
  CHECK(f0s.members[2].mass == f0.members[2].mass);

  // Members of the root family live on root-piece cells.
  const int root_cells = c.pieces[0].cell_count;
  for (const Surface& m : f0.members) {
    CHECK(!m.mass.empty());
    for (const auto& [id, mass] : m.mass) {
      CHECK(id < root_cells);
      CHECK(mass > 0);
    }
  }

  ModulusOptions opts;
  opts.oracle = OracleMode::kOff;
  const ModulusResult r0 = modulus(f0, 3, vol, opts);
  const ModulusResult rs = modulus(f0s, 3, vol, opts);
  CHECK(r0.converged);
  CHECK(r0.value > 0);
  CHECK(r0.admissibility_slack >= -1e-9L);
  // Sub-sampling only drops constraints.
  CHECK(r0.value >= rs.value - 1e-9L);

  // Two levels down, mass scales as lambda^(n-2) and volume as lambda^n, so
  // the conformal-exponent energy is unchanged.
  const SurfaceFamily f2 = core_family(c, "11", 6, 3);
  const ModulusResult r2 = modulus(f2, 3, vol, opts);
  CHECK(close_rel(r0.value, r2.value, 1e-6L));
}

TEST_CASE("modulus: primal and oracle sandwich the optimum") {
  Rng rng(23);
  for (int trial = 0; trial < 6; ++trial) {
    Rng local = rng.fork(static_cast<std::uint64_t>(trial));
    const std::vector<real> vol = random_volumes(local, 80, 0.1L, 1.0L);
    const SurfaceFamily fam = random_family(local, 80, 12, 8, 20);
    const real p = trial % 2 ? 3.0L : 2.0L;

    const ModulusResult r = modulus(fam, p, vol);
    REQUIRE(r.oracle_gap.has_value());
    CHECK(*r.oracle_gap <= 1e-6L * std::max(1.0L, r.value));
    CHECK(r.admissibility_slack >= -1e-9L);
    CHECK(close_rel(energy(r.density, p, vol), r.value, 1e-12L));

    const real exact = lp_oracle(fam, p, vol);
    CHECK(r.value >= exact - 1e-6L);

    // Any admissible density costs at least the reported optimum.
    for (int j = 0; j < 5; ++j) {
      std::vector<real> rho = random_volumes(local, 80, 0.0L, 2.0L);
      real worst = std::numeric_limits<real>::infinity();
      for (const Surface& m : fam.members) {
        real integral = 0;
        for (const auto& [id, mass] : m.mass)
          integral += rho[static_cast<std::size_t>(id)] * mass;
        worst = std::min(worst, integral);
      }
      if (!(worst > 0)) continue;
      for (real& x : rho) x /= worst;
      CHECK(energy(rho, p, vol) >= r.value - 1e-9L * std::max(1.0L, r.value));
    }
  }
}

TEST_CASE("modulus: identical digits across thread counts") {
  const ProductGrid g = annulus_product_grid(0.5L, 1.0L, 0.25L, 3, 16);
  const SurfaceFamily fam = product_family(g);
  const std::vector<real> vol = grid_volumes(g);
  ModulusOptions a, b;
  a.threads = 1;
  b.threads = 4;
  const ModulusResult ra = modulus(fam, 3, vol, a);
  const ModulusResult rb = modulus(fam, 3, vol, b);
  CHECK(ra.value == rb.value);
  CHECK(ra.density == rb.density);
  CHECK(ra.iterations == rb.iterations);
}

TEST_CASE("modulus: exhausted budgets still return certified upper bounds") {
  Rng rng(57);
  const std::vector<real> vol = random_volumes(rng, 50, 0.2L, 1.0L);
  const SurfaceFamily fam = random_family(rng, 50, 8, 5, 12);

  ModulusOptions opts;
  opts.max_iter = 5;
  opts.kkt_polish = false;
  opts.oracle = OracleMode::kOff;
  const ModulusResult r = modulus(fam, 3, vol, opts);
  CHECK(!r.converged);
  CHECK(r.admissibility_slack >= -1e-9L);
  CHECK(close_rel(energy(r.density, 3, vol), r.value, 1e-12L));
  const real exact = lp_oracle(fam, 3, vol);
  CHECK(r.value >= exact - 1e-9L);
}

TEST_CASE("modulus: size and validity guards") {
  const std::vector<real> vol_small(10, 1.0L);
  SurfaceFamily ok;
  ok.members.push_back({{{0, 1.0L}}});

  std::vector<real> vol_big(5001, 1.0L);
  CHECK_THROWS_WITH_AS(static_cast<void>(lp_oracle(ok, 2, vol_big)),
                       doctest::Contains("size-exceeded"), Error);

  SurfaceFamily crowd;
  for (int i = 0; i < 501; ++i) crowd.members.push_back({{{i % 10, 1.0L}}});
  CHECK_THROWS_WITH_AS(static_cast<void>(lp_oracle(crowd, 2, vol_small)),
                       doctest::Contains("size-exceeded"), Error);

  SurfaceFamily empty_member;
  empty_member.members.push_back({});
  CHECK_THROWS_AS(static_cast<void>(modulus(empty_member, 2, vol_small)),
                  Error);
  CHECK_THROWS_AS(static_cast<void>(lp_oracle(empty_member, 2, vol_small)),
                  Error);

  SurfaceFamily dangling;
  dangling.members.push_back({{{99, 1.0L}}});
  CHECK_THROWS_AS(static_cast<void>(modulus(dangling, 2, vol_small)), Error);

  SurfaceFamily negative;
  negative.members.push_back({{{0, -1.0L}, {1, 2.0L}}});
  CHECK_THROWS_AS(static_cast<void>(modulus(negative, 2, vol_small)), Error);

  CHECK_THROWS_AS(static_cast<void>(modulus(ok, 1.0L, vol_small)), Error);
  CHECK_THROWS_AS(static_cast<void>(modulus(SurfaceFamily{}, 2, vol_small)),
                  Error);

  CHECK_THROWS_AS(annulus_product_grid(0.5L, 1.0L, 0.0L, 3, 8), Error);
  CHECK_THROWS_AS(annulus_product_grid(0.5L, 1.0L, 0.25L, 3, 0), Error);
  CHECK_THROWS_AS(annulus_product_grid(1.0L, 0.5L, 0.25L, 3, 8), Error);
  CHECK_THROWS_AS(annulus_product_grid(0.5L, 1.0L, 0.25L, 5, 8), Error);
  // A band thinner than the mesh resolves no cells.
  CHECK_THROWS_WITH_AS(annulus_product_grid(0.9L, 0.905L, 0.5L, 3, 8),
                       doctest::Contains("mesh-too-coarse"), Error);
}
