#include "tubelab/modulus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tubelab/error.hpp"
#include "tubelab/rng.hpp"

namespace tubelab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

void validate_problem(const SurfaceFamily& fam, real p,
                      const std::vector<real>& volume) {
  if (!(p > 1))
    throw Error(errc::config_invalid, "exponent p must exceed 1");
  if (fam.members.empty())
    throw Error(errc::config_invalid, "family has no members");
  for (const Surface& m : fam.members) {
    if (m.mass.empty())
      throw Error(errc::config_invalid, "family member has empty support");
    real total = 0;
    int prev = -1;
    for (const auto& [id, mass] : m.mass) {
      if (id < 0 || static_cast<std::size_t>(id) >= volume.size())
        throw Error(errc::config_invalid,
                    "member references missing cell " + std::to_string(id));
      if (id <= prev)
        throw Error(errc::config_invalid,
                    "member support must be sorted and duplicate-free");
      if (!(mass >= 0))
        throw Error(errc::config_invalid, "member mass must be nonnegative");
      prev = id;
      total += mass;
    }
    if (!(total > 0))
      throw Error(errc::config_invalid, "family member carries no mass");
  }
}

// The optimum vanishes off the union support, so the solvers work on the
// referenced cells only and scatter the density back at the end.
struct Compact {
  std::vector<int> cells;  // compact index -> original cell id, ascending
  std::vector<real> vol;
  std::vector<std::vector<std::pair<int, real>>> sup;
};

Compact compact_problem(const SurfaceFamily& fam,
                        const std::vector<real>& volume) {
  Compact c;
  std::vector<int> map(volume.size(), -1);
  for (const Surface& m : fam.members)
    for (const auto& [id, mass] : m.mass)
      if (map[static_cast<std::size_t>(id)] < 0) {
        map[static_cast<std::size_t>(id)] = 0;
        c.cells.push_back(id);
      }
  std::sort(c.cells.begin(), c.cells.end());
  for (std::size_t i = 0; i < c.cells.size(); ++i)
    map[static_cast<std::size_t>(c.cells[i])] = static_cast<int>(i);
  c.vol.reserve(c.cells.size());
  for (int id : c.cells) {
    const real v = volume[static_cast<std::size_t>(id)];
    if (!(v > 0))
      throw Error(errc::config_invalid,
                  "cell " + std::to_string(id) + " has nonpositive volume");
    c.vol.push_back(v);
  }
  c.sup.reserve(fam.members.size());
  for (const Surface& m : fam.members) {
    std::vector<std::pair<int, real>> s;
    s.reserve(m.mass.size());
    for (const auto& [id, mass] : m.mass)
      s.emplace_back(map[static_cast<std::size_t>(id)], mass);
    c.sup.push_back(std::move(s));
  }
  return c;
}

// Every member integral is accumulated serially in support order, so the
// result is bit-identical no matter how members are spread across threads.
void member_integrals(const Compact& c, const std::vector<real>& rho,
                      int threads, std::vector<real>& out) {
  const int m = static_cast<int>(c.sup.size());
  out.resize(static_cast<std::size_t>(m));
  auto run = [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      real acc = 0;
      for (const auto& [id, mass] : c.sup[static_cast<std::size_t>(s)])
        acc += rho[static_cast<std::size_t>(id)] * mass;
      out[static_cast<std::size_t>(s)] = acc;
    }
  };
  if (threads <= 1 || m < 64) {
    run(0, m);
    return;
  }
  const int t = std::min(threads, 8);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  const int chunk = (m + t - 1) / t;
  for (int i = 0; i < t; ++i)
    pool.emplace_back(run, i * chunk, std::min(m, (i + 1) * chunk));
  for (std::thread& th : pool) th.join();
}

real energy_of(const Compact& c, const std::vector<real>& rho, real p) {
  real e = 0;
  if (p == 2) {
    for (std::size_t i = 0; i < c.vol.size(); ++i)
      e += c.vol[i] * rho[i] * rho[i];
  } else if (p == 3) {
    for (std::size_t i = 0; i < c.vol.size(); ++i)
      e += c.vol[i] * rho[i] * rho[i] * rho[i];
  } else {
    for (std::size_t i = 0; i < c.vol.size(); ++i)
      e += c.vol[i] * std::pow(rho[i], p);
  }
  return e;
}

// rho(a) = (a / (p vol))^(1/(p-1)): the pointwise KKT stationarity map from
// the weighted constraint load a to the optimal density.
real rho_of_load(real a, real vol, real p) {
  if (!(a > 0)) return 0;
  const real base = a / (p * vol);
  if (p == 2) return base;
  if (p == 3) return std::sqrt(base);
  return std::pow(base, 1 / (p - 1));
}

// Standalone dual weight that makes a single member integrate its own
// stationary density to exactly 1.
real standalone_weight(const Compact& c, int s, real p) {
  real acc = 0;
  for (const auto& [id, mass] : c.sup[static_cast<std::size_t>(s)])
    acc += mass * rho_of_load(mass, c.vol[static_cast<std::size_t>(id)], p);
  // rho is (1/(p-1))-homogeneous in the load, so scale by acc^-(p-1).
  return std::pow(acc, -(p - 1));
}

void loads_from_mu(const Compact& c, const std::vector<real>& mu,
                   std::vector<real>& a) {
  a.assign(c.vol.size(), 0);
  for (std::size_t s = 0; s < c.sup.size(); ++s) {
    if (mu[s] == 0) continue;
    for (const auto& [id, mass] : c.sup[s])
      a[static_cast<std::size_t>(id)] += mu[s] * mass;
  }
}

struct DualState {
  real upper = kInf;    // energy of the rescaled feasible density
  real lower = -kInf;   // Lagrangian dual value
  std::vector<real> rho_hat;
  bool certified = false;
};

// Evaluate both sandwich sides at a dual point mu.
DualState evaluate_dual(const Compact& c, const std::vector<real>& mu, real p,
                        real tol) {
  DualState st;
  std::vector<real> a;
  loads_from_mu(c, mu, a);
  std::vector<real> rho(c.vol.size());
  for (std::size_t i = 0; i < rho.size(); ++i)
    rho[i] = rho_of_load(a[i], c.vol[i], p);
  const real raw = energy_of(c, rho, p);
  real mu_sum = 0;
  for (real m : mu) mu_sum += m;
  st.lower = mu_sum - (p - 1) * raw;

  std::vector<real> integrals;
  member_integrals(c, rho, 1, integrals);
  real min_i = kInf;
  for (real v : integrals) min_i = std::min(min_i, v);
  if (min_i > 0) {
    st.rho_hat = rho;
    for (real& r : st.rho_hat) r /= min_i;
    st.upper = energy_of(c, st.rho_hat, p);
    st.certified = st.upper - st.lower <= tol * std::max(1.0L, st.upper);
  }
  return st;
}

// Cyclic coordinate ascent on the dual: each member's weight is solved
// exactly in one dimension (Newton inside a doubling bracket), which keeps
// this solver free of linear algebra and of the primal code path.
DualState dual_ascent(const Compact& c, real p, real tol, long max_sweeps) {
  const std::size_t m = c.sup.size();
  std::vector<real> mu(m, 0);
  std::vector<real> a(c.vol.size(), 0);

  auto member_flux = [&](std::size_t s, const std::vector<real>& base,
                         real x) {
    real acc = 0;
    for (const auto& [id, mass] : c.sup[s]) {
      const std::size_t i = static_cast<std::size_t>(id);
      acc += mass * rho_of_load(base[i] + x * mass, c.vol[i], p);
    }
    return acc;
  };

  DualState best;
  std::vector<real> base(c.vol.size());
  for (long sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t s = 0; s < m; ++s) {
      for (const auto& [id, mass] : c.sup[s]) {
        const std::size_t i = static_cast<std::size_t>(id);
        base[i] = std::max<real>(0, a[i] - mu[s] * mass);
      }
      real x = 0;
      if (member_flux(s, base, 0) < 1) {
        real lo = 0, hi = std::max<real>(mu[s], standalone_weight(c, s, p));
        while (member_flux(s, base, hi) < 1) {
          hi *= 2;
          if (!(hi < kInf))
            throw Error(errc::budget_exceeded,
                        "dual bracket diverged; member mass degenerate");
        }
        x = 0.5L * (lo + hi);
        for (int it = 0; it < 80; ++it) {
          const real f = member_flux(s, base, x) - 1;
          if (std::fabs(f) <= 1e-17L) break;
          if (f > 0)
            hi = x;
          else
            lo = x;
          // Newton using the exact slope of the flux in x.
          real slope = 0;
          for (const auto& [id, mass] : c.sup[s]) {
            const std::size_t i = static_cast<std::size_t>(id);
            const real load = base[i] + x * mass;
            if (load > 0)
              slope += mass * mass *
                       rho_of_load(load, c.vol[i], p) / ((p - 1) * load);
          }
          real nx = slope > 0 ? x - f / slope : x;
          if (!(nx > lo) || !(nx < hi)) nx = 0.5L * (lo + hi);
          if (nx == x) break;
          x = nx;
        }
      }
      for (const auto& [id, mass] : c.sup[s]) {
        const std::size_t i = static_cast<std::size_t>(id);
        a[i] = base[i] + x * mass;
      }
      mu[s] = x;
    }
    const DualState st = evaluate_dual(c, mu, p, tol);
    if (st.upper < best.upper || !best.certified) best = st;
    if (best.certified) return best;
  }
  return best;
}

void polish_seed(const Compact& c, real p, std::vector<real>& mu,
                 const std::vector<real>& integrals) {
  // Seed near-active members with their standalone weights.
  for (std::size_t s = 0; s < mu.size(); ++s)
    mu[s] = integrals[s] <= 1 + 1e-4L ? standalone_weight(c, s, p) : 0;
}

}  // namespace

std::pair<bool, real> is_admissible(const std::vector<real>& rho,
                                    const SurfaceFamily& fam) {
  if (fam.members.empty()) return {true, 0};
  real worst = kInf;
  for (const Surface& m : fam.members) {
    real integral = 0;
    for (const auto& [id, mass] : m.mass)
      if (id >= 0 && static_cast<std::size_t>(id) < rho.size())
        integral += rho[static_cast<std::size_t>(id)] * mass;
    worst = std::min(worst, integral);
  }
  return {worst >= 1, worst - 1};
}

real one_member_modulus(const Surface& s, real p,
                        const std::vector<real>& volume) {
  SurfaceFamily fam;
  fam.members.push_back(s);
  validate_problem(fam, p, volume);
  real w = 0;
  for (const auto& [id, mass] : s.mass) {
    const real v = volume[static_cast<std::size_t>(id)];
    if (!(v > 0))
      throw Error(errc::config_invalid,
                  "cell " + std::to_string(id) + " has nonpositive volume");
    w += std::pow(mass, p / (p - 1)) * std::pow(v, -1 / (p - 1));
  }
  return std::pow(w, 1 - p);
}

real lp_oracle(const SurfaceFamily& fam, real p,
               const std::vector<real>& volume) {
  if (volume.size() > 5000)
    throw Error(errc::size_exceeded,
                "oracle is limited to 5000 cells, got " +
                    std::to_string(volume.size()));
  if (fam.members.size() > 500)
    throw Error(errc::size_exceeded,
                "oracle is limited to 500 members, got " +
                    std::to_string(fam.members.size()));
  validate_problem(fam, p, volume);
  const Compact c = compact_problem(fam, volume);
  // Aim two orders below the advertised certificate so independent runs of
  // near-identical instances agree far inside the comparison tolerances.
  const DualState st = dual_ascent(c, p, 1e-12L, 20000);
  if (!st.certified &&
      !(st.upper - st.lower <= 1e-9L * std::max(1.0L, st.upper)))
    throw Error(errc::budget_exceeded,
                "oracle failed to certify the duality gap");
  return st.upper;
}

ModulusResult modulus(const SurfaceFamily& fam, real p,
                      const std::vector<real>& volume,
                      const ModulusOptions& opts) {
  validate_problem(fam, p, volume);
  if (!(opts.tol > 0))
    throw Error(errc::config_invalid, "tolerance must be positive");
  const Compact c = compact_problem(fam, volume);
  const std::size_t n = c.vol.size();
  const std::size_t m = c.sup.size();

  real min_total = kInf;
  for (const Surface& s : fam.members) min_total = std::min(min_total, s.total());

  std::vector<real> rho(n, 1 / min_total);
  std::vector<real> best_rho = rho;
  real best_e = kInf;
  real dual_floor = -kInf;
  long iterations = 0;
  std::vector<real> integrals, grad(n);

  // Phase 1: subgradient descent on the energy with a feasibility rescale
  // every step, so each iterate yields a certified admissible density.
  int stale = 0;
  for (long iter = 0; iter < opts.max_iter; ++iter) {
    ++iterations;
    member_integrals(c, rho, opts.threads, integrals);
    real min_i = kInf;
    for (real v : integrals) min_i = std::min(min_i, v);
    if (!(min_i > 0)) {
      rho = best_rho;
      continue;
    }
    for (real& r : rho) r /= min_i;
    const real e = energy_of(c, rho, p);
    if (e < best_e * (1 - 1e-12L)) {
      best_e = e;
      best_rho = rho;
      stale = 0;
    } else if (++stale > 300) {
      break;
    }

    real gnorm2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const real r = rho[i];
      const real g =
          p * c.vol[i] * (p == 2 ? r : (p == 3 ? r * r : std::pow(r, p - 1)));
      grad[i] = g;
      gnorm2 += g * g;
    }
    if (!(gnorm2 > 0)) break;
    const real target =
        best_e * (1 - 0.25L / std::sqrt(1.0L + static_cast<real>(iter)));
    real step = (e - target) / gnorm2;
    if (!(step > 0)) step = 1e-3L / (1 + static_cast<real>(iter));
    for (std::size_t i = 0; i < n; ++i)
      rho[i] = std::max<real>(0, rho[i] - step * grad[i]);
  }

  // Phase 2: dual refinement.  Jacobi-style Newton steps on the member
  // weights with a monotone line search; the diagonal model is exact when
  // supports are disjoint and a safe damped direction otherwise.
  if (opts.kkt_polish) {
    const real target = opts.tol * 1e-3L;
    member_integrals(c, best_rho, opts.threads, integrals);
    std::vector<real> mu(m, 0);
    polish_seed(c, p, mu, integrals);
    DualState cur = evaluate_dual(c, mu, p, target);
    std::vector<real> delta(m), trial(m);
    for (int it = 0; it < 300 && !cur.certified; ++it) {
      ++iterations;
      std::vector<real> a;
      loads_from_mu(c, mu, a);
      std::vector<real> rho_mu(n);
      for (std::size_t i = 0; i < n; ++i)
        rho_mu[i] = rho_of_load(a[i], c.vol[i], p);
      member_integrals(c, rho_mu, opts.threads, integrals);
      bool any = false;
      for (std::size_t s = 0; s < m; ++s) {
        const real h = 1 - integrals[s];
        if (mu[s] == 0 && h <= 0) {
          delta[s] = 0;
          continue;
        }
        real diag = 0;
        bool cold = false;
        for (const auto& [id, mass] : c.sup[s]) {
          const std::size_t i = static_cast<std::size_t>(id);
          if (a[i] > 0)
            diag += mass * mass * rho_mu[i] / ((p - 1) * a[i]);
          else if (mass > 0)
            cold = true;
        }
        if (cold && h > 0)
          delta[s] = standalone_weight(c, s, p) - mu[s];
        else if (diag > 0)
          delta[s] = h / diag;
        else
          delta[s] = 0;
        any |= delta[s] != 0;
      }
      if (!any) break;
      real alpha = 1;
      bool moved = false;
      for (int half = 0; half < 14; ++half, alpha /= 2) {
        for (std::size_t s = 0; s < m; ++s)
          trial[s] = std::max<real>(0, mu[s] + alpha * delta[s]);
        const DualState st = evaluate_dual(c, trial, p, target);
        if (st.lower >= cur.lower ||
            (st.upper < cur.upper && st.lower > -kInf)) {
          mu = trial;
          cur = st;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (cur.upper < best_e && !cur.rho_hat.empty()) {
      best_e = cur.upper;
      best_rho = cur.rho_hat;
    }
    dual_floor = std::max(dual_floor, cur.lower);
  }

  // Exact final rescale, then report.
  member_integrals(c, best_rho, opts.threads, integrals);
  real min_i = kInf;
  for (real v : integrals) min_i = std::min(min_i, v);
  for (real& r : best_rho) r /= min_i;
  member_integrals(c, best_rho, opts.threads, integrals);
  real slack = kInf;
  for (real v : integrals) slack = std::min(slack, v);
  slack -= 1;

  ModulusResult out;
  out.p = p;
  out.value = energy_of(c, best_rho, p);
  out.density.assign(volume.size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    out.density[static_cast<std::size_t>(c.cells[i])] = best_rho[i];
  out.admissibility_slack = slack;
  out.iterations = iterations;
  out.converged =
      out.value - dual_floor <= opts.tol * std::max(1.0L, out.value);
  if (slack < -1e-9L)
    throw Error(errc::infeasible_geometry,
                "reported density failed its own admissibility check");

  const bool oracle_fits = volume.size() <= 5000 && fam.members.size() <= 500;
  if (opts.oracle == OracleMode::kForce ||
      (opts.oracle == OracleMode::kAuto && oracle_fits)) {
    const DualState st = dual_ascent(c, p, 1e-9L, 20000);
    if (st.certified) out.oracle_gap = std::fabs(out.value - st.upper);
  }
  return out;
}

ProductGrid annulus_product_grid(real r_in, real r_out, real h, int n,
                                 int fiber_steps) {
  if (!(h > 0))
    throw Error(errc::config_invalid, "mesh size must be positive");
  if (!(r_in >= 0) || !(r_out > r_in))
    throw Error(errc::config_invalid, "need 0 <= inner radius < outer radius");
  if (fiber_steps < 1)
    throw Error(errc::config_invalid, "fiber needs at least one cell");
  if (n != 3 && n != 4)
    throw Error(errc::config_invalid, "dimension must be 3 or 4");

  ProductGrid g;
  g.h = h;
  g.n = n;
  const int reach = static_cast<int>(r_out / h) + 2;
  for (int j = -reach; j < reach; ++j)
    for (int i = -reach; i < reach; ++i) {
      const real x = (i + 0.5L) * h;
      const real y = (j + 0.5L) * h;
      const real r2 = x * x + y * y;
      if (r2 > r_in * r_in && r2 <= r_out * r_out) g.base.push_back({x, y});
    }
  if (g.base.empty())
    throw Error(errc::mesh_too_coarse, "annulus mesh kept no cells at h " +
                                           std::to_string(static_cast<double>(h)));
  g.base_area = h * h * static_cast<real>(g.base.size());

  const real arc = 2 * kPi / fiber_steps;
  if (n == 3) {
    g.fiber.assign(static_cast<std::size_t>(fiber_steps), arc);
  } else {
    g.fiber.assign(static_cast<std::size_t>(fiber_steps) *
                       static_cast<std::size_t>(fiber_steps),
                   arc * arc);
  }
  return g;
}

std::vector<real> grid_volumes(const ProductGrid& g) {
  std::vector<real> vol;
  vol.reserve(g.base.size() * g.fiber.size());
  for (std::size_t b = 0; b < g.base.size(); ++b)
    for (const real f : g.fiber) vol.push_back(g.h * g.h * f);
  return vol;
}

SurfaceFamily product_family(const ProductGrid& g) {
  SurfaceFamily fam;
  const int f = static_cast<int>(g.fiber.size());
  fam.members.reserve(g.base.size());
  for (std::size_t b = 0; b < g.base.size(); ++b) {
    Surface m;
    m.mass.reserve(g.fiber.size());
    for (int i = 0; i < f; ++i)
      m.mass.emplace_back(static_cast<int>(b) * f + i, g.fiber[static_cast<std::size_t>(i)]);
    fam.members.push_back(std::move(m));
  }
  return fam;
}

std::vector<real> complex_volumes(const SemmesComplex& c) {
  std::vector<real> vol;
  vol.reserve(c.cells.size());
  for (const ComplexCell& cell : c.cells) vol.push_back(cell.weight);
  return vol;
}

real lower_bound_holder(real area, real fiber_measure, int n) {
  if (n < 3)
    throw Error(errc::config_invalid, "dimension must be at least 3");
  if (!(fiber_measure > 0))
    throw Error(errc::config_invalid, "fiber measure must be positive");
  if (!(area >= 0))
    throw Error(errc::config_invalid, "area must be nonnegative");
  return std::pow(fiber_measure, -2.0L / (n - 2)) * area;
}

real upper_bound_boxing(real diam, real delta, int n) {
  if (!(delta > 0))
    throw Error(errc::config_invalid, "separation delta must be positive");
  if (n != 3 && n != 4)
    throw Error(errc::config_invalid, "dimension must be 3 or 4");
  if (!(diam >= 0))
    throw Error(errc::config_invalid, "diameter must be nonnegative");
  const real c = n == 3 ? 2.0L : kPi;
  const real denom = c * std::pow(delta, static_cast<real>(n - 2));
  return std::pow(diam, static_cast<real>(n)) /
         std::pow(denom, static_cast<real>(n) / (n - 2));
}

SurfaceFamily core_family(const SemmesComplex& c, const Word& w,
                          int sample_count, std::uint64_t seed) {
  if (sample_count < 1)
    throw Error(errc::config_invalid, "need at least one sample");
  const int pidx = piece_index(c, w);
  const ComplexPiece& piece = c.pieces[static_cast<std::size_t>(pidx)];
  const MeshModel& model = c.models[static_cast<std::size_t>(piece.model)];
  const real pitch = model.pitch;

  // Voxel lookup on the model lattice.
  std::unordered_map<long long, int> lut;
  lut.reserve(model.pos.size() * 2);
  const Vec3 origin = model.pos[0];
  auto key_of = [&](const Vec3& p) -> long long {
    const long long kx = llroundl((p.x - origin.x) / pitch);
    const long long ky = llroundl((p.y - origin.y) / pitch);
    const long long kz = llroundl((p.z - origin.z) / pitch);
    return ((kx + 2048) * 4096 + (ky + 2048)) * 4096 + (kz + 2048);
  };
  for (std::size_t v = 0; v < model.pos.size(); ++v)
    lut[key_of(model.pos[v])] = static_cast<int>(v);

  // Cross-section reach of the meshed tube around the unit ring.
  real rho_max = 0;
  for (const Vec3& p : model.pos) {
    const real radial = std::hypot(p.x, p.y) - 1;
    rho_max = std::max(rho_max, std::hypot(radial, p.z));
  }

  const real lam = std::pow(c.lambda, static_cast<real>(piece.depth));
  const int fiber = c.n == 4 ? model.circle_steps : 1;

  Rng rng(seed);
  SurfaceFamily fam;
  int attempts = 0;
  const int max_attempts = 400 * sample_count + 400;
  while (static_cast<int>(fam.members.size()) < sample_count) {
    if (++attempts > max_attempts)
      throw Error(errc::infeasible_geometry,
                  "could not place displaced core rings clear of the children");
    const real ang = rng.uniform(0, 2 * kPi);
    const real rad = rho_max * std::sqrt(rng.uniform01());
    const real du = rad * std::cos(ang);
    const real dv = rad * std::sin(ang);
    const real ring = 1 + du;
    if (ring < 0.2L) continue;

    const int steps = std::max<int>(
        192, static_cast<int>(std::ceil(2 * kPi * ring / (0.5L * pitch))));
    std::vector<std::pair<int, real>> len;  // (voxel, model length), sorted later
    bool ok = true;
    Vec3 prev = {ring, 0, dv};
    for (int t = 1; t <= steps && ok; ++t) {
      const real th = 2 * kPi * t / steps;
      const Vec3 cur = {ring * std::cos(th), ring * std::sin(th), dv};
      const Vec3 mid = (prev + cur) * 0.5L;
      const auto hit = lut.find(key_of(mid));
      if (hit == lut.end()) {
        ok = false;
        break;
      }
      const Vec3& vp = model.pos[static_cast<std::size_t>(hit->second)];
      if (std::max({std::fabs(mid.x - vp.x), std::fabs(mid.y - vp.y),
                    std::fabs(mid.z - vp.z)}) > 0.5L * pitch * 1.0001L) {
        ok = false;
        break;
      }
      len.emplace_back(hit->second, norm(cur - prev));
      prev = cur;
    }
    if (!ok) continue;

    std::sort(len.begin(), len.end());
    Surface member;
    std::size_t i = 0;
    while (i < len.size()) {
      real total = 0;
      const int vox = len[i].first;
      for (; i < len.size() && len[i].first == vox; ++i) total += len[i].second;
      if (c.n == 3) {
        member.mass.emplace_back(c.cell_id(pidx, vox), total * lam);
      } else {
        for (int s = 0; s < fiber; ++s)
          member.mass.emplace_back(c.cell_id(pidx, vox * fiber + s),
                                   total * lam * model.arc * lam);
      }
    }
    fam.members.push_back(std::move(member));
  }
  return fam;
}

}  // namespace tubelab
