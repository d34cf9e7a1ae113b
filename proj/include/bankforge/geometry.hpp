#pragma once

#include <algorithm>
#include <map>
#include <set>

#include "bankforge/types.hpp"

namespace bankforge {

// ---------------------------------------------------------------------------
// Bank resolution.
//
// Flat style:            BA = floor((x . alpha) / B) mod N
// Multidimensional:      BA_d = floor(x_d * alpha_d / B_d) mod N_d
//
// The intra-bank offset combines a region index with a correction term that
// separates the multiple instances a bank can have inside one P region:
//
//   BO = m * sum_d( floor(x_d/P_d) * prod_{j>d} ceil(D_j/P_j) ) + corr
//   corr = floor((x . alpha mod B) / g),  g = gcd(alpha..., N*B),  m = ceil(B/g)
//
// With alpha coprime to N*B this is exactly the classic formula (g = 1,
// m = B, corr = x.alpha mod B). When they share a factor g, the dot product
// only reaches multiples of g, so the correction is compressed by g and the
// per-bank slot count shrinks from B to ceil(B/g); both are needed to keep
// (BA, BO) injective and the bank volume tight.
// ---------------------------------------------------------------------------

namespace detail {

inline void check_in_bounds(const std::vector<i64>& x, const HyperplaneGeometry& g) {
  std::vector<i64> pd = g.padded_dims();
  for (std::size_t d = 0; d < x.size(); ++d)
    if (x[d] < 0 || x[d] >= pd[d])
      fail(errc::out_of_bounds, "address component " + std::to_string(d) + " = " +
                                    std::to_string(x[d]) + " outside padded extent " +
                                    std::to_string(pd[d]));
}

inline i64 dot_alpha(const std::vector<i64>& x, const HyperplaneGeometry& g) {
  i64 s = 0;
  for (std::size_t d = 0; d < x.size(); ++d) s += x[d] * g.alpha[d];
  return s;
}

// gcd of all alpha components and N*B; drives the correction compression.
inline i64 correction_gcd_flat(const HyperplaneGeometry& g) {
  i64 acc = g.banks[0] * g.blocking[0];
  for (i64 a : g.alpha) acc = gcd64(acc, a < 0 ? -a : a);
  return acc < 1 ? 1 : acc;
}

inline i64 correction_gcd_dim(const HyperplaneGeometry& g, std::size_t d) {
  i64 a = g.alpha[d] < 0 ? -g.alpha[d] : g.alpha[d];
  i64 acc = gcd64(g.banks[d] * g.blocking[d], a);
  return acc < 1 ? 1 : acc;
}

inline i64 slot_count_flat(const HyperplaneGeometry& g) {
  return ceil_div(g.blocking[0], correction_gcd_flat(g));
}

inline i64 slot_count_dim(const HyperplaneGeometry& g, std::size_t d) {
  return ceil_div(g.blocking[d], correction_gcd_dim(g, d));
}

}  // namespace detail

/// Per-dimension bank address. Flat geometries return a single component.
inline std::vector<i64> bank_address(const std::vector<i64>& x, const HyperplaneGeometry& g) {
  if (x.size() != g.n_dims()) fail(errc::dimension_mismatch, "address rank != geometry rank");
  detail::check_in_bounds(x, g);
  if (g.flat()) {
    i64 dot = detail::dot_alpha(x, g);
    return {floor_mod(floor_div(dot, g.blocking[0]), g.banks[0])};
  }
  std::vector<i64> ba(x.size());
  for (std::size_t d = 0; d < x.size(); ++d)
    ba[d] = floor_mod(floor_div(x[d] * g.alpha[d], g.blocking[d]), g.banks[d]);
  return ba;
}

/// Mixed-radix linearization of a (possibly per-dimension) bank address.
inline i64 bank_linear(const std::vector<i64>& ba, const HyperplaneGeometry& g) {
  i64 id = 0;
  for (std::size_t d = 0; d < ba.size(); ++d) id = id * g.banks[d] + ba[d];
  return id;
}

inline i64 bank_offset(const std::vector<i64>& x, const HyperplaneGeometry& g) {
  if (x.size() != g.n_dims()) fail(errc::dimension_mismatch, "address rank != geometry rank");
  if (g.region.size() != g.n_dims()) fail(errc::invalid_input, "geometry has no P region");
  detail::check_in_bounds(x, g);
  if (g.flat()) {
    i64 regions = 0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      i64 tail = 1;
      for (std::size_t j = d + 1; j < x.size(); ++j) tail *= ceil_div(g.dims[j], g.region[j]);
      regions += floor_div(x[d], g.region[d]) * tail;
    }
    i64 gg = detail::correction_gcd_flat(g);
    i64 corr = floor_div(floor_mod(detail::dot_alpha(x, g), g.blocking[0]), gg);
    return detail::slot_count_flat(g) * regions + corr;
  }
  // Per-dimension slots combined in mixed radix; BO stays a scalar.
  i64 bo = 0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    i64 m = detail::slot_count_dim(g, d);
    i64 gg = detail::correction_gcd_dim(g, d);
    i64 corr = floor_div(floor_mod(x[d] * g.alpha[d], g.blocking[d]), gg);
    i64 slot = floor_div(x[d], g.region[d]) * m + corr;
    i64 radix = ceil_div(g.dims[d], g.region[d]) * m;
    bo = bo * radix + slot;
  }
  return bo;
}

/// Closed-form upper bound on bank capacity; checked against the enumerated
/// maximum in metrics().
inline i64 bank_capacity_bound(const HyperplaneGeometry& g) {
  if (g.flat()) {
    i64 c = detail::slot_count_flat(g);
    for (std::size_t d = 0; d < g.n_dims(); ++d) c = sat_mul(c, ceil_div(g.dims[d], g.region[d]));
    return c;
  }
  i64 c = 1;
  for (std::size_t d = 0; d < g.n_dims(); ++d)
    c = sat_mul(c, sat_mul(detail::slot_count_dim(g, d), ceil_div(g.dims[d], g.region[d])));
  return c;
}

/// Period of the bank address map per dimension: Phi_d = lcm(alpha_d, N*B)/alpha_d.
/// Dimensions with a zero coefficient have period 1.
inline std::vector<i64> periodicity(const HyperplaneGeometry& g) {
  std::vector<i64> phi(g.n_dims(), 1);
  for (std::size_t d = 0; d < g.n_dims(); ++d) {
    i64 a = g.alpha[d] < 0 ? -g.alpha[d] : g.alpha[d];
    if (a == 0) continue;
    i64 nb = g.flat() ? g.banks[0] * g.blocking[0] : g.banks[d] * g.blocking[d];
    phi[d] = lcm64(a, nb) / a;
  }
  return phi;
}

/// Divide out common factors between alpha and B; the bank address map is
/// unchanged. Degenerate single-bank dims get a canonical form.
inline HyperplaneGeometry normalize(HyperplaneGeometry g) {
  if (g.flat()) {
    i64 gg = g.blocking[0];
    for (i64 a : g.alpha) gg = gcd64(gg, a < 0 ? -a : a);
    if (gg > 1) {
      g.blocking[0] /= gg;
      for (i64& a : g.alpha) a /= gg;
    }
    if (g.banks[0] == 1) {
      g.blocking[0] = 1;
      for (std::size_t d = 0; d < g.alpha.size(); ++d) g.alpha[d] = d == 0 ? 1 : 0;
    }
  } else {
    for (std::size_t d = 0; d < g.n_dims(); ++d) {
      i64 gg = gcd64(g.blocking[d], g.alpha[d] < 0 ? -g.alpha[d] : g.alpha[d]);
      if (gg > 1) {
        g.blocking[d] /= gg;
        g.alpha[d] /= gg;
      }
      if (g.banks[d] == 1) {
        g.blocking[d] = 1;
        g.alpha[d] = 1;
      }
    }
  }
  return g;
}

namespace detail {

// Coverage and slot-distinctness check for one candidate P, enumerating every
// aligned region of the padded array. Each bank id must appear at least once
// and at most B times per region, and no two cells of a region may share
// (bank, correction) -- that pair is what makes (BA, BO) injective.
inline bool region_check_flat(const HyperplaneGeometry& g, i64 budget) {
  std::vector<i64> padded = g.padded_dims();
  i64 volume = 1;
  for (i64 p : padded) volume = sat_mul(volume, p);
  if (volume > budget) fail(errc::bounds_budget_exceeded, "parallelotope check volume");
  std::vector<i64> region_counts(g.n_dims());
  for (std::size_t d = 0; d < g.n_dims(); ++d) region_counts[d] = padded[d] / g.region[d];

  i64 nbanks = g.total_banks();
  std::vector<i64> counts;
  std::set<std::pair<i64, i64>> seen;
  bool ok = true;
  for_each_point(region_counts, [&](const std::vector<i64>& r) {
    counts.assign(static_cast<std::size_t>(nbanks), 0);
    seen.clear();
    i64 gg = correction_gcd_flat(g);
    bool full = for_each_point(g.region, [&](const std::vector<i64>& u) {
      std::vector<i64> x(g.n_dims());
      for (std::size_t d = 0; d < g.n_dims(); ++d) x[d] = r[d] * g.region[d] + u[d];
      i64 dot = dot_alpha(x, g);
      i64 ba = floor_mod(floor_div(dot, g.blocking[0]), g.banks[0]);
      i64 corr = floor_div(floor_mod(dot, g.blocking[0]), gg);
      if (++counts[static_cast<std::size_t>(ba)] > g.blocking[0]) return false;
      if (!seen.insert({ba, corr}).second) return false;
      return true;
    });
    if (!full) {
      ok = false;
      return false;
    }
    for (i64 c : counts)
      if (c < 1) {
        ok = false;
        return false;
      }
    return true;
  });
  return ok;
}

inline bool region_check_dim(const HyperplaneGeometry& g, std::size_t d, i64 p) {
  i64 padded = ceil_div(g.dims[d], p) * p;
  i64 nb = g.banks[d];
  i64 gg = correction_gcd_dim(g, d);
  std::vector<i64> counts;
  std::set<std::pair<i64, i64>> seen;
  for (i64 base = 0; base < padded; base += p) {
    counts.assign(static_cast<std::size_t>(nb), 0);
    seen.clear();
    for (i64 u = 0; u < p; ++u) {
      i64 v = (base + u) * g.alpha[d];
      i64 ba = floor_mod(floor_div(v, g.blocking[d]), nb);
      i64 corr = floor_div(floor_mod(v, g.blocking[d]), gg);
      if (++counts[static_cast<std::size_t>(ba)] > g.blocking[d]) return false;
      if (!seen.insert({ba, corr}).second) return false;
    }
    for (i64 c : counts)
      if (c < 1) return false;
  }
  return true;
}

inline std::vector<i64> p_candidates(i64 phi, i64 extent) {
  std::set<i64> cand;
  for (i64 d = 1; d * d <= phi; ++d)
    if (phi % d == 0) {
      if (d <= extent) cand.insert(d);
      if (phi / d <= extent) cand.insert(phi / d);
    }
  for (i64 m = phi; m <= extent; m += phi) cand.insert(m);
  cand.insert(extent);
  return {cand.begin(), cand.end()};
}

}  // namespace detail

/// Pick the rectangular offset-addressing region P: the cheapest candidate
/// (by closed-form padded capacity) built from divisors and multiples of the
/// per-dimension period, subject to the coverage condition.
inline std::vector<i64> select_parallelotope(const HyperplaneGeometry& geom,
                                             i64 budget = 10'000'000) {
  HyperplaneGeometry g = geom;
  std::vector<i64> phi = periodicity(g);

  if (!g.flat()) {
    // Dimensions are independent; pick the cheapest valid P per dimension.
    std::vector<i64> best(g.n_dims());
    for (std::size_t d = 0; d < g.n_dims(); ++d) {
      i64 best_cost = -1;
      for (i64 p : detail::p_candidates(phi[d], g.dims[d])) {
        if (!detail::region_check_dim(g, d, p)) continue;
        i64 cost = ceil_div(g.dims[d], p) * detail::slot_count_dim(g, d);
        if (best_cost < 0 || cost < best_cost) {
          best_cost = cost;
          best[d] = p;
        }
      }
      if (best_cost < 0)
        fail(errc::no_valid_parallelotope, "no valid P for dimension " + std::to_string(d));
    }
    return best;
  }

  g.region.assign(g.n_dims(), 1);
  std::vector<std::vector<i64>> cand(g.n_dims());
  std::vector<i64> radix(g.n_dims());
  for (std::size_t d = 0; d < g.n_dims(); ++d) {
    cand[d] = detail::p_candidates(phi[d], g.dims[d]);
    radix[d] = static_cast<i64>(cand[d].size());
  }
  std::vector<i64> best;
  i64 best_cost = -1;
  for_each_point(radix, [&](const std::vector<i64>& idx) {
    for (std::size_t d = 0; d < g.n_dims(); ++d) g.region[d] = cand[d][static_cast<std::size_t>(idx[d])];
    i64 cost = sat_mul(bank_capacity_bound(g), g.total_banks());
    if (best_cost >= 0 && cost > best_cost) return true;
    if (best_cost >= 0 && cost == best_cost && !(g.region < best)) return true;
    if (detail::region_check_flat(g, budget)) {
      best = g.region;
      best_cost = cost;
    }
    return true;
  });
  if (best_cost < 0) fail(errc::no_valid_parallelotope, "no valid P region for geometry");
  return best;
}

/// Fan-out/fan-in, padding, and enumerated bank capacity for a scheme.
inline SchemeMetrics metrics(const std::vector<AccessGroup>& groups,
                             const std::vector<AffineAccess>& accesses,
                             const HyperplaneGeometry& g, i64 budget = 10'000'000) {
  SchemeMetrics m;
  m.padding = g.padding();
  m.capacity_bound = bank_capacity_bound(g);

  i64 nbanks = g.total_banks();
  m.fan_in.assign(static_cast<std::size_t>(nbanks), 0);
  for (const AccessGroup& grp : groups) {
    for (std::size_t idx : grp.members) {
      const AffineAccess& a = accesses[idx];
      if (!a.normalized) fail(errc::invalid_input, "access not normalized: " + a.id);
      const LinearAddress& la = *a.normalized;
      std::vector<i64> radix;
      radix.reserve(la.vars.size());
      i64 volume = 1;
      for (const VarSpec& v : la.vars) {
        radix.push_back(v.count);
        volume = sat_mul(volume, v.count);
      }
      if (volume > budget) fail(errc::bounds_budget_exceeded, "fan-out enumeration volume");
      std::set<i64> banks;
      for_each_point(radix, [&](const std::vector<i64>& pt) {
        banks.insert(bank_linear(bank_address(la.eval(pt), g), g));
        return true;
      });
      m.fan_out.push_back(static_cast<i64>(banks.size()));
      for (i64 b : banks) ++m.fan_in[static_cast<std::size_t>(b)];
    }
  }

  std::vector<i64> padded = g.padded_dims();
  i64 cells = 1;
  for (i64 p : padded) cells = sat_mul(cells, p);
  if (cells > budget) fail(errc::bounds_budget_exceeded, "capacity enumeration volume");
  i64 max_bo = -1;
  for_each_point(padded, [&](const std::vector<i64>& x) {
    max_bo = std::max(max_bo, bank_offset(x, g));
    return true;
  });
  m.bank_capacity = max_bo + 1;
  if (m.bank_capacity > m.capacity_bound)
    fail(errc::invalid_input, "capacity bound violated for " + g.signature());
  return m;
}

}  // namespace bankforge
