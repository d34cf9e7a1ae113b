#pragma once

#include <set>
#include <string>
#include <vector>

#include "bankforge/geometry.hpp"
#include "bankforge/types.hpp"

namespace bankforge {

/// Windowed linear congruence over the polytope variables:
/// exists r with |r| <= window such that coeffs.v + constant == r (mod modulus).
/// window == 0 is an exact congruence.
struct Congruence {
  std::vector<i64> coeffs;
  i64 constant = 0;
  i64 modulus = 1;
  i64 window = 0;
  bool check_at_point = true;
};

/// Integer feasibility problem: do two accesses ever resolve to the same bank
/// under the given geometry? Variables are the merged iterator/symbol
/// unknowns of both accesses (shared names unify, per the synchronization
/// substitution). For every bank dimension the dot products of both sides are
/// kept so emptiness can be decided exactly, floors included; the congruence
/// list holds the mod-N*B relaxations used for pruning.
struct ConflictPolytope {
  struct BankDim {
    std::vector<i64> c1, c2;  // dot-product coefficients per merged var
    i64 k1 = 0, k2 = 0;       // constant terms
    i64 banks = 1, blocking = 1;
  };

  std::vector<VarSpec> vars;
  std::vector<BankDim> dims;
  std::vector<Congruence> congruences;
  std::set<std::string> canceled_symbols;
  bool self = false;

  void add_congruence(Congruence c) { congruences.push_back(std::move(c)); }
};

inline ConflictPolytope build_conflict(const AffineAccess& a1, const AffineAccess& a2,
                                       const HyperplaneGeometry& g) {
  if (a1.memory_id != a2.memory_id)
    fail(errc::mismatched_memory, "conflict between accesses to different memories");
  if (a1.mem_dims() != g.n_dims() || a2.mem_dims() != g.n_dims())
    fail(errc::dimension_mismatch, "access rank does not match geometry");
  if (!a1.normalized || !a2.normalized)
    fail(errc::invalid_input, "accesses must be synchronized before conflict analysis");

  ConflictPolytope p;
  if (a1.same_instance(a2)) {
    // An access never conflicts with itself.
    p.self = true;
    return p;
  }

  const LinearAddress& la1 = *a1.normalized;
  const LinearAddress& la2 = *a2.normalized;

  // Merge variables by name; a shared name is the same unknown on both sides.
  std::map<std::string, std::size_t> index;
  auto merged = [&](const VarSpec& v) -> std::size_t {
    auto it = index.find(v.name);
    if (it != index.end()) {
      if (p.vars[it->second].count != v.count)
        fail(errc::invalid_input, "variable '" + v.name + "' has inconsistent bounds");
      return it->second;
    }
    index.emplace(v.name, p.vars.size());
    p.vars.push_back(v);
    return p.vars.size() - 1;
  };
  std::vector<std::size_t> map1(la1.vars.size()), map2(la2.vars.size());
  for (std::size_t i = 0; i < la1.vars.size(); ++i) map1[i] = merged(la1.vars[i]);
  for (std::size_t i = 0; i < la2.vars.size(); ++i) map2[i] = merged(la2.vars[i]);

  std::size_t nv = p.vars.size();
  auto lift = [&](const LinearForm& f, const std::vector<std::size_t>& map) {
    std::pair<std::vector<i64>, i64> out{std::vector<i64>(nv, 0), f.constant};
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) out.first[map[i]] += f.coeffs[i];
    return out;
  };

  std::size_t bank_dims = g.flat() ? 1 : g.n_dims();
  p.dims.resize(bank_dims);
  for (std::size_t bd = 0; bd < bank_dims; ++bd) {
    ConflictPolytope::BankDim& dim = p.dims[bd];
    dim.c1.assign(nv, 0);
    dim.c2.assign(nv, 0);
    dim.banks = g.banks[bd];
    dim.blocking = g.blocking[bd];
    for (std::size_t d = 0; d < g.n_dims(); ++d) {
      if (!g.flat() && d != bd) continue;
      i64 a = g.alpha[d];
      auto [c1, k1] = lift(la1.dims[d], map1);
      auto [c2, k2] = lift(la2.dims[d], map2);
      for (std::size_t v = 0; v < nv; ++v) {
        dim.c1[v] += a * c1[v];
        dim.c2[v] += a * c2[v];
      }
      dim.k1 += a * k1;
      dim.k2 += a * k2;
    }
    Congruence cg;
    cg.coeffs.resize(nv);
    for (std::size_t v = 0; v < nv; ++v) cg.coeffs[v] = dim.c1[v] - dim.c2[v];
    cg.constant = dim.k1 - dim.k2;
    cg.modulus = dim.banks * dim.blocking;
    cg.window = dim.blocking - 1;
    cg.check_at_point = false;  // implied by the exact bank comparison
    p.congruences.push_back(std::move(cg));
  }

  // Symbols shared by both sides whose delta coefficient vanishes everywhere
  // cancel: the conflict verdict no longer depends on their value.
  std::set<std::string> in1, in2;
  for (const VarSpec& v : la1.vars)
    if (v.is_symbol) in1.insert(v.name);
  for (const VarSpec& v : la2.vars)
    if (v.is_symbol) in2.insert(v.name);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!p.vars[v].is_symbol) continue;
    if (!in1.count(p.vars[v].name) || !in2.count(p.vars[v].name)) continue;
    bool zero = true;
    for (const auto& dim : p.dims)
      if (dim.c1[v] != dim.c2[v]) zero = false;
    if (zero) p.canceled_symbols.insert(p.vars[v].name);
  }
  return p;
}

namespace detail {

inline bool congruence_window_feasible(i64 value, i64 modulus, i64 window) {
  i64 r = floor_mod(value, modulus);
  return r <= window || modulus - r <= window;
}

// Unbounded feasibility of a windowed congruence via the gcd test. If even
// the unbounded problem has no solution the polytope is empty.
inline bool congruence_gcd_feasible(const Congruence& c) {
  i64 g = c.modulus;
  for (i64 a : c.coeffs) g = gcd64(g, a < 0 ? -a : a);
  if (g <= 1) return true;
  i64 r = floor_mod(c.constant, g);
  return r <= c.window || g - r <= c.window;
}

// The bank pair of one dimension is invariant when a variable moves by its
// period; ranges at least one period wide can be folded down to it.
inline i64 variable_period(const ConflictPolytope& p, std::size_t v) {
  i64 period = 1;
  for (const auto& dim : p.dims) {
    i64 nb = dim.banks * dim.blocking;
    for (i64 c : {dim.c1[v], dim.c2[v]}) {
      i64 a = c < 0 ? -c : c;
      period = lcm64(period, nb / gcd64(a, nb));
      if (period > (i64{1} << 40)) return period;  // effectively unbounded
    }
  }
  for (const Congruence& c : p.congruences) {
    if (!c.check_at_point) continue;
    i64 a = c.coeffs.size() > v ? (c.coeffs[v] < 0 ? -c.coeffs[v] : c.coeffs[v]) : 0;
    if (a) period = lcm64(period, c.modulus / gcd64(a, c.modulus));
  }
  return period;
}

}  // namespace detail

/// True iff no integer point within bounds satisfies every constraint
/// (i.e., the two accesses can never hit the same bank). Decided by gcd
/// pruning plus bounded exact enumeration; agrees with naive exhaustive
/// enumeration by construction.
inline bool is_empty(const ConflictPolytope& p, i64 budget = 10'000'000) {
  if (p.self) return true;
  for (const Congruence& c : p.congruences)
    if (!detail::congruence_gcd_feasible(c)) return true;

  // Fold variable ranges down to their period and drop inert variables.
  std::vector<i64> radix;
  std::vector<std::size_t> live;
  i64 volume = 1;
  for (std::size_t v = 0; v < p.vars.size(); ++v) {
    bool used = false;
    for (const auto& dim : p.dims)
      if (dim.c1[v] != 0 || dim.c2[v] != 0) used = true;
    for (const Congruence& c : p.congruences)
      if (c.check_at_point && v < c.coeffs.size() && c.coeffs[v] != 0) used = true;
    if (!used) continue;
    i64 period = detail::variable_period(p, v);
    i64 count = p.vars[v].count >= period ? period : p.vars[v].count;
    live.push_back(v);
    radix.push_back(count);
    volume = sat_mul(volume, count);
  }
  if (volume > budget)
    fail(errc::bounds_budget_exceeded,
         "conflict enumeration volume " + std::to_string(volume) + " exceeds budget");

  bool witness = false;
  for_each_point(radix, [&](const std::vector<i64>& pt) {
    for (const auto& dim : p.dims) {
      i64 d1 = dim.k1, d2 = dim.k2;
      for (std::size_t i = 0; i < live.size(); ++i) {
        d1 += dim.c1[live[i]] * pt[i];
        d2 += dim.c2[live[i]] * pt[i];
      }
      i64 b1 = floor_mod(floor_div(d1, dim.blocking), dim.banks);
      i64 b2 = floor_mod(floor_div(d2, dim.blocking), dim.banks);
      if (b1 != b2) return true;  // not a conflict point, keep searching
    }
    for (const Congruence& c : p.congruences) {
      if (!c.check_at_point) continue;
      i64 val = c.constant;
      for (std::size_t i = 0; i < live.size(); ++i)
        if (live[i] < c.coeffs.size()) val += c.coeffs[live[i]] * pt[i];
      if (!detail::congruence_window_feasible(val, c.modulus, c.window)) return true;
    }
    witness = true;
    return false;
  });
  return !witness;
}

}  // namespace bankforge
