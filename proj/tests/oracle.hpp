#pragma once

// Test-side oracles, independent of the library's solver paths: plain
// exhaustive enumeration with arithmetic recomputed from scratch.

#include <functional>
#include <map>
#include <vector>

#include "bankforge/polytope.hpp"

namespace oracle {

using bankforge::i64;

inline i64 fdiv(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i64 fmod(i64 a, i64 b) { return a - b * fdiv(a, b); }

/// Exhaustive emptiness over the raw variable ranges: no pruning, no range
/// folding, full recomputation of both dot products per point.
inline bool naive_is_empty(const bankforge::ConflictPolytope& p) {
  if (p.self) return true;
  std::vector<i64> counts;
  for (const auto& v : p.vars) counts.push_back(v.count);

  std::vector<i64> point(counts.size(), 0);
  std::function<bool(std::size_t)> rec = [&](std::size_t d) -> bool {
    if (d == counts.size()) {
      for (const auto& dim : p.dims) {
        i64 d1 = dim.k1, d2 = dim.k2;
        for (std::size_t v = 0; v < point.size(); ++v) {
          d1 += dim.c1[v] * point[v];
          d2 += dim.c2[v] * point[v];
        }
        if (fmod(fdiv(d1, dim.blocking), dim.banks) != fmod(fdiv(d2, dim.blocking), dim.banks))
          return false;
      }
      for (const auto& c : p.congruences) {
        if (!c.check_at_point) continue;
        i64 val = c.constant;
        for (std::size_t v = 0; v < point.size() && v < c.coeffs.size(); ++v)
          val += c.coeffs[v] * point[v];
        i64 r = fmod(val, c.modulus);
        if (!(r <= c.window || c.modulus - r <= c.window)) return false;
      }
      return true;  // found a witness
    }
    for (point[d] = 0; point[d] < counts[d]; ++point[d])
      if (rec(d + 1)) return true;
    point[d] = 0;
    return false;
  };
  return !rec(0);
}

/// Exhaustive collision search with a concrete function substituted for one
/// symbol variable (by name). Every other variable enumerates its range.
inline bool concrete_is_empty(const bankforge::ConflictPolytope& p,
                              const std::string& symbol_var,
                              const std::function<i64(i64)>& fn) {
  if (p.self) return true;
  std::vector<i64> counts;
  std::size_t sym_index = p.vars.size();
  for (std::size_t v = 0; v < p.vars.size(); ++v) {
    if (p.vars[v].name == symbol_var) {
      sym_index = v;
      counts.push_back(1);  // overwritten per point below
    } else {
      counts.push_back(p.vars[v].count);
    }
  }
  if (sym_index == p.vars.size()) return naive_is_empty(p);

  // The symbol's first argument form decides the concrete value.
  const bankforge::VarSpec& sym = p.vars[sym_index];

  std::vector<i64> point(counts.size(), 0);
  std::function<bool(std::size_t)> rec = [&](std::size_t d) -> bool {
    if (d == counts.size()) {
      i64 arg = sym.symbol_args.empty() ? 0 : sym.symbol_args[0].eval(point);
      point[sym_index] = fn(arg);
      for (const auto& dim : p.dims) {
        i64 d1 = dim.k1, d2 = dim.k2;
        for (std::size_t v = 0; v < point.size(); ++v) {
          d1 += dim.c1[v] * point[v];
          d2 += dim.c2[v] * point[v];
        }
        if (fmod(fdiv(d1, dim.blocking), dim.banks) != fmod(fdiv(d2, dim.blocking), dim.banks))
          return false;
      }
      return true;
    }
    if (d == sym_index) return rec(d + 1);
    for (point[d] = 0; point[d] < counts[d]; ++point[d])
      if (rec(d + 1)) return true;
    point[d] = 0;
    return false;
  };
  return !rec(0);
}

}  // namespace oracle
