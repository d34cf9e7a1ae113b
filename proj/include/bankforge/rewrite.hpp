#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bankforge/geometry.hpp"

namespace bankforge {

enum class DagOp { Input, Const, Add, Sub, ShiftLeft, ShiftRight, And, Mux, Mul, Div, Mod };

inline const char* dag_op_name(DagOp op) {
  switch (op) {
    case DagOp::Input: return "input";
    case DagOp::Const: return "const";
    case DagOp::Add: return "add";
    case DagOp::Sub: return "sub";
    case DagOp::ShiftLeft: return "shl";
    case DagOp::ShiftRight: return "shr";
    case DagOp::And: return "and";
    case DagOp::Mux: return "mux";
    case DagOp::Mul: return "mul";
    case DagOp::Div: return "div";
    case DagOp::Mod: return "mod";
  }
  return "?";
}

/// Pure-integer expression DAG for the bank resolution logic. Mux selects
/// operands[1 + sel]; shifts take their amount from a Const operand; division
/// and modulo use floored semantics (all constructed operands are
/// nonnegative anyway).
struct ResolutionDag {
  struct Node {
    DagOp op = DagOp::Const;
    std::vector<i64> operands;  // node ids
    i64 value = 0;              // Const payload / Input index
    std::string name;           // Input label
  };
  std::vector<Node> nodes;
  std::vector<i64> bank_outputs;  // one per bank dimension
  i64 offset_output = -1;

  i64 eval_node(i64 id, const std::vector<i64>& inputs, std::vector<i64>& memo,
                std::vector<char>& done) const {
    if (done[static_cast<std::size_t>(id)]) return memo[static_cast<std::size_t>(id)];
    const Node& n = nodes[static_cast<std::size_t>(id)];
    auto op = [&](std::size_t i) { return eval_node(n.operands[i], inputs, memo, done); };
    i64 v = 0;
    switch (n.op) {
      case DagOp::Input: v = inputs[static_cast<std::size_t>(n.value)]; break;
      case DagOp::Const: v = n.value; break;
      case DagOp::Add: v = op(0) + op(1); break;
      case DagOp::Sub: v = op(0) - op(1); break;
      case DagOp::ShiftLeft: v = op(0) << op(1); break;
      case DagOp::ShiftRight: v = op(0) >> op(1); break;
      case DagOp::And: v = op(0) & op(1); break;
      case DagOp::Mux: {
        i64 sel = op(0);
        if (sel < 0 || sel + 1 >= static_cast<i64>(n.operands.size()))
          fail(errc::invalid_input, "mux selector out of range");
        v = op(static_cast<std::size_t>(sel) + 1);
        break;
      }
      case DagOp::Mul: v = op(0) * op(1); break;
      case DagOp::Div: v = floor_div(op(0), op(1)); break;
      case DagOp::Mod: v = floor_mod(op(0), op(1)); break;
    }
    memo[static_cast<std::size_t>(id)] = v;
    done[static_cast<std::size_t>(id)] = 1;
    return v;
  }

  struct Outputs {
    std::vector<i64> banks;
    i64 offset = 0;
  };

  Outputs eval(const std::vector<i64>& inputs) const {
    std::vector<i64> memo(nodes.size(), 0);
    std::vector<char> done(nodes.size(), 0);
    Outputs out;
    for (i64 b : bank_outputs) out.banks.push_back(eval_node(b, inputs, memo, done));
    if (offset_output >= 0) out.offset = eval_node(offset_output, inputs, memo, done);
    return out;
  }
};

struct DagCensus {
  i64 add = 0, sub = 0, shift = 0, mux = 0, mul = 0, div = 0, mod = 0;
};

inline DagCensus census(const ResolutionDag& dag) {
  DagCensus c;
  for (const auto& n : dag.nodes) switch (n.op) {
      case DagOp::Add: ++c.add; break;
      case DagOp::Sub: ++c.sub; break;
      case DagOp::ShiftLeft:
      case DagOp::ShiftRight:
      case DagOp::And: ++c.shift; break;
      case DagOp::Mux: ++c.mux; break;
      case DagOp::Mul: ++c.mul; break;
      case DagOp::Div: ++c.div; break;
      case DagOp::Mod: ++c.mod; break;
      default: break;
    }
  return c;
}

inline bool is_power_of_two(i64 c) { return c > 0 && (c & (c - 1)) == 0; }

inline int log2_exact(i64 c) {
  int e = 0;
  while ((i64{1} << e) < c) ++e;
  return e;
}

/// Mersenne constants usable by the shift-add cascade: 2^n - 1, 2 <= n <= 16.
inline bool is_mersenne(i64 c) { return c >= 3 && c <= 65535 && is_power_of_two(c + 1); }

/// A constant that evenly divides a Mersenne number with quotient in (1, R).
inline std::optional<std::pair<i64, i64>> mersenne_multiple(i64 c, i64 radius = 16) {
  if (c < 2) return std::nullopt;
  for (int n = 2; n <= 16; ++n) {
    i64 m = (i64{1} << n) - 1;
    if (m % c != 0) continue;
    i64 k = m / c;
    if (k > 1 && k < radius) return std::make_pair(m, k);
  }
  return std::nullopt;
}

struct ShiftAddPlan {
  struct Term {
    int sign;  // +1 or -1
    int exponent;
  };
  std::vector<Term> terms;
};

namespace detail {

inline bool shift_add_rec(i64 target, int budget, int max_exp, ShiftAddPlan& plan) {
  if (target == 0) return true;
  if (budget == 0) return false;
  for (int e = 0; e < max_exp; ++e) {
    i64 p = i64{1} << e;
    for (int sign : {+1, -1}) {
      plan.terms.push_back({sign, e});
      if (shift_add_rec(target - sign * p, budget - 1, e, plan)) return true;
      plan.terms.pop_back();
    }
  }
  return false;
}

}  // namespace detail

/// Decompose c into at most `radius` signed powers of two. The leading term
/// is searched from the smallest exponent up, so c=6 becomes (1<<2)+(1<<1)
/// rather than (1<<3)-(1<<1).
inline std::optional<ShiftAddPlan> shift_add_plan(i64 c, int radius = 2) {
  if (c < 1) return std::nullopt;
  for (int terms = 1; terms <= radius; ++terms) {
    for (int e = 0; e <= 40; ++e) {
      i64 p = i64{1} << e;
      if (p > 2 * c) break;
      ShiftAddPlan plan;
      plan.terms.push_back({+1, e});
      if (detail::shift_add_rec(c - p, terms - 1, e, plan)) return plan;
    }
  }
  return std::nullopt;
}

/// Incremental DAG builder that tracks an upper bound per node so the
/// Crandall fold count can be derived from the real value range.
class DagBuilder {
public:
  ResolutionDag dag;

  i64 input(const std::string& name, i64 index, i64 max_value) {
    ResolutionDag::Node n;
    n.op = DagOp::Input;
    n.value = index;
    n.name = name;
    return push(n, max_value);
  }

  i64 constant(i64 v) {
    ResolutionDag::Node n;
    n.op = DagOp::Const;
    n.value = v;
    return push(n, v);
  }

  i64 add(i64 a, i64 b) { return binary(DagOp::Add, a, b, bound(a) + bound(b)); }
  i64 sub(i64 a, i64 b) { return binary(DagOp::Sub, a, b, bound(a)); }
  i64 shl(i64 a, int amount) {
    return binary(DagOp::ShiftLeft, a, constant(amount), bound(a) << amount);
  }
  i64 shr(i64 a, int amount) {
    return binary(DagOp::ShiftRight, a, constant(amount), bound(a) >> amount);
  }
  i64 band(i64 a, i64 mask) {
    return binary(DagOp::And, a, constant(mask), std::min(bound(a), mask));
  }
  i64 mul_node(i64 a, i64 b) { return binary(DagOp::Mul, a, b, sat_mul(bound(a), bound(b))); }
  i64 div_node(i64 a, i64 b) { return binary(DagOp::Div, a, b, bound(a)); }
  i64 mod_node(i64 a, i64 c) { return binary(DagOp::Mod, a, constant(c), c - 1); }

  i64 mux(i64 sel, const std::vector<i64>& values) {
    ResolutionDag::Node n;
    n.op = DagOp::Mux;
    n.operands.push_back(sel);
    i64 b = 0;
    for (i64 v : values) {
      n.operands.push_back(v);
      b = std::max(b, bound(v));
    }
    return push(n, b);
  }

  /// 1 when the signed value is negative (arithmetic shift into the sign bit).
  i64 sign_bit(i64 a) {
    i64 s = binary(DagOp::ShiftRight, a, constant(63), 1);
    return binary(DagOp::And, s, constant(1), 1);
  }

  i64 bound(i64 id) const { return bounds_[static_cast<std::size_t>(id)]; }

  // --- constant arithmetic with rewrites -----------------------------------

  i64 mul_const(i64 a, i64 c, int shift_add_radius = 2) {
    if (c == 0) return constant(0);
    if (c == 1) return a;
    if (is_power_of_two(c)) return shl(a, log2_exact(c));
    if (auto plan = shift_add_plan(c, shift_add_radius)) return apply_plan(a, *plan);
    return mul_node(a, constant(c));
  }

  i64 apply_plan(i64 a, const ShiftAddPlan& plan) {
    i64 acc = -1;
    for (const auto& t : plan.terms) {
      i64 term = t.exponent == 0 ? a : shl(a, t.exponent);
      if (acc < 0)
        acc = term;  // leading term is positive by construction
      else
        acc = t.sign > 0 ? add(acc, term) : sub(acc, term);
    }
    return acc;
  }

  /// x mod M for Mersenne M via the fold-and-correct cascade; no Mul/Div/Mod
  /// nodes, bit-exact over the node's tracked range.
  i64 crandall_mod(i64 x, i64 m) {
    auto [y, q] = crandall_fold(x, m);
    (void)q;
    i64 t = sub(y, constant(m));
    i64 sel = sign_bit(t);
    return mux(sel, {t, y});  // y == m folds to 0, y < m passes through
  }

  i64 crandall_div(i64 x, i64 m) {
    auto [y, q] = crandall_fold(x, m);
    i64 t = sub(y, constant(m));
    i64 sel = sign_bit(t);
    i64 bumped = add(q, constant(1));
    return mux(sel, {bumped, q});
  }

  /// x mod m2 where m2 * k is Mersenne: Crandall on the Mersenne, then a
  /// k-way one-hot mux peels off whole m2 blocks.
  i64 composite_mod(i64 x, i64 m2, i64 radius = 16) {
    auto mk = mersenne_multiple(m2, radius);
    if (!mk) fail(errc::no_mersenne_multiple, std::to_string(m2) + " divides no Mersenne");
    auto [m, k] = *mk;
    i64 y = crandall_mod(x, m);
    i64 j = constant(k - 1);
    for (i64 i = 1; i < k; ++i) {
      i64 below = sign_bit(sub(y, constant(i * m2)));
      j = sub(j, below);
    }
    std::vector<i64> arms;
    for (i64 i = 0; i < k; ++i) arms.push_back(i == 0 ? y : sub(y, constant(i * m2)));
    return mux(j, arms);
  }

  /// Rewrite precedence for /c: power of two, Mersenne, native divide.
  i64 div_const(i64 a, i64 c) {
    if (c == 1) return a;
    if (is_power_of_two(c)) return shr(a, log2_exact(c));
    if (is_mersenne(c)) return crandall_div(a, c);
    return div_node(a, constant(c));
  }

  /// Rewrite precedence for %c: power of two, Mersenne, composite Mersenne,
  /// native modulo.
  i64 mod_const(i64 a, i64 c, i64 composite_radius = 16) {
    if (c == 1) return constant(0);
    if (is_power_of_two(c)) return band(a, c - 1);
    if (is_mersenne(c)) return crandall_mod(a, c);
    if (mersenne_multiple(c, composite_radius)) return composite_mod(a, c, composite_radius);
    return mod_node(a, c);
  }

private:
  // Folds y down to [0, m+1]; the callers' final compare-and-mux also maps
  // the two residual values m -> 0 and m+1 -> 1 correctly.
  std::pair<i64, i64> crandall_fold(i64 x, i64 m) {
    if (!is_mersenne(m)) fail(errc::not_mersenne, std::to_string(m) + " is not 2^n-1");
    int n = log2_exact(m + 1);
    i64 y = x;
    i64 q = constant(0);
    while (bound(y) > m + 1) {
      i64 hi = shr(y, n);
      q = add(q, hi);
      y = add(band(y, m), hi);
    }
    return {y, q};
  }

  i64 binary(DagOp op, i64 a, i64 b, i64 bound_value) {
    ResolutionDag::Node n;
    n.op = op;
    n.operands = {a, b};
    return push(n, bound_value);
  }

  i64 push(const ResolutionDag::Node& n, i64 bound_value) {
    dag.nodes.push_back(n);
    bounds_.push_back(bound_value < 0 ? 0 : bound_value);
    return static_cast<i64>(dag.nodes.size()) - 1;
  }

  std::vector<i64> bounds_;
};

namespace detail {

struct OffsetShape {
  i64 slot_mult;   // m
  i64 corr_gcd;    // g
};

}  // namespace detail

/// Emit the bank-address and bank-offset DAGs for a geometry with every
/// constant multiply/divide/modulo strength-reduced where a rule applies.
inline ResolutionDag build_resolution(const HyperplaneGeometry& g, int shift_add_radius = 2) {
  if (g.region.size() != g.n_dims())
    fail(errc::invalid_input, "geometry needs a selected P region");
  DagBuilder b;
  std::vector<i64> padded = g.padded_dims();
  std::vector<i64> x(g.n_dims());
  for (std::size_t d = 0; d < g.n_dims(); ++d)
    x[d] = b.input("x" + std::to_string(d), static_cast<i64>(d), padded[d] - 1);

  if (g.flat()) {
    i64 dot = -1;
    for (std::size_t d = 0; d < g.n_dims(); ++d) {
      if (g.alpha[d] == 0) continue;
      i64 term = b.mul_const(x[d], g.alpha[d], shift_add_radius);
      dot = dot < 0 ? term : b.add(dot, term);
    }
    if (dot < 0) dot = b.constant(0);
    i64 q = b.div_const(dot, g.blocking[0]);
    b.dag.bank_outputs.push_back(b.mod_const(q, g.banks[0]));

    i64 gg = detail::correction_gcd_flat(g);
    i64 m = detail::slot_count_flat(g);
    i64 regions = -1;
    for (std::size_t d = 0; d < g.n_dims(); ++d) {
      i64 tail = 1;
      for (std::size_t j = d + 1; j < g.n_dims(); ++j) tail *= ceil_div(g.dims[j], g.region[j]);
      i64 term = b.mul_const(b.div_const(x[d], g.region[d]), tail, shift_add_radius);
      regions = regions < 0 ? term : b.add(regions, term);
    }
    i64 bo = b.mul_const(regions, m, shift_add_radius);
    if (g.blocking[0] > 1) {
      i64 corr = b.div_const(b.mod_const(dot, g.blocking[0]), gg);
      bo = b.add(bo, corr);
    }
    b.dag.offset_output = bo;
    return std::move(b.dag);
  }

  i64 bo = -1;
  for (std::size_t d = 0; d < g.n_dims(); ++d) {
    i64 scaled = b.mul_const(x[d], g.alpha[d], shift_add_radius);
    i64 q = b.div_const(scaled, g.blocking[d]);
    b.dag.bank_outputs.push_back(b.mod_const(q, g.banks[d]));

    i64 m = detail::slot_count_dim(g, d);
    i64 gg = detail::correction_gcd_dim(g, d);
    i64 slot = b.mul_const(b.div_const(x[d], g.region[d]), m, shift_add_radius);
    if (g.blocking[d] > 1) {
      i64 corr = b.div_const(b.mod_const(scaled, g.blocking[d]), gg);
      slot = b.add(slot, corr);
    }
    i64 radix = ceil_div(g.dims[d], g.region[d]) * m;
    bo = bo < 0 ? slot : b.add(b.mul_const(bo, radix, shift_add_radius), slot);
  }
  b.dag.offset_output = bo < 0 ? b.constant(0) : bo;
  return std::move(b.dag);
}

/// Exhaustive (or sampled, above 2^16 cells) agreement check between a
/// resolution DAG and direct evaluation of the bank equations.
inline bool verify_resolution(const ResolutionDag& dag, const HyperplaneGeometry& g,
                              u64 seed = 30, i64 sample_budget = 1'000'000) {
  std::vector<i64> padded = g.padded_dims();
  i64 cells = 1;
  for (i64 p : padded) cells = sat_mul(cells, p);

  auto check = [&](const std::vector<i64>& x) {
    auto out = dag.eval(x);
    if (out.banks != bank_address(x, g)) return false;
    return out.offset == bank_offset(x, g);
  };

  if (cells <= 65536) {
    bool ok = true;
    for_each_point(padded, [&](const std::vector<i64>& x) {
      if (!check(x)) {
        ok = false;
        return false;
      }
      return true;
    });
    return ok;
  }

  std::vector<i64> x(padded.size());
  // Boundary points first.
  for (std::size_t mask = 0; mask < (std::size_t{1} << padded.size()); ++mask) {
    for (std::size_t d = 0; d < padded.size(); ++d)
      x[d] = (mask >> d) & 1 ? padded[d] - 1 : 0;
    if (!check(x)) return false;
  }
  u64 state = seed * 6364136223846793005ULL + 1442695040888963407ULL;
  auto next = [&state]() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  };
  for (i64 s = 0; s < sample_budget; ++s) {
    for (std::size_t d = 0; d < padded.size(); ++d)
      x[d] = static_cast<i64>(next() % static_cast<u64>(padded[d]));
    if (!check(x)) return false;
  }
  return true;
}

}  // namespace bankforge
