#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bankforge/common.hpp"

namespace bankforge {

enum class SyncClass { Synchronized, PartiallySynchronized, Unsynchronized };
enum class AccessKind { Read, Write };

/// One loop counter. Values are start + step*j for j in [0, trip_count()),
/// i.e. `stop` is exclusive. A stop given as a symbol (data-dependent bound)
/// marks the iterator dynamic; its range is clamped conservatively.
struct IteratorDomain {
  std::string name;
  i64 start = 0;
  i64 step = 1;
  i64 stop = 0;
  i64 parallelization = 1;
  std::optional<SyncClass> sync_override;
  std::vector<i64> partial_offsets;  // per-lane start offsets, PartiallySynchronized only
  bool dynamic = false;
  std::string bound_symbol;
  std::vector<std::string> bound_args;

  i64 trip_count() const {
    if (step == 0) fail(errc::invalid_input, "iterator '" + name + "' has step 0");
    i64 span = stop - start;
    if ((span < 0) != (step < 0) && span != 0)
      fail(errc::invalid_input, "iterator '" + name + "' never terminates");
    i64 t = ceil_div(span, step);
    return t < 0 ? 0 : t;
  }
};

/// A column of the access matrix is bound to an iterator or to an
/// uninterpreted symbol (side-effect-free call such as an indirection array).
struct AccessColumn {
  enum class Kind { Iterator, Symbol } kind = Kind::Iterator;
  std::string name;
  std::vector<std::string> args;  // symbol columns only
};

/// Linear form over the variables of a normalized access:
/// value = sum coeff[v] * var_v + constant, each var_v in [0, count_v).
struct LinearForm {
  std::vector<i64> coeffs;
  i64 constant = 0;

  i64 eval(const std::vector<i64>& point) const {
    i64 v = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i) v += coeffs[i] * point[i];
    return v;
  }
};

/// A variable of the normalized form. Symbols keep their argument forms so
/// the simulator can resolve them against a concrete table; the conflict
/// analysis treats them as independent clamped unknowns.
struct VarSpec {
  std::string name;
  i64 count = 1;
  bool is_symbol = false;
  std::string symbol_name;
  std::vector<LinearForm> symbol_args;
};

struct LinearAddress {
  std::vector<VarSpec> vars;
  std::vector<LinearForm> dims;  // one per memory dimension

  std::vector<i64> eval(const std::vector<i64>& point) const {
    std::vector<i64> x(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) x[d] = dims[d].eval(point);
    return x;
  }
};

/// One logical access in affine form x = A*i + C. Unrolling clones accesses
/// per lane (recording lane_of and the UID); synchronize() lowers the access
/// to its LinearAddress normal form, the representation every later stage
/// consumes.
struct AffineAccess {
  std::string id;
  std::string memory_id;
  AccessKind kind = AccessKind::Read;
  std::vector<std::vector<i64>> matrix;  // n x m, row-major
  std::vector<i64> offsets;              // n
  std::vector<AccessColumn> columns;     // m
  std::string controller;                // id of the containing inner controller
  std::optional<i64> cycle;              // schedule cycle inside the inner controller
  std::vector<i64> uid;                  // one lane index per parallelized ancestor
  std::vector<std::string> uid_path;     // controller id per uid component
  std::map<std::string, i64> lane_of;    // iterator name -> lane index
  std::optional<LinearAddress> normalized;

  std::size_t mem_dims() const { return normalized ? normalized->dims.size() : matrix.size(); }

  std::string uid_string() const {
    std::string s;
    for (i64 u : uid) {
      if (!s.empty()) s += ',';
      s += std::to_string(u);
    }
    return s;
  }

  bool same_instance(const AffineAccess& o) const { return id == o.id && uid == o.uid; }
};

/// Accesses that can be active during the same cycle on the same buffer.
struct AccessGroup {
  std::string memory_id;
  std::vector<std::size_t> members;  // indices into the prepared access list
};

enum class GeometryStyle { Flat, Multidimensional };

/// Banking scheme parameters. Flat: one (N, B) pair over the dot product
/// x.alpha. Multidimensional: an independent 1-D geometry per memory
/// dimension (the orthogonal-parallelotope subset of lattice schemes).
struct HyperplaneGeometry {
  GeometryStyle style = GeometryStyle::Flat;
  std::vector<i64> banks;     // N, length 1 (flat) or n (multidimensional)
  std::vector<i64> blocking;  // B, same length as banks
  std::vector<i64> alpha;     // length n
  std::vector<i64> region;    // P, length n (empty until selected)
  std::vector<i64> dims;      // D, length n
  i64 ports = 1;

  std::size_t n_dims() const { return dims.size(); }
  bool flat() const { return style == GeometryStyle::Flat; }

  i64 total_banks() const {
    i64 p = 1;
    for (i64 n : banks) p = sat_mul(p, n);
    return p;
  }

  std::vector<i64> padded_dims() const {
    std::vector<i64> out(dims.size());
    for (std::size_t d = 0; d < dims.size(); ++d) {
      i64 p = region.empty() ? dims[d] : region[d];
      out[d] = ceil_div(dims[d], p) * p;
    }
    return out;
  }

  std::vector<i64> padding() const {
    std::vector<i64> pad = padded_dims();
    for (std::size_t d = 0; d < dims.size(); ++d) pad[d] -= dims[d];
    return pad;
  }

  std::string signature() const {
    std::string s = flat() ? "F" : "M";
    auto vec = [&s](const char* tag, const std::vector<i64>& v) {
      s += tag;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    };
    vec(";N=", banks);
    vec(";B=", blocking);
    vec(";a=", alpha);
    if (!region.empty()) vec(";P=", region);
    return s;
  }
};

struct SchemeMetrics {
  std::vector<i64> fan_out;   // per group member, flattened in group order
  std::vector<i64> fan_in;    // per linearized bank id
  std::vector<i64> padding;   // delta per dimension
  i64 bank_capacity = 0;      // enumerated max offset + 1
  i64 capacity_bound = 0;     // closed-form upper bound, >= bank_capacity
};

}  // namespace bankforge
