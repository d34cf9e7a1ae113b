#pragma once

// Shared problem builders for the test suites.

#include <random>

#include "bankforge/search.hpp"

namespace fixtures {

using namespace bankforge;

inline HyperplaneGeometry flat_geom(i64 n, i64 b, std::vector<i64> alpha, std::vector<i64> dims,
                                    std::vector<i64> region = {}) {
  HyperplaneGeometry g;
  g.style = GeometryStyle::Flat;
  g.banks = {n};
  g.blocking = {b};
  g.alpha = std::move(alpha);
  g.dims = std::move(dims);
  g.region = std::move(region);
  return g;
}

inline HyperplaneGeometry multi_geom(std::vector<i64> n, std::vector<i64> b,
                                     std::vector<i64> alpha, std::vector<i64> dims,
                                     std::vector<i64> region = {}) {
  HyperplaneGeometry g;
  g.style = GeometryStyle::Multidimensional;
  g.banks = std::move(n);
  g.blocking = std::move(b);
  g.alpha = std::move(alpha);
  g.dims = std::move(dims);
  g.region = std::move(region);
  return g;
}

/// Hand-built normalized access for polytope unit tests: one memory
/// dimension per form; vars shared across accesses by name.
inline AffineAccess raw_access(std::string id, std::vector<i64> uid,
                               std::vector<VarSpec> vars,
                               std::vector<std::vector<i64>> dim_coeffs,
                               std::vector<i64> dim_consts,
                               AccessKind kind = AccessKind::Read) {
  AffineAccess a;
  a.id = std::move(id);
  a.memory_id = "mem";
  a.kind = kind;
  a.uid = std::move(uid);
  LinearAddress la;
  la.vars = std::move(vars);
  for (std::size_t d = 0; d < dim_coeffs.size(); ++d) {
    LinearForm f;
    f.coeffs = dim_coeffs[d];
    f.constant = dim_consts[d];
    la.dims.push_back(std::move(f));
  }
  a.normalized = std::move(la);
  return a;
}

/// The running toy example: iterator k (start 0, step 3, stop 36, par 2)
/// reading arr[k+1] and arr[k+2]; lanes resolve to 6t+{1,4} and 6t+{2,5}.
inline Problem fig5_problem() {
  Problem p;
  p.memory_id = "arr";
  p.dims = {36};
  p.element_bits = 32;
  p.ports = 1;

  Controller root;
  root.id = "root";
  root.level = Level::Outer;
  root.schedule = Schedule::Sequential;
  Controller loop;
  loop.id = "loop_k";
  loop.level = Level::Inner;
  loop.schedule = Schedule::Pipelined;
  loop.initiation_interval = 1;
  IteratorDomain k;
  k.name = "k";
  k.start = 0;
  k.step = 3;
  k.stop = 36;
  k.parallelization = 2;
  loop.counters.push_back(k);
  root.children.push_back(loop);
  p.program.root = root;
  p.program.strategy = UnrollStrategy::ForkJoinOfPipelines;

  for (i64 c : {1, 2}) {
    AffineAccess a;
    a.id = "r" + std::to_string(c);
    a.memory_id = "arr";
    a.kind = AccessKind::Read;
    a.matrix = {{1}};
    a.offsets = {c};
    AccessColumn col;
    col.kind = AccessColumn::Kind::Iterator;
    col.name = "k";
    a.columns.push_back(col);
    a.controller = "loop_k";
    p.program.accesses.push_back(std::move(a));
  }
  return p;
}

/// Desk-scale grid variant of the molecular-dynamics pattern: a vectorized
/// tile load (PL = 4) into a 4x4x4x16 array, then readers parallelized over
/// x/y/z (2 each) with an inner data-dependent loop q (par 2).
inline Problem md_grid_problem() {
  Problem p;
  p.memory_id = "dvec";
  p.dims = {4, 4, 4, 16};
  p.element_bits = 32;
  p.ports = 1;
  p.program.strategy = UnrollStrategy::PipelineOfForkJoins;
  p.concrete_bounds["Q_RNG"] = 4;

  Controller root;
  root.id = "root";
  root.level = Level::Outer;
  root.schedule = Schedule::Sequential;

  Controller load;
  load.id = "load";
  load.level = Level::Inner;
  load.initiation_interval = 1;
  for (int d = 0; d < 3; ++d) {
    IteratorDomain it;
    it.name = "d" + std::to_string(d);
    it.stop = 4;
    load.counters.push_back(it);
  }
  IteratorDomain d3;
  d3.name = "d3";
  d3.stop = 16;
  d3.parallelization = 4;
  load.counters.push_back(d3);
  root.children.push_back(load);

  Controller xyz;
  xyz.id = "xyz";
  xyz.level = Level::Outer;
  xyz.schedule = Schedule::Pipelined;
  for (const char* n : {"x", "y", "z"}) {
    IteratorDomain it;
    it.name = n;
    it.stop = 4;
    it.parallelization = 2;
    xyz.counters.push_back(it);
  }
  Controller p_loop;
  p_loop.id = "p_loop";
  p_loop.level = Level::Outer;
  p_loop.schedule = Schedule::Sequential;
  IteratorDomain pp;
  pp.name = "p";
  pp.stop = 4;
  p_loop.counters.push_back(pp);

  Controller q_loop;
  q_loop.id = "q_loop";
  q_loop.level = Level::Inner;
  q_loop.initiation_interval = 1;
  IteratorDomain q;
  q.name = "q";
  q.dynamic = true;
  q.bound_symbol = "Q_RNG";
  q.bound_args = {"x", "y", "z"};
  q.parallelization = 2;
  q_loop.counters.push_back(q);
  p_loop.children.push_back(q_loop);

  Controller dyn;
  dyn.id = "dyn_loop";
  dyn.level = Level::Inner;
  dyn.initiation_interval = 1;
  IteratorDomain pd;
  pd.name = "p_dyn";
  pd.dynamic = true;
  pd.bound_symbol = "density";
  pd.bound_args = {};
  dyn.counters.push_back(pd);

  xyz.children.push_back(p_loop);
  xyz.children.push_back(dyn);
  root.children.push_back(xyz);
  p.program.root = root;
  p.concrete_bounds["density"] = 4;

  AffineAccess w;
  w.id = "w";
  w.memory_id = "dvec";
  w.kind = AccessKind::Write;
  w.matrix = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  w.offsets = {0, 0, 0, 0};
  for (const char* n : {"d0", "d1", "d2", "d3"}) {
    AccessColumn c;
    c.name = n;
    w.columns.push_back(c);
  }
  w.controller = "load";
  p.program.accesses.push_back(std::move(w));

  AffineAccess r;
  r.id = "r";
  r.memory_id = "dvec";
  r.kind = AccessKind::Read;
  r.matrix = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  r.offsets = {0, 0, 0, 0};
  for (const char* n : {"x", "y", "z", "q"}) {
    AccessColumn c;
    c.name = n;
    r.columns.push_back(c);
  }
  r.controller = "q_loop";
  p.program.accesses.push_back(std::move(r));
  return p;
}

/// One unparallelized access; the trivial single-bank scheme must win.
inline Problem single_access_problem() {
  Problem p;
  p.memory_id = "buf";
  p.dims = {16};
  Controller root;
  root.id = "root";
  root.level = Level::Outer;
  root.schedule = Schedule::Sequential;
  Controller loop;
  loop.id = "loop";
  loop.level = Level::Inner;
  loop.initiation_interval = 1;
  IteratorDomain i;
  i.name = "i";
  i.stop = 16;
  loop.counters.push_back(i);
  root.children.push_back(loop);
  p.program.root = root;

  AffineAccess a;
  a.id = "r";
  a.memory_id = "buf";
  a.kind = AccessKind::Read;
  a.matrix = {{1}};
  a.offsets = {0};
  AccessColumn col;
  col.name = "i";
  a.columns.push_back(col);
  a.controller = "loop";
  p.program.accesses.push_back(std::move(a));
  return p;
}

/// Random valid geometry within the acceptance envelope: alpha <= 8,
/// N <= 16, B <= 4, dims <= 3, extents <= 32, coverage holds.
inline HyperplaneGeometry random_valid_geometry(std::mt19937_64& rng) {
  while (true) {
    std::size_t n = 1 + static_cast<std::size_t>(rng() % 3);
    HyperplaneGeometry g;
    g.dims.resize(n);
    g.alpha.resize(n);
    for (std::size_t d = 0; d < n; ++d) g.dims[d] = 4 + static_cast<i64>(rng() % 29);
    if (n > 1 && rng() % 3 == 0) {
      g.style = GeometryStyle::Multidimensional;
      g.banks.resize(n);
      g.blocking.resize(n);
      for (std::size_t d = 0; d < n; ++d) {
        g.banks[d] = 1 + static_cast<i64>(rng() % 4);
        g.blocking[d] = 1 + static_cast<i64>(rng() % 4);
        g.alpha[d] = 1 + static_cast<i64>(rng() % 8);
      }
    } else {
      g.style = GeometryStyle::Flat;
      g.banks = {1 + static_cast<i64>(rng() % 16)};
      g.blocking = {1 + static_cast<i64>(rng() % 4)};
      for (std::size_t d = 0; d < n; ++d) g.alpha[d] = static_cast<i64>(rng() % 9);
      bool zero = true;
      for (i64 a : g.alpha)
        if (a) zero = false;
      if (zero) continue;
    }
    g = normalize(g);
    i64 cells = 1;
    for (i64 d : g.dims) cells = sat_mul(cells, d);
    if (cells > 40000) continue;
    try {
      g.region = select_parallelotope(g);
    } catch (const error&) {
      continue;
    }
    return g;
  }
}

}  // namespace fixtures
