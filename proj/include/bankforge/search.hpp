#pragma once

#include <chrono>
#include <future>
#include <set>
#include <sstream>

#include "bankforge/costmodel.hpp"
#include "bankforge/geometry.hpp"
#include "bankforge/polytope.hpp"
#include "bankforge/program.hpp"
#include "bankforge/rewrite.hpp"
#include "bankforge/sim.hpp"
#include "bankforge/synth.hpp"
#include "bankforge/validate.hpp"

namespace bankforge {

struct CandidateBudget {
  i64 max_n = 0;  // 0: min(lcm_multiples * lcm(group sizes), product of extents)
  i64 alpha_max = 8;
  i64 b_max = 8;
  i64 lcm_multiples = 4;
  i64 enum_budget = 10'000'000;
  i64 sim_budget = 1'000'000;
  i64 symbol_range = 256;
  i64 max_candidates = 50'000;
  i64 max_solutions = 0;  // 0: keep every valid scheme found
  int shift_add_radius = 2;
  bool multidim = true;
  bool replay_verify = true;
  u64 seed = 30;
};

struct Problem {
  std::string memory_id;
  std::vector<i64> dims;
  i64 element_bits = 32;
  i64 ports = 1;
  Program program;
  CandidateBudget budget;
  std::string objective = "lut";
  std::map<std::string, i64> concrete_bounds;
  std::map<std::string, std::map<std::vector<i64>, i64>> symbol_tables;
};

struct PreparedProblem {
  Program unrolled;
  std::vector<AccessGroup> groups;
  i64 readers = 0, writers = 0, controller_depth = 0;
};

namespace detail {

inline i64 tree_depth(const Controller& c) {
  i64 d = 0;
  for (const Controller& ch : c.children) d = std::max(d, tree_depth(ch));
  return d + 1;
}

}  // namespace detail

/// Unroll, synchronize, bounds-check, and group the program's accesses.
inline PreparedProblem prepare(const Problem& problem) {
  PreparedProblem prep;
  prep.unrolled = unroll(problem.program);
  SyncConfig cfg;
  cfg.strategy = problem.program.strategy;
  cfg.symbol_range = problem.budget.symbol_range;
  cfg.concrete_bounds = problem.concrete_bounds;
  synchronize(problem.program.root, prep.unrolled.accesses, cfg);
  clamp_and_validate_bounds(prep.unrolled.accesses, problem.dims);
  for (const AffineAccess& a : prep.unrolled.accesses) {
    if (a.memory_id != problem.memory_id)
      fail(errc::mismatched_memory, "access '" + a.id + "' targets a different memory");
    (a.kind == AccessKind::Read ? prep.readers : prep.writers)++;
  }
  prep.groups = group_accesses(prep.unrolled.root, prep.unrolled.accesses);
  prep.controller_depth = detail::tree_depth(prep.unrolled.root);
  return prep;
}

/// Constants the datapath transforms can lower without a hardware multiplier
/// or divider: powers of two, Mersenne numbers, Mersenne divisors, and
/// two-term shift-add decompositions.
inline bool rewrite_friendly(i64 c, int shift_add_radius = 2) {
  if (c == 0 || c == 1) return true;
  if (is_power_of_two(c)) return true;
  if (is_mersenne(c)) return true;
  if (mersenne_multiple(c).has_value()) return true;
  return shift_add_plan(c, shift_add_radius).has_value();
}

// ---------------------------------------------------------------------------
// Flat candidate stream. Three deterministic priority tiers:
//   1. N a multiple of lcm(group sizes) and N, B, every alpha rewrite-friendly
//   2. all parameters rewrite-friendly, N off the lcm lattice
//   3. everything else
// GCD-equivalent geometries are normalized and emitted once.
// ---------------------------------------------------------------------------

class FlatCandidateStream {
public:
  FlatCandidateStream(std::vector<i64> dims, i64 group_lcm, const CandidateBudget& budget)
      : dims_(std::move(dims)), budget_(budget), lcm_(std::max<i64>(1, group_lcm)) {
    max_n_ = budget.max_n;
    if (max_n_ <= 0) {
      i64 extent_cap = 1;
      for (i64 d : dims_) extent_cap = sat_mul(extent_cap, d);
      max_n_ = std::min(budget.lcm_multiples * lcm_, extent_cap);
      if (max_n_ < 1) max_n_ = 1;
    }
    alpha_.assign(dims_.size(), 0);
    tier_ = 1;
    n_ = 1;
    b_ = 1;
    advance_alpha();  // move off the all-zero vector
  }

  std::optional<HyperplaneGeometry> next() {
    while (tier_ <= 3) {
      if (n_ > max_n_) {
        ++tier_;
        n_ = 1;
        b_ = 1;
        alpha_.assign(dims_.size(), 0);
        advance_alpha();
        continue;
      }
      HyperplaneGeometry g;
      g.style = GeometryStyle::Flat;
      g.dims = dims_;
      g.banks = {n_};
      g.blocking = {b_};
      g.alpha = alpha_;
      step();
      g = normalize(g);
      if (classify(g) != tier_) continue;
      if (!seen_.insert(g.signature()).second) continue;
      return g;
    }
    return std::nullopt;
  }

private:
  int classify(const HyperplaneGeometry& g) const {
    bool friendly = rewrite_friendly(g.banks[0], budget_.shift_add_radius) &&
                    rewrite_friendly(g.blocking[0], budget_.shift_add_radius);
    for (i64 a : g.alpha)
      if (!rewrite_friendly(a, budget_.shift_add_radius)) friendly = false;
    if (!friendly) return 3;
    return g.banks[0] % lcm_ == 0 ? 1 : 2;
  }

  void step() {
    if (!advance_alpha()) {
      alpha_.assign(dims_.size(), 0);
      advance_alpha();
      if (++b_ > budget_.b_max) {
        b_ = 1;
        ++n_;
      }
    }
  }

  bool advance_alpha() {
    // Lexicographic counter over [0, alpha_max]^n skipping the zero vector.
    while (true) {
      std::size_t d = alpha_.size();
      while (d > 0) {
        --d;
        if (++alpha_[d] <= budget_.alpha_max) break;
        alpha_[d] = 0;
        if (d == 0) return false;
      }
      bool nonzero = false;
      for (i64 a : alpha_)
        if (a) nonzero = true;
      if (nonzero) return true;
    }
  }

  std::vector<i64> dims_;
  CandidateBudget budget_;
  i64 lcm_ = 1;
  i64 max_n_ = 1;
  int tier_ = 1;
  i64 n_ = 1, b_ = 1;
  std::vector<i64> alpha_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Multidimensional search: per-dimension projections with redundancy removal,
// per-dimension 1-D candidates scored by which concurrent pairs they resolve,
// then combinations whose union of resolved pairs leaves no k+1 clique.
// ---------------------------------------------------------------------------

struct Projection {
  std::vector<AffineAccess> accesses;             // deduplicated 1-D projections
  std::vector<AccessGroup> groups;                // groups over the projections
  std::vector<std::vector<std::size_t>> rep_of;   // per group: member -> projection index
};

/// Project every group member onto one memory dimension, dropping duplicate
/// projections (redundancy). Accesses that share a projection can never be
/// told apart by this dimension.
inline Projection project(const std::vector<AccessGroup>& groups,
                          const std::vector<AffineAccess>& accesses, std::size_t dim) {
  Projection out;
  out.rep_of.resize(groups.size());
  std::map<std::string, std::size_t> seen;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    AccessGroup pg;
    pg.memory_id = groups[gi].memory_id;
    std::set<std::size_t> members;
    for (std::size_t idx : groups[gi].members) {
      const AffineAccess& a = accesses[idx];
      if (!a.normalized) fail(errc::invalid_input, "project needs normalized accesses");
      const LinearAddress& la = *a.normalized;
      std::ostringstream key;
      key << "g" << gi << "|" << la.dims[dim].constant;
      for (std::size_t v = 0; v < la.vars.size(); ++v)
        if (la.dims[dim].coeffs[v] != 0)
          key << "|" << la.vars[v].name << "*" << la.dims[dim].coeffs[v] << ":"
              << la.vars[v].count;
      auto [it, fresh] = seen.emplace(key.str(), out.accesses.size());
      if (fresh) {
        AffineAccess proj = a;
        proj.id = a.id + "/d" + std::to_string(dim);
        LinearAddress pla;
        pla.vars = la.vars;
        pla.dims = {la.dims[dim]};
        proj.normalized = std::move(pla);
        proj.matrix.clear();
        proj.offsets.clear();
        out.accesses.push_back(std::move(proj));
      }
      out.rep_of[gi].push_back(it->second);
      if (members.insert(it->second).second) pg.members.push_back(it->second);
    }
    out.groups.push_back(std::move(pg));
  }
  return out;
}

struct SolveStats {
  i64 flat_examined = 0;
  i64 multidim_examined = 0;
  i64 emptiness_checks = 0;
  i64 valid_geometries = 0;
  double elapsed_ms = 0.0;
  std::vector<std::string> notes;
};

struct Solution {
  HyperplaneGeometry geometry;
  SchemeMetrics scheme_metrics;
  ResolutionDag dag;
  DagCensus dag_census;
  double predicted_lut = 0.0, predicted_ff = 0.0, predicted_bram = 0.0;
  i64 ports = 1;        // smallest port count the scheme is valid for
  i64 duplication = 1;  // array copies under bank-by-duplication
  bool replay_verified = false;
  bool replay_exhaustive = false;

  std::string rank_key(const std::string& objective) const {
    double obj = objective == "ff" ? predicted_ff
                                   : (objective == "bram" ? predicted_bram : predicted_lut);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%020.4f|%020.4f|%020.4f|%020.4f|%08lld|",
                  obj, predicted_lut, predicted_bram, predicted_ff,
                  static_cast<long long>(geometry.total_banks()));
    return std::string(buf) + geometry.signature() + "|p" + std::to_string(ports) + "|d" +
           std::to_string(duplication);
  }
};

struct CostModels {
  GbtModel lut, ff, bram;
};

/// Trains the bundled synthetic models once per seed; solve() uses them when
/// the caller does not supply trained models. The three targets are
/// independent and train on separate workers when BANKFORGE_THREADS allows.
inline const CostModels& default_cost_models(u64 seed = 30) {
  static std::map<u64, CostModels> cache;
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  Dataset data = generate_dataset(831, seed);
  std::vector<std::vector<double>> expanded;
  for (const auto& r : data.rows) expanded.push_back(poly_expand(r));
  GbtParams params;
  params.random_state = seed;
  auto fit = [&](const char* target) {
    GbtModel m0 = train(expanded, data.target(target), params, target);
    return select_and_retrain(m0, expanded, data.target(target), 36);
  };
  CostModels models;
  if (worker_count() >= 2) {
    std::future<GbtModel> ff = std::async(std::launch::async, fit, "ff");
    std::future<GbtModel> bram = std::async(std::launch::async, fit, "bram");
    models.lut = fit("lut");
    models.ff = ff.get();
    models.bram = bram.get();
  } else {
    models.lut = fit("lut");
    models.ff = fit("ff");
    models.bram = fit("bram");
  }
  return cache.emplace(seed, std::move(models)).first->second;
}

struct SolveResult {
  std::vector<Solution> solutions;  // ranked, best first
  SolveStats stats;
};

namespace detail {

// Reader round-robin split by UID order; writers go to every duplicate.
inline std::vector<std::vector<std::size_t>> duplication_split(
    const std::vector<AffineAccess>& accesses, i64 dup) {
  std::vector<std::vector<std::size_t>> subsets(static_cast<std::size_t>(dup));
  i64 reader_idx = 0;
  for (std::size_t i = 0; i < accesses.size(); ++i) {
    if (accesses[i].kind == AccessKind::Write) {
      for (auto& s : subsets) s.push_back(i);
    } else {
      subsets[static_cast<std::size_t>(reader_idx % dup)].push_back(i);
      ++reader_idx;
    }
  }
  return subsets;
}

inline std::vector<AccessGroup> group_subset(const Controller& root,
                                             const std::vector<AffineAccess>& accesses,
                                             const std::vector<std::size_t>& subset) {
  std::vector<AccessGroup> groups;
  for (std::size_t idx : subset) {
    bool placed = false;
    for (AccessGroup& g : groups) {
      bool clash = false;
      for (std::size_t j : g.members)
        if (is_concurrent(lca(root, accesses[idx], accesses[j]), accesses[idx], accesses[j])) {
          clash = true;
          break;
        }
      if (clash) {
        g.members.push_back(idx);
        placed = true;
        break;
      }
    }
    if (!placed) {
      AccessGroup g;
      g.memory_id = accesses[idx].memory_id;
      g.members.push_back(idx);
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

// Largest clique size in the conflict graphs, capped at `cap`; -1 when a
// clique larger than the cap exists.
inline i64 capped_max_clique(const std::vector<std::vector<std::vector<bool>>>& graphs, i64 cap) {
  i64 best = 1;
  for (const auto& adj : graphs) {
    if (adj.empty()) continue;
    i64 s = best;
    while (s < cap + 1 && has_clique(adj, static_cast<std::size_t>(s) + 1)) ++s;
    if (s >= cap + 1) return -1;
    best = std::max(best, s);
  }
  return best;
}

// Single-ported fast path: stop at the first non-empty pair.
inline bool all_pairs_empty(const std::vector<AccessGroup>& groups,
                            const std::vector<AffineAccess>& accesses,
                            const HyperplaneGeometry& g, i64 budget, SolveStats& stats) {
  for (const AccessGroup& grp : groups)
    for (std::size_t i = 0; i < grp.members.size(); ++i)
      for (std::size_t j = i + 1; j < grp.members.size(); ++j) {
        ++stats.emptiness_checks;
        if (!is_empty(build_conflict(accesses[grp.members[i]], accesses[grp.members[j]], g),
                      budget))
          return false;
      }
  return true;
}

}  // namespace detail

/// Run the full pipeline on one prepared problem and one candidate geometry:
/// conflict graphs (optionally per duplicate), fewest viable ports, region
/// selection, metrics, datapath DAG, and cost prediction.
inline std::optional<Solution> evaluate_candidate(const Problem& problem,
                                                  const PreparedProblem& prep,
                                                  HyperplaneGeometry g, const CostModels& models,
                                                  SolveStats& stats) {
  const CandidateBudget& budget = problem.budget;
  g.ports = problem.ports;

  i64 duplication = 1;
  i64 ports = -1;
  std::vector<std::vector<AccessGroup>> dup_groups;
  for (i64 dup : {i64{1}, i64{2}, i64{4}}) {
    if (dup > 1 && prep.readers < dup) break;
    std::vector<std::vector<AccessGroup>> candidate_groups;
    if (dup == 1) {
      candidate_groups.push_back(prep.groups);
    } else {
      for (const auto& subset : detail::duplication_split(prep.unrolled.accesses, dup))
        candidate_groups.push_back(
            detail::group_subset(prep.unrolled.root, prep.unrolled.accesses, subset));
    }
    try {
      if (problem.ports == 1) {
        bool ok = true;
        for (const auto& groups : candidate_groups)
          if (!detail::all_pairs_empty(groups, prep.unrolled.accesses, g, budget.enum_budget,
                                       stats))
            ok = false;
        if (ok) {
          duplication = dup;
          ports = 1;
          dup_groups = std::move(candidate_groups);
          break;
        }
      } else {
        std::vector<std::vector<std::vector<bool>>> graphs;
        ValidationStats vstats;
        for (const auto& groups : candidate_groups)
          for (const AccessGroup& grp : groups)
            graphs.push_back(detail::conflict_graph(grp, prep.unrolled.accesses, g,
                                                    budget.enum_budget, &vstats));
        stats.emptiness_checks += vstats.emptiness_checks;
        i64 clique = detail::capped_max_clique(graphs, problem.ports);
        if (clique > 0) {
          duplication = dup;
          ports = clique;
          dup_groups = std::move(candidate_groups);
          break;
        }
      }
    } catch (const error& e) {
      if (e.kind() != errc::bounds_budget_exceeded) throw;
      return std::nullopt;
    }
  }
  if (ports < 0) return std::nullopt;

  Solution sol;
  try {
    g.region = select_parallelotope(g, budget.enum_budget);
  } catch (const error&) {
    return std::nullopt;
  }
  g.ports = ports;
  sol.geometry = g;
  sol.duplication = duplication;
  sol.ports = ports;

  std::vector<AccessGroup> metric_groups;
  for (const auto& groups : dup_groups)
    for (const AccessGroup& grp : groups) metric_groups.push_back(grp);
  try {
    sol.scheme_metrics = metrics(metric_groups, prep.unrolled.accesses, g, budget.enum_budget);
  } catch (const error&) {
    return std::nullopt;
  }

  sol.dag = build_resolution(g, budget.shift_add_radius);
  sol.dag_census = census(sol.dag);

  i64 max_fo = 0, max_fi = 0;
  for (i64 v : sol.scheme_metrics.fan_out) max_fo = std::max(max_fo, v);
  for (i64 v : sol.scheme_metrics.fan_in) max_fi = std::max(max_fi, v);
  std::vector<double> f = assemble_features(
      g, sol.dag_census, sol.scheme_metrics.bank_capacity, problem.element_bits, duplication,
      prep.readers, prep.writers, std::max<i64>(max_fo, 1), std::max<i64>(max_fi, 1),
      static_cast<i64>(prep.groups.size()), prep.controller_depth);
  std::vector<double> expanded = poly_expand(f);
  sol.predicted_lut = models.lut.predict(expanded);
  sol.predicted_ff = models.ff.predict(expanded);
  sol.predicted_bram = models.bram.predict(expanded);

  if (budget.replay_verify) {
    ReplayOptions opts;
    opts.cycle_budget = budget.sim_budget;
    opts.seed = budget.seed;
    opts.ports = ports;
    opts.symbol_tables = problem.symbol_tables;
    ReplayResult rr = replay(dup_groups, prep.unrolled.accesses, g, sol.dag,
                             sol.scheme_metrics.bank_capacity, opts);
    sol.replay_verified = rr.ok;
    sol.replay_exhaustive = rr.trace.exhaustive;
    if (!rr.ok) {
      stats.notes.push_back("replay rejected " + g.signature() + ": " +
                            rr.report->to_string());
      return std::nullopt;
    }
  }
  return sol;
}

namespace detail {

/// Per-dimension candidate search over access projections: keep 1-D
/// geometries by which concurrent pairs they provably separate, then try
/// combinations whose unresolved-pair graph stays within the port budget.
/// Combinations survive a joint exact validation in evaluate_candidate.
template <typename Consider>
inline void plan_multidim(const Problem& problem, const PreparedProblem& prep,
                          SolveStats& stats, Consider&& consider) {
  std::size_t n = problem.dims.size();
  const std::vector<AffineAccess>& accesses = prep.unrolled.accesses;

  struct PairRef {
    std::size_t group, i, j;
  };
  std::vector<PairRef> pairs;
  for (std::size_t gi = 0; gi < prep.groups.size(); ++gi)
    for (std::size_t i = 0; i < prep.groups[gi].members.size(); ++i)
      for (std::size_t j = i + 1; j < prep.groups[gi].members.size(); ++j)
        pairs.push_back({gi, i, j});
  std::size_t words = (pairs.size() + 63) / 64;

  struct DimCandidate {
    HyperplaneGeometry geom;  // 1-D flat
    std::vector<u64> resolved;
    i64 resolved_count = 0;
  };
  std::vector<std::vector<DimCandidate>> per_dim(n);

  const i64 per_dim_examined_cap = 2048;
  const std::size_t per_dim_keep = 12;

  for (std::size_t d = 0; d < n; ++d) {
    Projection proj = project(prep.groups, accesses, d);
    i64 plcm = 1;
    for (const AccessGroup& g : proj.groups)
      plcm = lcm64(plcm, std::max<std::size_t>(std::size_t{1}, g.members.size()));
    CandidateBudget dim_budget = problem.budget;
    dim_budget.max_n = 0;
    FlatCandidateStream stream({problem.dims[d]}, plcm, dim_budget);

    i64 examined = 0;
    while (examined < per_dim_examined_cap && per_dim[d].size() < per_dim_keep) {
      auto cand = stream.next();
      if (!cand) break;
      ++examined;
      ++stats.multidim_examined;
      DimCandidate dc;
      dc.geom = *cand;
      dc.resolved.assign(words, 0);
      std::map<std::pair<std::size_t, std::size_t>, bool> memo;
      bool budget_hit = false;
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        std::size_t ra = proj.rep_of[pairs[p].group][pairs[p].i];
        std::size_t rb = proj.rep_of[pairs[p].group][pairs[p].j];
        if (ra == rb) continue;  // identical projections never separate
        auto key = std::minmax(ra, rb);
        auto it = memo.find(key);
        bool empty;
        if (it != memo.end()) {
          empty = it->second;
        } else {
          ++stats.emptiness_checks;
          try {
            empty = is_empty(build_conflict(proj.accesses[ra], proj.accesses[rb], dc.geom),
                             problem.budget.enum_budget);
          } catch (const error& e) {
            if (e.kind() != errc::bounds_budget_exceeded) throw;
            budget_hit = true;
            break;
          }
          memo.emplace(key, empty);
        }
        if (empty) {
          dc.resolved[p / 64] |= u64{1} << (p % 64);
          ++dc.resolved_count;
        }
      }
      if (budget_hit) continue;
      if (dc.resolved_count > 0 || dc.geom.banks[0] == 1) per_dim[d].push_back(std::move(dc));
    }
    if (per_dim[d].empty()) return;  // no usable candidates for this dimension
  }

  // Enumerate combinations ordered by total bank count, filter by the
  // unresolved-pair clique bound, and hand survivors to the evaluator.
  struct Combo {
    std::vector<std::size_t> pick;
    i64 total_banks;
  };
  std::vector<Combo> combos;
  std::vector<i64> radix;
  for (std::size_t d = 0; d < n; ++d) radix.push_back(static_cast<i64>(per_dim[d].size()));
  for_each_point(radix, [&](const std::vector<i64>& idx) {
    Combo c;
    c.total_banks = 1;
    for (std::size_t d = 0; d < n; ++d) {
      c.pick.push_back(static_cast<std::size_t>(idx[d]));
      c.total_banks = sat_mul(c.total_banks, per_dim[d][c.pick[d]].geom.banks[0]);
    }
    combos.push_back(std::move(c));
    return true;
  });
  std::stable_sort(combos.begin(), combos.end(), [&](const Combo& a, const Combo& b) {
    if (a.total_banks != b.total_banks) return a.total_banks < b.total_banks;
    return a.pick < b.pick;
  });

  i64 bank_cap = problem.budget.max_n;
  if (bank_cap <= 0) {
    i64 extent_cap = 1;
    for (i64 dd : problem.dims) extent_cap = sat_mul(extent_cap, dd);
    i64 glcm = 1;
    for (const AccessGroup& g : prep.groups)
      glcm = lcm64(glcm, static_cast<i64>(std::max<std::size_t>(1, g.members.size())));
    bank_cap = std::min(problem.budget.lcm_multiples * glcm, extent_cap);
  }

  for (const Combo& combo : combos) {
    if (combo.total_banks > bank_cap) continue;
    // Union of resolved pairs; unresolved ones are conservatively treated as
    // conflicts and must not form a clique beyond the port count.
    std::vector<u64> resolved(words, 0);
    for (std::size_t d = 0; d < n; ++d)
      for (std::size_t w = 0; w < words; ++w) resolved[w] |= per_dim[d][combo.pick[d]].resolved[w];

    std::vector<std::vector<std::vector<bool>>> graphs(prep.groups.size());
    for (std::size_t gi = 0; gi < prep.groups.size(); ++gi) {
      std::size_t sz = prep.groups[gi].members.size();
      graphs[gi].assign(sz, std::vector<bool>(sz, false));
    }
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (!(resolved[p / 64] >> (p % 64) & 1)) {
        graphs[pairs[p].group][pairs[p].i][pairs[p].j] = true;
        graphs[pairs[p].group][pairs[p].j][pairs[p].i] = true;
      }
    if (capped_max_clique(graphs, problem.ports) < 0) continue;

    HyperplaneGeometry g;
    g.style = GeometryStyle::Multidimensional;
    g.dims = problem.dims;
    for (std::size_t d = 0; d < n; ++d) {
      const HyperplaneGeometry& one = per_dim[d][combo.pick[d]].geom;
      g.banks.push_back(one.banks[0]);
      g.blocking.push_back(one.blocking[0]);
      g.alpha.push_back(one.alpha[0]);
    }
    if (!consider(std::move(g))) return;
  }
}

}  // namespace detail

/// Solve one banking problem: grouping, synchronization, prioritized flat and
/// multidimensional candidate streams, validity, fewer-ported and
/// duplication variants, and cost-ranked output.
inline SolveResult solve(const Problem& problem, const CostModels* models_in = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  const CostModels& models =
      models_in ? *models_in : default_cost_models(problem.budget.seed);
  PreparedProblem prep = prepare(problem);
  SolveResult result;
  SolveStats& stats = result.stats;

  std::vector<i64> group_sizes;
  for (const AccessGroup& g : prep.groups) group_sizes.push_back(static_cast<i64>(g.members.size()));
  i64 group_lcm = 1;
  for (i64 s : group_sizes) group_lcm = lcm64(group_lcm, std::max<i64>(1, s));

  // Every valid geometry inside the candidate budget is kept and ranked; the
  // solution cap trims the ranked list, not the search.
  std::set<std::string> emitted;
  auto consider = [&](HyperplaneGeometry g) {
    if (!emitted.insert(g.signature()).second) return;
    if (auto sol = evaluate_candidate(problem, prep, std::move(g), models, stats)) {
      ++stats.valid_geometries;
      result.solutions.push_back(std::move(*sol));
    }
  };

  FlatCandidateStream flat(problem.dims, group_lcm, problem.budget);
  while (stats.flat_examined < problem.budget.max_candidates) {
    auto g = flat.next();
    if (!g) break;
    ++stats.flat_examined;
    consider(std::move(*g));
  }
  if (stats.flat_examined >= problem.budget.max_candidates)
    stats.notes.push_back("flat candidate stream truncated at the max_candidates budget");

  if (problem.budget.multidim && problem.dims.size() > 1)
    detail::plan_multidim(problem, prep, stats, [&](HyperplaneGeometry g) {
      consider(std::move(g));
      return true;
    });

  std::stable_sort(result.solutions.begin(), result.solutions.end(),
                   [&](const Solution& a, const Solution& b) {
                     return a.rank_key(problem.objective) < b.rank_key(problem.objective);
                   });
  if (problem.budget.max_solutions > 0 &&
      static_cast<i64>(result.solutions.size()) > problem.budget.max_solutions)
    result.solutions.resize(static_cast<std::size_t>(problem.budget.max_solutions));
  if (result.solutions.empty())
    fail(errc::no_solution, "no valid banking scheme found within the candidate budget");
  stats.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return result;
}

}  // namespace bankforge
