#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bankforge/types.hpp"

namespace bankforge {

enum class Level { Inner, Outer };
enum class Schedule { Sequential, Pipelined, ForkJoin, Fork, Streaming };
enum class UnrollStrategy { ForkJoinOfPipelines, PipelineOfForkJoins };

/// A hierarchically-nested state machine. Inner controllers hold dataflow
/// (and therefore the accesses); outer controllers hold other controllers.
struct Controller {
  std::string id;
  Level level = Level::Outer;
  Schedule schedule = Schedule::Pipelined;
  std::vector<IteratorDomain> counters;
  std::vector<Controller> children;
  std::optional<i64> initiation_interval;  // inner only
  std::optional<i64> latency;              // inner only
  std::optional<UnrollStrategy> strategy;  // per-controller override

  i64 lane_count() const {
    i64 p = 1;
    for (const IteratorDomain& c : counters) p *= c.parallelization;
    return p;
  }
};

struct Program {
  Controller root;
  std::vector<AffineAccess> accesses;
  UnrollStrategy strategy = UnrollStrategy::ForkJoinOfPipelines;
};

namespace detail {

inline void validate_tree(const Controller& c, std::set<std::string>& ctrl_ids,
                          std::set<std::string>& iter_names) {
  if (!ctrl_ids.insert(c.id).second)
    fail(errc::invalid_input, "duplicate controller id '" + c.id + "'");
  for (const IteratorDomain& it : c.counters) {
    if (!iter_names.insert(it.name).second)
      fail(errc::invalid_input, "duplicate iterator name '" + it.name + "'");
    if (it.step == 0) fail(errc::invalid_input, "iterator '" + it.name + "' has step 0");
    if (it.parallelization < 1)
      fail(errc::invalid_input, "iterator '" + it.name + "' has parallelization < 1");
  }
  if (c.level == Level::Inner && !c.children.empty())
    fail(errc::invalid_input, "inner controller '" + c.id + "' has children");
  for (const Controller& ch : c.children) validate_tree(ch, ctrl_ids, iter_names);
}

inline bool subtree_has_dynamic(const Controller& c) {
  for (const IteratorDomain& it : c.counters)
    if (it.dynamic) return true;
  for (const Controller& ch : c.children)
    if (subtree_has_dynamic(ch)) return true;
  return false;
}

struct UnrollState {
  const std::map<std::string, std::vector<std::size_t>>* attach = nullptr;
  const std::vector<AffineAccess>* input = nullptr;
  std::vector<AffineAccess>* out = nullptr;
  UnrollStrategy default_strategy = UnrollStrategy::ForkJoinOfPipelines;
};

inline Controller unroll_rec(const Controller& c, UnrollState& st, const std::string& suffix,
                             std::vector<i64> uid, std::vector<std::string> uid_path,
                             std::map<std::string, i64> lanes);

// Emits the vectorized access clones of one inner controller.
inline Controller unroll_inner(const Controller& c, UnrollState& st, const std::string& suffix,
                               const std::vector<i64>& uid,
                               const std::vector<std::string>& uid_path,
                               const std::map<std::string, i64>& lanes) {
  Controller node = c;
  node.id = c.id + suffix;
  node.children.clear();

  std::vector<const IteratorDomain*> par_counters;
  std::vector<i64> radix;
  for (const IteratorDomain& it : c.counters)
    if (it.parallelization > 1) {
      par_counters.push_back(&it);
      radix.push_back(it.parallelization);
    }

  auto it_attached = st.attach->find(c.id);
  if (it_attached == st.attach->end()) return node;
  for (std::size_t ai : it_attached->second) {
    const AffineAccess& a = (*st.input)[ai];
    for_each_point(radix, [&](const std::vector<i64>& lane_pt) {
      AffineAccess clone = a;
      clone.controller = node.id;
      clone.uid = uid;
      clone.uid_path = uid_path;
      clone.lane_of = lanes;
      if (!par_counters.empty()) {
        i64 flat = 0;
        for (std::size_t i = 0; i < par_counters.size(); ++i) {
          flat = flat * par_counters[i]->parallelization + lane_pt[i];
          clone.lane_of[par_counters[i]->name] = lane_pt[i];
        }
        clone.uid.push_back(flat);
        clone.uid_path.push_back(c.id);
      }
      st.out->push_back(std::move(clone));
      return true;
    });
  }
  return node;
}

inline Controller unroll_rec(const Controller& c, UnrollState& st, const std::string& suffix,
                             std::vector<i64> uid, std::vector<std::string> uid_path,
                             std::map<std::string, i64> lanes) {
  if (c.level == Level::Inner) return unroll_inner(c, st, suffix, uid, uid_path, lanes);

  Controller node = c;
  node.id = c.id + suffix;
  node.children.clear();

  i64 total_lanes = c.lane_count();
  if (total_lanes == 1) {
    for (const Controller& ch : c.children)
      node.children.push_back(unroll_rec(ch, st, suffix, uid, uid_path, lanes));
    return node;
  }

  std::vector<const IteratorDomain*> par_counters;
  std::vector<i64> radix;
  for (const IteratorDomain& it : c.counters)
    if (it.parallelization > 1) {
      par_counters.push_back(&it);
      radix.push_back(it.parallelization);
    }
  UnrollStrategy strat = c.strategy.value_or(st.default_strategy);

  auto lane_context = [&](const std::vector<i64>& lane_pt, std::vector<i64>& lane_uid,
                          std::vector<std::string>& lane_path, std::map<std::string, i64>& lm) {
    lane_uid = uid;
    lane_path = uid_path;
    lm = lanes;
    i64 flat = 0;
    for (std::size_t i = 0; i < par_counters.size(); ++i) {
      flat = flat * par_counters[i]->parallelization + lane_pt[i];
      lm[par_counters[i]->name] = lane_pt[i];
    }
    lane_uid.push_back(flat);
    lane_path.push_back(c.id);
    return flat;
  };

  if (strat == UnrollStrategy::ForkJoinOfPipelines) {
    // A fork-join stage between the parent and every child; each stage holds
    // one lane-clone of that child.
    for (std::size_t ci = 0; ci < c.children.size(); ++ci) {
      Controller fj;
      fj.id = node.id + ".fj" + std::to_string(ci);
      fj.level = Level::Outer;
      fj.schedule = Schedule::ForkJoin;
      for_each_point(radix, [&](const std::vector<i64>& lane_pt) {
        std::vector<i64> lane_uid;
        std::vector<std::string> lane_path;
        std::map<std::string, i64> lm;
        i64 flat = lane_context(lane_pt, lane_uid, lane_path, lm);
        fj.children.push_back(unroll_rec(c.children[ci], st,
                                         suffix + "#" + std::to_string(flat), lane_uid,
                                         lane_path, lm));
        return true;
      });
      node.children.push_back(std::move(fj));
    }
    return node;
  }

  // Pipeline-of-fork-joins: a single fork-join above per-lane clones that are
  // structurally identical to the pre-unrolled loop.
  Controller fj;
  fj.id = node.id + ".fj";
  fj.level = Level::Outer;
  fj.schedule = Schedule::ForkJoin;
  for_each_point(radix, [&](const std::vector<i64>& lane_pt) {
    std::vector<i64> lane_uid;
    std::vector<std::string> lane_path;
    std::map<std::string, i64> lm;
    i64 flat = lane_context(lane_pt, lane_uid, lane_path, lm);
    Controller lane = c;
    lane.id = node.id + "#" + std::to_string(flat);
    lane.children.clear();
    for (const Controller& ch : c.children)
      lane.children.push_back(
          unroll_rec(ch, st, suffix + "#" + std::to_string(flat), lane_uid, lane_path, lm));
    fj.children.push_back(std::move(lane));
    return true;
  });
  node.children.push_back(std::move(fj));
  return node;
}

}  // namespace detail

/// Expand every parallelized counter into lanes. Outer parallelization clones
/// child controllers (fork-join placement per strategy); inner parallelization
/// vectorizes accesses in place. Cloned accesses receive their UID, one
/// component per parallelized ancestor, outermost first.
inline Program unroll(const Program& prog) {
  std::set<std::string> cids;
  std::set<std::string> inames;
  detail::validate_tree(prog.root, cids, inames);

  std::map<std::string, std::vector<std::size_t>> attach;
  for (std::size_t i = 0; i < prog.accesses.size(); ++i) {
    if (!cids.count(prog.accesses[i].controller))
      fail(errc::invalid_input,
           "access '" + prog.accesses[i].id + "' references unknown controller");
    attach[prog.accesses[i].controller].push_back(i);
  }

  Program out;
  out.strategy = prog.strategy;
  detail::UnrollState st;
  st.attach = &attach;
  st.input = &prog.accesses;
  st.out = &out.accesses;
  st.default_strategy = prog.strategy;
  out.root = detail::unroll_rec(prog.root, st, "", {}, {}, {});

  // Program order, then lexicographic UID: the grouping loop depends on it.
  std::map<std::string, std::size_t> input_pos;
  for (std::size_t i = 0; i < prog.accesses.size(); ++i) input_pos[prog.accesses[i].id] = i;
  std::stable_sort(out.accesses.begin(), out.accesses.end(),
                   [&](const AffineAccess& a, const AffineAccess& b) {
                     std::size_t pa = input_pos[a.id], pb = input_pos[b.id];
                     if (pa != pb) return pa < pb;
                     return a.uid < b.uid;
                   });
  return out;
}

namespace detail {

inline bool find_path(const Controller& c, const std::string& id,
                      std::vector<const Controller*>& path) {
  path.push_back(&c);
  if (c.id == id) return true;
  for (const Controller& ch : c.children)
    if (find_path(ch, id, path)) return true;
  path.pop_back();
  return false;
}

}  // namespace detail

/// Deepest controller whose subtree holds both accesses. Two accesses in the
/// same inner controller (including an access against itself) share that
/// controller.
inline const Controller& lca(const Controller& root, const AffineAccess& a,
                             const AffineAccess& b) {
  std::vector<const Controller*> pa, pb;
  if (!detail::find_path(root, a.controller, pa) || !detail::find_path(root, b.controller, pb))
    fail(errc::disjoint_trees, "accesses are not in the same controller tree");
  const Controller* best = nullptr;
  for (std::size_t i = 0; i < pa.size() && i < pb.size() && pa[i] == pb[i]; ++i) best = pa[i];
  if (!best) fail(errc::disjoint_trees, "no common ancestor");
  return *best;
}

/// Controller-to-controller variant; a controller is not its own ancestor,
/// so lca(c, c) is the parent of c.
inline const Controller& lca_controllers(const Controller& root, const std::string& a,
                                         const std::string& b) {
  std::vector<const Controller*> pa, pb;
  if (!detail::find_path(root, a, pa) || !detail::find_path(root, b, pb))
    fail(errc::disjoint_trees, "controller not found");
  pa.pop_back();
  pb.pop_back();
  const Controller* best = nullptr;
  for (std::size_t i = 0; i < pa.size() && i < pb.size() && pa[i] == pb[i]; ++i) best = pa[i];
  if (!best) fail(errc::disjoint_trees, "no common ancestor");
  return *best;
}

/// Can the two accesses be active during the same cycle? For an inner LCA the
/// answer comes from the cycle schedule and initiation interval; accesses
/// without cycle annotations are conservatively concurrent. For an outer LCA
/// only fork-join and streaming schedules overlap on the same buffer.
inline bool is_concurrent(const Controller& lca_node, const AffineAccess& a,
                          const AffineAccess& b) {
  if (lca_node.level == Level::Inner) {
    if (!a.cycle || !b.cycle) return true;
    if (!lca_node.initiation_interval)
      fail(errc::missing_schedule,
           "inner controller '" + lca_node.id + "' has cycle annotations but no ii");
    i64 d = *a.cycle - *b.cycle;
    if (d < 0) d = -d;
    return d < *lca_node.initiation_interval;
  }
  switch (lca_node.schedule) {
    case Schedule::ForkJoin:
    case Schedule::Streaming:
      return true;
    case Schedule::Sequential:
    case Schedule::Fork:
    case Schedule::Pipelined:
      return false;
  }
  return false;
}

/// Greedy group placement: each access joins the first group holding an
/// access it can clash with, otherwise it opens a new group. Accesses in
/// different stages of a pipeline land in different groups because they hit
/// different buffers.
inline std::vector<AccessGroup> group_accesses(const Controller& root,
                                               const std::vector<AffineAccess>& accesses) {
  std::vector<AccessGroup> groups;
  for (std::size_t i = 0; i < accesses.size(); ++i) {
    bool placed = false;
    for (AccessGroup& g : groups) {
      bool clash = false;
      for (std::size_t j : g.members) {
        const Controller& l = lca(root, accesses[i], accesses[j]);
        if (is_concurrent(l, accesses[i], accesses[j])) {
          clash = true;
          break;
        }
      }
      if (clash) {
        g.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      AccessGroup g;
      g.memory_id = accesses[i].memory_id;
      g.members.push_back(i);
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Synchronization analysis: lower each unrolled access to its LinearAddress
// normal form. Synchronized iterators share one variable across UIDs (lane
// starts fold into the constant); partially synchronized ones add the
// declared per-lane offset; unsynchronized iterators get an independent
// variable per lane path.
// ---------------------------------------------------------------------------

struct SyncConfig {
  UnrollStrategy strategy = UnrollStrategy::ForkJoinOfPipelines;
  i64 symbol_range = 256;
  std::map<std::string, i64> concrete_bounds;  // dynamic-bound symbol -> stop value
};

namespace detail {

struct IterInfo {
  const IteratorDomain* domain = nullptr;
  const Controller* declared_on = nullptr;
  std::vector<const Controller*> ancestors;  // root..declaring controller
};

inline void collect_iters(const Controller& c, std::vector<const Controller*>& chain,
                          std::map<std::string, IterInfo>& out) {
  chain.push_back(&c);
  for (const IteratorDomain& it : c.counters) {
    IterInfo info;
    info.domain = &it;
    info.declared_on = &c;
    info.ancestors = chain;
    out[it.name] = info;
  }
  for (const Controller& ch : c.children) collect_iters(ch, chain, out);
  chain.pop_back();
}

inline SyncClass classify(const IterInfo& info, const SyncConfig& cfg) {
  const IteratorDomain& it = *info.domain;
  if (it.sync_override) return *it.sync_override;
  if (it.dynamic) return SyncClass::Unsynchronized;
  if (cfg.strategy == UnrollStrategy::ForkJoinOfPipelines) {
    // Lanes of an unrolled ancestor free-run once any sibling subtree has a
    // data-dependent bound; everything beneath them loses synchronization.
    for (std::size_t i = 0; i + 1 < info.ancestors.size(); ++i) {
      const Controller* anc = info.ancestors[i];
      if (anc->lane_count() > 1 && subtree_has_dynamic(*anc)) return SyncClass::Unsynchronized;
    }
  }
  if (!it.partial_offsets.empty()) return SyncClass::PartiallySynchronized;
  return SyncClass::Synchronized;
}

}  // namespace detail

/// Applies the per-iterator, per-UID substitution rules and fills in each
/// access's normalized linear address. The original (pre-unroll) tree supplies
/// the iterator scopes.
inline void synchronize(const Controller& original_root, std::vector<AffineAccess>& accesses,
                        const SyncConfig& cfg) {
  std::map<std::string, detail::IterInfo> iters;
  std::vector<const Controller*> chain;
  detail::collect_iters(original_root, chain, iters);

  for (std::size_t ai = 0; ai < accesses.size(); ++ai) {
    AffineAccess& a = accesses[ai];
    std::size_t n = a.mem_dims();
    std::size_t m = a.columns.size();
    if (a.offsets.size() != n)
      fail(errc::invalid_input, "access '" + a.id + "': offset length != rank");
    for (const auto& row : a.matrix)
      if (row.size() != m)
        fail(errc::invalid_input, "access '" + a.id + "': matrix width != column count");

    LinearAddress la;
    la.dims.resize(n);
    for (std::size_t d = 0; d < n; ++d) la.dims[d].constant = a.offsets[d];

    std::map<std::string, std::size_t> var_index;
    auto var_slot = [&](const VarSpec& v) {
      auto it = var_index.find(v.name);
      if (it != var_index.end()) return it->second;
      var_index.emplace(v.name, la.vars.size());
      la.vars.push_back(v);
      for (auto& f : la.dims) f.coeffs.push_back(0);
      return la.vars.size() - 1;
    };

    // Name + folded lane constant for one iterator column of this access.
    struct Lowered {
      std::string var;
      i64 count;
      i64 coeff;  // per variable step
      i64 base;   // constant contribution
    };
    auto lower_iter = [&](const std::string& name) -> Lowered {
      auto info_it = iters.find(name);
      if (info_it == iters.end())
        fail(errc::invalid_input, "access '" + a.id + "' uses unknown iterator '" + name + "'");
      const detail::IterInfo& info = info_it->second;
      const IteratorDomain& it = *info.domain;
      i64 lane = 0;
      if (auto l = a.lane_of.find(name); l != a.lane_of.end()) lane = l->second;

      i64 stop = it.stop;
      if (it.dynamic) {
        auto cb = cfg.concrete_bounds.find(it.bound_symbol);
        stop = cb != cfg.concrete_bounds.end() ? cb->second : it.start + cfg.symbol_range * it.step;
      }
      IteratorDomain clamped = it;
      clamped.stop = stop;
      i64 trips = clamped.trip_count();
      i64 par = it.parallelization;
      if (par > 1 && trips % par != 0)
        fail(errc::invalid_input,
             "iterator '" + name + "': parallelization " + std::to_string(par) +
                 " must divide the trip count " + std::to_string(trips) +
                 " (lanes would step outside the iteration space)");

      SyncClass sc = detail::classify(info, cfg);
      Lowered out;
      out.count = ceil_div(trips, par);
      if (out.count < 1) out.count = 1;
      out.coeff = it.step * par;
      out.base = it.start + it.step * lane;
      if (sc == SyncClass::PartiallySynchronized) {
        if (lane >= static_cast<i64>(it.partial_offsets.size()))
          fail(errc::invalid_input, "iterator '" + name + "': missing partial offset for lane " +
                                        std::to_string(lane));
        out.base += it.partial_offsets[static_cast<std::size_t>(lane)];
      }
      out.var = name;
      if (sc == SyncClass::Unsynchronized) {
        // Fresh variable per lane path above the declaring controller; the
        // declaring controller's own vector lanes still share the counter.
        std::string sfx;
        for (std::size_t k = 0; k < a.uid_path.size(); ++k) {
          if (a.uid_path[k] == info.declared_on->id &&
              info.declared_on->level == Level::Inner)
            break;
          sfx += "." + std::to_string(a.uid[k]);
          if (a.uid_path[k] == info.declared_on->id) break;
        }
        out.var = name + "@" + (sfx.empty() ? "0" : sfx);
      }
      return out;
    };

    for (std::size_t col = 0; col < m; ++col) {
      const AccessColumn& column = a.columns[col];
      if (column.kind == AccessColumn::Kind::Iterator) {
        Lowered lo = lower_iter(column.name);
        VarSpec v;
        v.name = lo.var;
        v.count = lo.count;
        std::size_t slot = var_slot(v);
        for (std::size_t d = 0; d < n; ++d) {
          la.dims[d].coeffs[slot] += a.matrix[d][col] * lo.coeff;
          la.dims[d].constant += a.matrix[d][col] * lo.base;
        }
      } else {
        // Symbol column: one clamped unknown per distinct (symbol, resolved
        // argument) signature. Identical signatures across accesses share the
        // variable, which is what makes them cancel in the delta.
        VarSpec v;
        v.is_symbol = true;
        v.symbol_name = column.name;
        std::string key = column.name + "(";
        for (std::size_t g = 0; g < column.args.size(); ++g) {
          Lowered lo = lower_iter(column.args[g]);
          VarSpec av;
          av.name = lo.var;
          av.count = lo.count;
          std::size_t aslot = var_slot(av);
          LinearForm arg;
          arg.coeffs.assign(la.vars.size(), 0);
          arg.coeffs[aslot] = lo.coeff;
          arg.constant = lo.base;
          v.symbol_args.push_back(std::move(arg));
          key += (g ? ";" : "") + lo.var + ":" + std::to_string(lo.coeff) + ":" +
                 std::to_string(lo.base);
        }
        key += ")";
        v.name = key;
        v.count = cfg.symbol_range;
        std::size_t slot = var_slot(v);
        for (std::size_t d = 0; d < n; ++d) la.dims[d].coeffs[slot] += a.matrix[d][col];
      }
    }

    // Symbol argument forms were built incrementally; pad them to the final
    // variable count.
    for (VarSpec& v : la.vars)
      for (LinearForm& f : v.symbol_args) f.coeffs.resize(la.vars.size(), 0);

    a.normalized = std::move(la);
  }
}

/// Interval check that every access stays inside the declared extents, and
/// symbol clamps are tightened so analysis ranges cannot leave the array.
inline void clamp_and_validate_bounds(std::vector<AffineAccess>& accesses,
                                      const std::vector<i64>& dims) {
  for (AffineAccess& a : accesses) {
    if (!a.normalized) fail(errc::invalid_input, "access not normalized");
    LinearAddress& la = *a.normalized;
    if (la.dims.size() != dims.size())
      fail(errc::dimension_mismatch, "access '" + a.id + "' rank != memory rank");
    for (std::size_t d = 0; d < dims.size(); ++d) {
      LinearForm& f = la.dims[d];
      // First tighten positive-coefficient symbols against the extent.
      i64 base_min = f.constant;
      for (std::size_t v = 0; v < f.coeffs.size(); ++v)
        if (f.coeffs[v] < 0) base_min += f.coeffs[v] * (la.vars[v].count - 1);
      for (std::size_t v = 0; v < f.coeffs.size(); ++v) {
        if (!la.vars[v].is_symbol || f.coeffs[v] <= 0) continue;
        i64 others_min = base_min;
        i64 cap = (dims[d] - 1 - others_min) / f.coeffs[v] + 1;
        if (cap < 1) cap = 1;
        if (cap < la.vars[v].count) la.vars[v].count = cap;
      }
      i64 lo = f.constant, hi = f.constant;
      for (std::size_t v = 0; v < f.coeffs.size(); ++v) {
        i64 c = f.coeffs[v];
        i64 span = la.vars[v].count - 1;
        if (c >= 0)
          hi += c * span;
        else
          lo += c * span;
      }
      if (lo < 0)
        fail(errc::out_of_bounds, "access '" + a.id + "' can address below 0 in dim " +
                                      std::to_string(d));
      if (hi >= dims[d])
        fail(errc::out_of_bounds, "access '" + a.id + "' can address " + std::to_string(hi) +
                                      " >= extent " + std::to_string(dims[d]) + " in dim " +
                                      std::to_string(d));
    }
  }

  // A symbol variable shared between accesses must keep one consistent range.
  std::map<std::string, i64> shared;
  for (const AffineAccess& a : accesses)
    for (const VarSpec& v : a.normalized->vars)
      if (v.is_symbol) {
        auto [it, fresh] = shared.emplace(v.name, v.count);
        if (!fresh) it->second = std::min(it->second, v.count);
      }
  for (AffineAccess& a : accesses)
    for (VarSpec& v : a.normalized->vars)
      if (v.is_symbol) v.count = shared[v.name];
}

}  // namespace bankforge
