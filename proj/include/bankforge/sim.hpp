#pragma once

#include <map>
#include <string>
#include <vector>

#include "bankforge/geometry.hpp"
#include "bankforge/rewrite.hpp"
#include "bankforge/types.hpp"

namespace bankforge {

struct ConflictReport {
  enum class Kind { PortOverflow, OffsetOverflow, DagMismatch };
  Kind kind = Kind::PortOverflow;
  i64 cycle = -1;
  std::size_t group = 0;
  std::size_t duplicate = 0;
  i64 bank = -1;
  std::vector<std::string> accesses;  // "id[uid]"
  std::string message;

  std::string to_string() const {
    std::string s = "conflict at cycle " + std::to_string(cycle) + " (group " +
                    std::to_string(group) + ", duplicate " + std::to_string(duplicate) + "): ";
    s += message;
    if (bank >= 0) s += " on bank " + std::to_string(bank);
    if (!accesses.empty()) {
      s += " [";
      for (std::size_t i = 0; i < accesses.size(); ++i) s += (i ? ", " : "") + accesses[i];
      s += "]";
    }
    return s;
  }
};

struct ReplayEntry {
  std::string access_id;
  std::string uid;
  std::vector<i64> address;
  i64 bank = 0;
  i64 offset = 0;
};

struct ReplayTrace {
  struct Cycle {
    i64 index = 0;
    std::vector<ReplayEntry> active;
  };
  std::vector<Cycle> cycles;  // truncated to trace_limit
  i64 total_cycles = 0;
  bool exhaustive = true;
};

struct ReplayResult {
  bool ok = true;
  std::optional<ConflictReport> report;
  ReplayTrace trace;
};

struct ReplayOptions {
  i64 cycle_budget = 1'000'000;
  i64 trace_limit = 1024;
  u64 seed = 30;
  i64 ports = 1;
  /// Concrete values for uninterpreted symbols, keyed by symbol name and
  /// argument tuple. Symbols without a table are replayed over their full
  /// clamped range, the same treatment the conflict analysis gives them.
  std::map<std::string, std::map<std::vector<i64>, i64>> symbol_tables;
};

namespace detail {

struct MemberEval {
  const AffineAccess* access = nullptr;
  std::vector<i64> var_to_merged;  // -1 for table-resolved symbols
  std::vector<i64> point;          // scratch, sized to the member's vars
};

}  // namespace detail

/// Replay one access group against a scheme: every merged variable assignment
/// is a potential cycle with all members active. Fails on a bank taking more
/// than `ports` accesses in one cycle, an offset at or above the bank
/// capacity, or the DAG disagreeing with direct evaluation.
inline ReplayResult replay_group(const AccessGroup& group,
                                 const std::vector<AffineAccess>& accesses,
                                 const HyperplaneGeometry& g, const ResolutionDag& dag,
                                 i64 bank_capacity, const ReplayOptions& opts,
                                 std::size_t group_index = 0, std::size_t duplicate = 0) {
  ReplayResult result;

  // Merge variables by name across members; shared names move in lockstep.
  std::vector<VarSpec> merged;
  std::map<std::string, std::size_t> index;
  std::vector<detail::MemberEval> members;
  for (std::size_t mi : group.members) {
    const AffineAccess& a = accesses[mi];
    if (!a.normalized) fail(errc::invalid_input, "access not normalized: " + a.id);
    detail::MemberEval ev;
    ev.access = &a;
    const LinearAddress& la = *a.normalized;
    ev.var_to_merged.assign(la.vars.size(), -1);
    ev.point.assign(la.vars.size(), 0);
    for (std::size_t v = 0; v < la.vars.size(); ++v) {
      const VarSpec& vs = la.vars[v];
      if (vs.is_symbol && opts.symbol_tables.count(vs.symbol_name)) continue;
      auto [it, fresh] = index.emplace(vs.name, merged.size());
      if (fresh)
        merged.push_back(vs);
      else if (merged[it->second].count != vs.count)
        fail(errc::invalid_input, "variable '" + vs.name + "' has inconsistent bounds");
      ev.var_to_merged[v] = static_cast<i64>(it->second);
    }
    members.push_back(std::move(ev));
  }

  std::vector<i64> radix;
  i64 volume = 1;
  for (const VarSpec& v : merged) {
    radix.push_back(v.count);
    volume = sat_mul(volume, v.count);
  }
  result.trace.total_cycles = volume;
  result.trace.exhaustive = volume <= opts.cycle_budget;

  i64 nbanks = g.total_banks();
  std::vector<i64> load(static_cast<std::size_t>(nbanks), 0);
  std::vector<std::vector<std::size_t>> on_bank(static_cast<std::size_t>(nbanks));

  auto run_cycle = [&](const std::vector<i64>& pt, i64 cycle_index) -> bool {
    std::fill(load.begin(), load.end(), 0);
    for (auto& v : on_bank) v.clear();
    ReplayTrace::Cycle rec;
    rec.index = cycle_index;
    bool record = static_cast<i64>(result.trace.cycles.size()) < opts.trace_limit;

    for (std::size_t m = 0; m < members.size(); ++m) {
      detail::MemberEval& ev = members[m];
      const LinearAddress& la = *ev.access->normalized;
      // Iterator variables first, then table-resolved symbols (their args are
      // forms over the iterator variables).
      for (std::size_t v = 0; v < la.vars.size(); ++v)
        if (ev.var_to_merged[v] >= 0) ev.point[v] = pt[static_cast<std::size_t>(ev.var_to_merged[v])];
      for (std::size_t v = 0; v < la.vars.size(); ++v) {
        if (ev.var_to_merged[v] >= 0) continue;
        const VarSpec& vs = la.vars[v];
        std::vector<i64> args;
        for (const LinearForm& f : vs.symbol_args) args.push_back(f.eval(ev.point));
        const auto& table = opts.symbol_tables.at(vs.symbol_name);
        auto tv = table.find(args);
        if (tv == table.end())
          fail(errc::invalid_input,
               "no concrete value for symbol " + vs.symbol_name + " at given arguments");
        ev.point[v] = tv->second;
      }

      std::vector<i64> x = la.eval(ev.point);
      auto direct_ba = bank_address(x, g);
      i64 direct_bo = bank_offset(x, g);
      auto dag_out = dag.eval(x);

      auto fill_report = [&](ConflictReport::Kind kind, const std::string& msg, i64 bank) {
        ConflictReport r;
        r.kind = kind;
        r.cycle = cycle_index;
        r.group = group_index;
        r.duplicate = duplicate;
        r.bank = bank;
        r.message = msg;
        r.accesses.push_back(ev.access->id + "[" + ev.access->uid_string() + "]");
        result.report = std::move(r);
        result.ok = false;
      };

      if (dag_out.banks != direct_ba || dag_out.offset != direct_bo) {
        fill_report(ConflictReport::Kind::DagMismatch,
                    "resolution DAG disagrees with direct evaluation",
                    bank_linear(direct_ba, g));
        return false;
      }
      if (direct_bo >= bank_capacity) {
        fill_report(ConflictReport::Kind::OffsetOverflow,
                    "offset " + std::to_string(direct_bo) + " >= capacity " +
                        std::to_string(bank_capacity),
                    bank_linear(direct_ba, g));
        return false;
      }
      i64 bank = bank_linear(direct_ba, g);
      on_bank[static_cast<std::size_t>(bank)].push_back(m);
      if (++load[static_cast<std::size_t>(bank)] > opts.ports) {
        ConflictReport r;
        r.kind = ConflictReport::Kind::PortOverflow;
        r.cycle = cycle_index;
        r.group = group_index;
        r.duplicate = duplicate;
        r.bank = bank;
        r.message = "bank receives " + std::to_string(load[static_cast<std::size_t>(bank)]) +
                    " accesses with " + std::to_string(opts.ports) + " port(s)";
        for (std::size_t o : on_bank[static_cast<std::size_t>(bank)])
          r.accesses.push_back(members[o].access->id + "[" + members[o].access->uid_string() +
                               "]");
        result.report = std::move(r);
        result.ok = false;
        return false;
      }
      if (record)
        rec.active.push_back({ev.access->id, ev.access->uid_string(), x, bank, direct_bo});
    }
    if (record) result.trace.cycles.push_back(std::move(rec));
    return true;
  };

  if (result.trace.exhaustive) {
    i64 cycle = 0;
    for_each_point(radix, [&](const std::vector<i64>& pt) { return run_cycle(pt, cycle++); });
  } else {
    // Stratified random phase sampling; flagged as non-exhaustive.
    u64 state = opts.seed * 6364136223846793005ULL + 1442695040888963407ULL;
    auto next = [&state]() {
      state ^= state << 13;
      state ^= state >> 7;
      state ^= state << 17;
      return state;
    };
    std::vector<i64> pt(radix.size());
    for (i64 s = 0; s < opts.cycle_budget; ++s) {
      for (std::size_t d = 0; d < radix.size(); ++d)
        pt[d] = static_cast<i64>(next() % static_cast<u64>(radix[d]));
      if (!run_cycle(pt, s)) break;
    }
  }
  return result;
}

/// Replay every group (optionally one reader split per duplicate) against the
/// scheme. Groups live on different buffers, so they are replayed in
/// isolation.
inline ReplayResult replay(const std::vector<std::vector<AccessGroup>>& duplicate_groups,
                           const std::vector<AffineAccess>& accesses,
                           const HyperplaneGeometry& g, const ResolutionDag& dag,
                           i64 bank_capacity, const ReplayOptions& opts) {
  ReplayResult all;
  for (std::size_t dup = 0; dup < duplicate_groups.size(); ++dup) {
    for (std::size_t gi = 0; gi < duplicate_groups[dup].size(); ++gi) {
      ReplayResult r = replay_group(duplicate_groups[dup][gi], accesses, g, dag, bank_capacity,
                                    opts, gi, dup);
      all.trace.total_cycles += r.trace.total_cycles;
      all.trace.exhaustive = all.trace.exhaustive && r.trace.exhaustive;
      for (auto& c : r.trace.cycles)
        if (static_cast<i64>(all.trace.cycles.size()) < opts.trace_limit)
          all.trace.cycles.push_back(std::move(c));
      if (!r.ok) {
        all.ok = false;
        all.report = std::move(r.report);
        return all;
      }
    }
  }
  return all;
}

}  // namespace bankforge
