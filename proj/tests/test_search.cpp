#include <gtest/gtest.h>

#include <set>

#include "bankforge/io.hpp"
#include "bankforge/search.hpp"
#include "fixtures.hpp"

using namespace bankforge;

namespace {

/// Small models keep the unit suite fast; the acceptance suite exercises the
/// full-size pipeline.
const CostModels& fast_models() {
  static CostModels models = [] {
    Dataset data = generate_dataset(200, 5);
    std::vector<std::vector<double>> expanded;
    for (const auto& r : data.rows) expanded.push_back(poly_expand(r));
    GbtParams p;
    p.n_estimators = 25;
    CostModels m;
    m.lut = select_and_retrain(train(expanded, data.lut, p, "lut"), expanded, data.lut, 36);
    m.ff = select_and_retrain(train(expanded, data.ff, p, "ff"), expanded, data.ff, 36);
    m.bram = select_and_retrain(train(expanded, data.bram, p, "bram"), expanded, data.bram, 36);
    return m;
  }();
  return models;
}

std::vector<HyperplaneGeometry> drain(FlatCandidateStream& s, int count) {
  std::vector<HyperplaneGeometry> out;
  while (count-- > 0) {
    auto g = s.next();
    if (!g) break;
    out.push_back(*g);
  }
  return out;
}

}  // namespace

TEST(Candidates, LcmMultiplesComeFirst) {
  CandidateBudget budget;
  FlatCandidateStream stream({36}, 4, budget);
  auto cands = drain(stream, 5000);
  auto first_n = [&](i64 n) {
    for (std::size_t i = 0; i < cands.size(); ++i)
      if (cands[i].banks[0] == n) return static_cast<std::ptrdiff_t>(i);
    return static_cast<std::ptrdiff_t>(-1);
  };
  ASSERT_GE(first_n(4), 0);
  ASSERT_GE(first_n(5), 0);
  ASSERT_GE(first_n(6), 0);
  ASSERT_GE(first_n(7), 0);
  EXPECT_LT(first_n(4), first_n(5));
  EXPECT_LT(first_n(6), first_n(7));
}

TEST(Candidates, SingleAccessGroupStartsTrivial) {
  CandidateBudget budget;
  FlatCandidateStream stream({16}, 1, budget);
  auto g = stream.next();
  ASSERT_TRUE(g);
  EXPECT_EQ(g->banks[0], 1);
  EXPECT_EQ(g->blocking[0], 1);
  EXPECT_EQ(g->alpha, (std::vector<i64>{1}));
}

TEST(Candidates, LcmOfTwoGroups) {
  CandidateBudget budget;
  FlatCandidateStream stream({36}, lcm64(2, 3), budget);
  auto g = stream.next();
  ASSERT_TRUE(g);
  EXPECT_EQ(g->banks[0], 6);  // first tier-1 bank count
}

TEST(Candidates, NoGcdEquivalentDuplicates) {
  CandidateBudget budget;
  FlatCandidateStream stream({24}, 2, budget);
  auto cands = drain(stream, 3000);
  std::set<std::string> sigs;
  for (const auto& g : cands) {
    HyperplaneGeometry n = normalize(g);
    EXPECT_TRUE(sigs.insert(n.signature()).second) << n.signature();
  }
}

TEST(Project, RedundantProjectionsCollapse) {
  // Two accesses identical in dim 0, differing in dim 1.
  std::vector<VarSpec> vars;
  VarSpec t;
  t.name = "t";
  t.count = 4;
  vars.push_back(t);
  AffineAccess a = fixtures::raw_access("a", {0}, vars, {{1}, {1}}, {0, 0});
  AffineAccess b = fixtures::raw_access("b", {1}, vars, {{1}, {1}}, {0, 1});
  AccessGroup grp;
  grp.memory_id = "mem";
  grp.members = {0, 1};
  Projection p0 = project({grp}, {a, b}, 0);
  EXPECT_EQ(p0.accesses.size(), 1u);
  EXPECT_EQ(p0.groups[0].members.size(), 1u);
  Projection p1 = project({grp}, {a, b}, 1);
  EXPECT_EQ(p1.accesses.size(), 2u);
}

TEST(Project, GridOfLanesProjectsToRowAndColumnGroups) {
  // 4x3 lane grid: 12 concurrent accesses, 4 unique row projections and 3
  // unique column projections; far fewer pairwise checks than the flat 66.
  std::vector<AffineAccess> accesses;
  AccessGroup grp;
  grp.memory_id = "mem";
  VarSpec r, c;
  r.name = "r";
  r.count = 2;
  c.name = "c";
  c.count = 2;
  for (i64 lr = 0; lr < 4; ++lr)
    for (i64 lc = 0; lc < 3; ++lc) {
      AffineAccess a = fixtures::raw_access("a" + std::to_string(lr) + std::to_string(lc),
                                            {lr, lc}, {r, c}, {{4, 0}, {0, 3}}, {lr, lc});
      grp.members.push_back(accesses.size());
      accesses.push_back(std::move(a));
    }
  Projection p0 = project({grp}, accesses, 0);
  Projection p1 = project({grp}, accesses, 1);
  EXPECT_EQ(p0.groups[0].members.size(), 4u);
  EXPECT_EQ(p1.groups[0].members.size(), 3u);
  auto pair_checks = [](std::size_t n) { return n * (n - 1) / 2; };
  EXPECT_LE(pair_checks(4) + pair_checks(3), pair_checks(12));
}

TEST(Project, WriterLanesProjectToLaneOffsets) {
  // The MD tile-load lanes are identical in dims 0..2 and differ only by
  // their lane constant in the vectorized dimension.
  PreparedProblem prep = prepare(fixtures::md_grid_problem());
  Projection p3 = project({prep.groups[0]}, prep.unrolled.accesses, 3);
  ASSERT_EQ(p3.accesses.size(), 4u);
  std::set<i64> consts;
  for (const AffineAccess& a : p3.accesses) consts.insert(a.normalized->dims[0].constant);
  EXPECT_EQ(consts, (std::set<i64>{0, 1, 2, 3}));
  Projection p0 = project({prep.groups[0]}, prep.unrolled.accesses, 0);
  EXPECT_EQ(p0.accesses.size(), 1u);  // redundancy: one representative
}

TEST(Solve, ToyProblemFindsAllThreeBankCounts) {
  Problem p = fixtures::fig5_problem();
  SolveResult r = solve(p, &fast_models());
  std::set<i64> ns;
  bool n6_fo1 = false, n5_fo5 = false;
  for (const Solution& s : r.solutions) {
    if (!s.geometry.flat()) continue;
    ns.insert(s.geometry.banks[0]);
    bool fo1 = true, fo5 = true;
    for (i64 fo : s.scheme_metrics.fan_out) {
      fo1 = fo1 && fo == 1;
      fo5 = fo5 && fo == 5;
    }
    if (s.geometry.banks[0] == 6 && fo1) n6_fo1 = true;
    if (s.geometry.banks[0] == 5 && fo5) n5_fo5 = true;
  }
  EXPECT_TRUE(ns.count(4));
  EXPECT_TRUE(ns.count(5));
  EXPECT_TRUE(ns.count(6));
  EXPECT_TRUE(n6_fo1);
  EXPECT_TRUE(n5_fo5);
  for (const Solution& s : r.solutions) EXPECT_TRUE(s.replay_verified);
}

TEST(Solve, SingleAccessRanksTrivialSchemeFirst) {
  Problem p = fixtures::single_access_problem();
  SolveResult r = solve(p, &fast_models());
  ASSERT_FALSE(r.solutions.empty());
  EXPECT_EQ(r.solutions.front().geometry.total_banks(), 1);
}

TEST(Solve, Deterministic) {
  Problem p = fixtures::fig5_problem();
  SolveResult a = solve(p, &fast_models());
  SolveResult b = solve(p, &fast_models());
  a.stats.elapsed_ms = b.stats.elapsed_ms = 0;  // wall clock is reporting only
  ASSERT_EQ(a.solutions.size(), b.solutions.size());
  EXPECT_EQ(scheme_to_json(a, p).dump(), scheme_to_json(b, p).dump());
}

TEST(Solve, MdGridFindsVerifiedScheme) {
  Problem p = fixtures::md_grid_problem();
  p.budget.max_candidates = 4000;  // the multidim planner carries this case
  SolveResult r = solve(p, &fast_models());
  ASSERT_FALSE(r.solutions.empty());
  bool verified = false;
  for (const Solution& s : r.solutions)
    if (s.replay_verified && s.replay_exhaustive) verified = true;
  EXPECT_TRUE(verified);
}

TEST(Solve, NoSolutionSignalled) {
  // Two concurrent writers with the same address pattern conflict under any
  // geometry, and duplication only splits readers.
  Problem p = fixtures::fig5_problem();
  p.program.accesses[1] = p.program.accesses[0];
  p.program.accesses[1].id = "w2";
  p.program.accesses[0].kind = AccessKind::Write;
  p.program.accesses[1].kind = AccessKind::Write;
  p.budget.max_candidates = 300;
  try {
    solve(p, &fast_models());
    FAIL() << "expected no_solution";
  } catch (const error& e) {
    EXPECT_EQ(e.kind(), errc::no_solution);
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Solve, DualPortedMemoryAcceptsPairwiseConflicts) {
  // With two ports a bank may serve two simultaneous accesses: the two-bank
  // scheme (odd/even pairs collide pairwise, never three at once) becomes
  // valid and is emitted with ports = 2.
  Problem p = fixtures::fig5_problem();
  p.ports = 2;
  SolveResult r = solve(p, &fast_models());
  bool two_banks_two_ports = false;
  for (const Solution& s : r.solutions) {
    EXPECT_LE(s.ports, 2);
    EXPECT_TRUE(s.replay_verified);
    if (s.geometry.flat() && s.geometry.banks[0] == 2 && s.geometry.blocking[0] == 1 &&
        s.geometry.alpha == std::vector<i64>{1} && s.duplication == 1 && s.ports == 2)
      two_banks_two_ports = true;
  }
  EXPECT_TRUE(two_banks_two_ports);
}

TEST(Solve, DuplicationSplitsConflictingReaders) {
  // Two concurrent readers of the same address: invalid undivided, valid
  // with two duplicates.
  Problem p = fixtures::fig5_problem();
  p.program.accesses[1] = p.program.accesses[0];
  p.program.accesses[1].id = "r_dup";
  p.budget.max_candidates = 400;
  SolveResult r = solve(p, &fast_models());
  ASSERT_FALSE(r.solutions.empty());
  for (const Solution& s : r.solutions) EXPECT_GE(s.duplication, 2);
}
