#include <gtest/gtest.h>

#include <functional>

#include "bankforge/rewrite.hpp"
#include "fixtures.hpp"

using namespace bankforge;
using fixtures::flat_geom;
using fixtures::multi_geom;

namespace {

ResolutionDag single_op_dag(char op, i64 c, int width, int radius = 2) {
  DagBuilder b;
  i64 x = b.input("x", 0, (i64{1} << width) - 1);
  i64 out = op == '%' ? b.mod_const(x, c)
                      : (op == '/' ? b.div_const(x, c) : b.mul_const(x, c, radius));
  b.dag.bank_outputs.push_back(out);
  return std::move(b.dag);
}

i64 eval1(const ResolutionDag& dag, i64 x) { return dag.eval({x}).banks[0]; }

}  // namespace

TEST(CrandallMod, Examples) {
  ResolutionDag m7 = single_op_dag('%', 7, 16);
  EXPECT_EQ(eval1(m7, 100), 2);
  EXPECT_EQ(eval1(m7, 0), 0);
  ResolutionDag m15 = single_op_dag('%', 15, 16);
  EXPECT_EQ(eval1(m15, 65535), 0);
}

TEST(CrandallMod, NoMulDivModNodes) {
  ResolutionDag m7 = single_op_dag('%', 7, 16);
  DagCensus c = census(m7);
  EXPECT_EQ(c.mul, 0);
  EXPECT_EQ(c.div, 0);
  EXPECT_EQ(c.mod, 0);
  EXPECT_GE(c.mux, 1);
}

TEST(CrandallMod, RejectsNonMersenne) {
  DagBuilder b;
  i64 x = b.input("x", 0, 65535);
  EXPECT_THROW(b.crandall_mod(x, 6), error);
  EXPECT_THROW(b.crandall_mod(x, 4), error);
}

TEST(CrandallDiv, Examples) {
  ResolutionDag d7 = single_op_dag('/', 7, 16);
  EXPECT_EQ(eval1(d7, 100), 14);
  EXPECT_EQ(eval1(d7, 6), 0);
  ResolutionDag d31 = single_op_dag('/', 31, 16);
  EXPECT_EQ(eval1(d31, 1000), 32);
}

TEST(Crandall, ExhaustiveSmallMersennes) {
  for (i64 m : {3, 7, 15, 31}) {
    ResolutionDag mod_dag = single_op_dag('%', m, 12);
    ResolutionDag div_dag = single_op_dag('/', m, 12);
    for (i64 x = 0; x < (1 << 12); ++x) {
      ASSERT_EQ(eval1(mod_dag, x), x % m) << "m=" << m << " x=" << x;
      ASSERT_EQ(eval1(div_dag, x), x / m) << "m=" << m << " x=" << x;
    }
  }
}

TEST(CompositeMod, Examples) {
  ResolutionDag m5 = single_op_dag('%', 5, 16);  // 5*3 = 15
  EXPECT_EQ(eval1(m5, 17), 2);
  EXPECT_EQ(eval1(m5, 0), 0);
  ResolutionDag m21 = single_op_dag('%', 21, 16);  // 21*3 = 63
  EXPECT_EQ(eval1(m21, 100), 16);
  DagCensus c = census(m21);
  EXPECT_EQ(c.mod, 0);
  EXPECT_EQ(c.div, 0);
  EXPECT_EQ(c.mul, 0);
}

TEST(CompositeMod, NoMersenneMultiple) {
  DagBuilder b;
  i64 x = b.input("x", 0, 65535);
  EXPECT_THROW(b.composite_mod(x, 6), error);  // even numbers divide no Mersenne
}

TEST(ShiftAddPlan, Examples) {
  auto p1 = shift_add_plan(1, 2);
  ASSERT_TRUE(p1);
  ASSERT_EQ(p1->terms.size(), 1u);
  EXPECT_EQ(p1->terms[0].sign, 1);
  EXPECT_EQ(p1->terms[0].exponent, 0);

  auto p6 = shift_add_plan(6, 2);
  ASSERT_TRUE(p6);
  ASSERT_EQ(p6->terms.size(), 2u);
  EXPECT_EQ(p6->terms[0].exponent, 2);  // (a<<2) + (a<<1)
  EXPECT_EQ(p6->terms[1].sign, 1);
  EXPECT_EQ(p6->terms[1].exponent, 1);

  auto p7 = shift_add_plan(7, 2);
  ASSERT_TRUE(p7);
  EXPECT_EQ(p7->terms[0].exponent, 3);  // (a<<3) - a
  EXPECT_EQ(p7->terms[1].sign, -1);

  EXPECT_FALSE(shift_add_plan(11, 2));  // needs three terms
  EXPECT_TRUE(shift_add_plan(11, 3));
}

TEST(ShiftAddMul, EvaluatesExactly) {
  ResolutionDag by6 = single_op_dag('*', 6, 16);
  EXPECT_EQ(eval1(by6, 7), 42);
  ResolutionDag by7 = single_op_dag('*', 7, 16);
  EXPECT_EQ(eval1(by7, 9), 63);
  for (const ResolutionDag* d : {&by6, &by7}) {
    DagCensus c = census(*d);
    EXPECT_EQ(c.mul, 0);
  }
  // Not representable with radius 2: the multiplier survives.
  ResolutionDag by11 = single_op_dag('*', 11, 16);
  EXPECT_EQ(census(by11).mul, 1);
  EXPECT_EQ(eval1(by11, 13), 143);
}

TEST(BuildResolution, PowerOfTwoIsPureMask) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16}, {4});
  ResolutionDag dag = build_resolution(g);
  DagCensus c = census(dag);
  EXPECT_EQ(c.mod, 0);
  EXPECT_EQ(c.div, 0);
  EXPECT_EQ(c.mul, 0);
  EXPECT_TRUE(verify_resolution(dag, g));
}

TEST(BuildResolution, MersenneBankCountAvoidsModNode) {
  HyperplaneGeometry g = flat_geom(7, 1, {1}, {28});
  g.region = select_parallelotope(g);
  ResolutionDag dag = build_resolution(g);
  DagCensus c = census(dag);
  EXPECT_EQ(c.mod, 0);
  EXPECT_EQ(c.mul, 0);
  EXPECT_EQ(c.div, 0);
  EXPECT_TRUE(verify_resolution(dag, g));
}

namespace {

// Census restricted to the nodes reachable from the bank outputs.
DagCensus bank_census(const ResolutionDag& dag) {
  std::vector<char> keep(dag.nodes.size(), 0);
  std::function<void(i64)> mark = [&](i64 id) {
    if (keep[static_cast<std::size_t>(id)]) return;
    keep[static_cast<std::size_t>(id)] = 1;
    for (i64 o : dag.nodes[static_cast<std::size_t>(id)].operands) mark(o);
  };
  for (i64 b : dag.bank_outputs) mark(b);
  ResolutionDag sub;
  for (std::size_t i = 0; i < dag.nodes.size(); ++i)
    if (keep[i]) sub.nodes.push_back(dag.nodes[i]);
  return census(sub);
}

}  // namespace

TEST(BuildResolution, SixBanksKeepsModButNoMulDiv) {
  HyperplaneGeometry g = flat_geom(6, 1, {1}, {36});
  g.region = select_parallelotope(g);
  ResolutionDag dag = build_resolution(g);
  DagCensus c = bank_census(dag);
  EXPECT_EQ(c.mod, 1);  // mod 6 has no Mersenne route
  EXPECT_EQ(c.mul, 0);
  EXPECT_EQ(c.div, 0);
  EXPECT_TRUE(verify_resolution(dag, g));
}

TEST(BuildResolution, EquivalentAcrossGeometryStyles) {
  std::vector<HyperplaneGeometry> geoms;
  geoms.push_back(flat_geom(4, 2, {3}, {16}, {8}));
  geoms.push_back(flat_geom(5, 1, {1}, {36}));
  geoms.push_back(flat_geom(4, 3, {2}, {36}));
  geoms.push_back(flat_geom(4, 3, {2, 1}, {12, 6}));
  geoms.push_back(multi_geom({2, 4}, {1, 2}, {1, 3}, {8, 16}));
  geoms.push_back(multi_geom({3, 2}, {2, 1}, {2, 1}, {9, 6}));
  for (HyperplaneGeometry& g : geoms) {
    if (g.region.empty()) g.region = select_parallelotope(g);
    ResolutionDag dag = build_resolution(g);
    EXPECT_TRUE(verify_resolution(dag, g)) << g.signature();
  }
}

TEST(Dag, MuxSelectorRangeChecked) {
  DagBuilder b;
  i64 x = b.input("x", 0, 7);
  i64 sel = b.add(x, b.constant(0));
  b.dag.bank_outputs.push_back(b.mux(sel, {b.constant(1), b.constant(2)}));
  EXPECT_EQ(b.dag.eval({0}).banks[0], 1);
  EXPECT_EQ(b.dag.eval({1}).banks[0], 2);
  EXPECT_THROW(b.dag.eval({5}), error);
}

TEST(ConstantPool, CensusInOneToSixtyFive) {
  int mersenne = 0, divisors = 0, pow2 = 0, shift_add = 0;
  for (i64 c = 1; c <= 65; ++c) {
    if (is_mersenne(c)) ++mersenne;
    else if (c > 1 && is_power_of_two(c)) ++pow2;
    else if (c > 1 && mersenne_multiple(c, 16)) ++divisors;
    if (shift_add_plan(c, 2)) ++shift_add;
  }
  EXPECT_EQ(mersenne, 5);   // 3, 7, 15, 31, 63
  EXPECT_EQ(divisors, 5);   // 5, 9, 17, 21, 51
  EXPECT_EQ(pow2, 6);       // 2, 4, 8, 16, 32, 64
  EXPECT_EQ(shift_add, 33);
}
