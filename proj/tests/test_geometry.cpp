#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "bankforge/geometry.hpp"
#include "bankforge/search.hpp"
#include "fixtures.hpp"

using namespace bankforge;
using fixtures::flat_geom;
using fixtures::multi_geom;

TEST(BankAddress, UnitStrideModuloFour) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16});
  EXPECT_EQ(bank_address({5}, g)[0], 1);
}

TEST(BankAddress, BlockedStrideThree) {
  // N=4, B=2, alpha=3: direct evaluation gives 0,1,3,0,2,3,1,2 over x=0..7.
  HyperplaneGeometry g = flat_geom(4, 2, {3}, {16});
  std::vector<i64> expected = {0, 1, 3, 0, 2, 3, 1, 2};
  for (i64 x = 0; x < 8; ++x) EXPECT_EQ(bank_address({x}, g)[0], expected[x]) << "x=" << x;
}

TEST(BankAddress, DivideByThreeOption) {
  // N=4, B=3, alpha=2 maps the four live addresses to four distinct banks.
  HyperplaneGeometry g = flat_geom(4, 3, {2}, {36});
  std::set<i64> banks;
  for (i64 x : {1, 2, 4, 5}) banks.insert(bank_address({x}, g)[0]);
  EXPECT_EQ(banks, (std::set<i64>{0, 1, 2, 3}));
}

TEST(BankAddress, OutOfBoundsRejected) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16}, {4});
  EXPECT_THROW(bank_address({16}, g), error);
  EXPECT_THROW(bank_address({-1}, g), error);
}

TEST(BankOffset, ZeroAtOrigin) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16}, {4});
  EXPECT_EQ(bank_offset({0}, g), 0);
}

TEST(BankOffset, RegionIndexing) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16}, {4});
  EXPECT_EQ(bank_offset({5}, g), 1);  // floor(5/4)
}

TEST(BankOffset, BlockedCorrectionLabelsInstances) {
  // N=4, B=2, alpha=3, P=8, D=16: within each region every bank has two
  // cells and the correction labels them 0 and 1 uniquely.
  HyperplaneGeometry g = flat_geom(4, 2, {3}, {16}, {8});
  for (i64 base : {0, 8}) {
    std::map<i64, std::set<i64>> offsets_by_bank;
    for (i64 u = 0; u < 8; ++u) {
      i64 x = base + u;
      i64 ba = bank_address({x}, g)[0];
      i64 corr = bank_offset({x}, g) - 2 * (base / 8);
      offsets_by_bank[ba].insert(corr);
    }
    for (const auto& [bank, offs] : offsets_by_bank)
      EXPECT_EQ(offs, (std::set<i64>{0, 1})) << "bank " << bank << " base " << base;
  }
}

TEST(Periodicity, WorkedExample) {
  EXPECT_EQ(periodicity(flat_geom(4, 2, {3}, {16}))[0], 8);  // lcm(3,8)/3
}

TEST(Periodicity, UnitAlpha) {
  EXPECT_EQ(periodicity(flat_geom(4, 1, {1}, {16}))[0], 4);
}

TEST(Periodicity, SharedFactor) {
  EXPECT_EQ(periodicity(flat_geom(4, 2, {6}, {32}))[0], 4);  // lcm(6,8)/6
}

TEST(Periodicity, ZeroCoefficientConvention) {
  EXPECT_EQ(periodicity(flat_geom(4, 1, {0, 1}, {8, 8}))[0], 1);
}

TEST(Periodicity, PropertyOnRandomGeometries) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 25; ++trial) {
    HyperplaneGeometry g = fixtures::random_valid_geometry(rng);
    std::vector<i64> phi = periodicity(g);
    std::vector<i64> padded = g.padded_dims();
    for_each_point(padded, [&](const std::vector<i64>& x) {
      for (std::size_t d = 0; d < padded.size(); ++d) {
        std::vector<i64> shifted = x;
        shifted[d] += phi[d];
        if (shifted[d] >= padded[d]) continue;
        EXPECT_EQ(bank_address(x, g), bank_address(shifted, g)) << g.signature();
      }
      return true;
    });
  }
}

TEST(SelectParallelotope, BlockedCase) {
  HyperplaneGeometry g = flat_geom(4, 2, {3}, {16});
  EXPECT_EQ(select_parallelotope(g), (std::vector<i64>{8}));  // P = Phi
}

TEST(SelectParallelotope, UnitCase) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16});
  EXPECT_EQ(select_parallelotope(g), (std::vector<i64>{4}));
}

TEST(SelectParallelotope, TwoDimensionalMultidim) {
  HyperplaneGeometry g = multi_geom({2, 2}, {1, 1}, {1, 1}, {4, 4});
  EXPECT_EQ(select_parallelotope(g), (std::vector<i64>{2, 2}));
}

TEST(SelectParallelotope, ImpossibleCoverage) {
  // alpha=4, N=6, B=1: the map only reaches banks {0,2,4}.
  HyperplaneGeometry g = flat_geom(6, 1, {4}, {24});
  EXPECT_THROW(select_parallelotope(g), error);
}

TEST(Geometry, GcdNormalizationKeepsMapPointwise) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    i64 n = 1 + static_cast<i64>(rng() % 8);
    i64 b = 1 + static_cast<i64>(rng() % 4);
    i64 a = 1 + static_cast<i64>(rng() % 8);
    i64 k = 1 + static_cast<i64>(rng() % 3);
    HyperplaneGeometry raw = flat_geom(n, b * k, {a * k}, {24});
    HyperplaneGeometry norm = normalize(raw);
    if (norm.banks[0] == 1) continue;  // canonicalized degenerate form
    for (i64 x = 0; x < 24; ++x)
      EXPECT_EQ(bank_address({x}, raw), bank_address({x}, norm))
          << raw.signature() << " vs " << norm.signature();
  }
}

TEST(Geometry, CoverageWithinEveryRegion) {
  std::mt19937_64 rng(4321);
  for (int trial = 0; trial < 25; ++trial) {
    HyperplaneGeometry g = fixtures::random_valid_geometry(rng);
    std::vector<i64> padded = g.padded_dims();
    if (g.flat()) {
      std::vector<i64> region_counts(g.n_dims());
      for (std::size_t d = 0; d < g.n_dims(); ++d) region_counts[d] = padded[d] / g.region[d];
      for_each_point(region_counts, [&](const std::vector<i64>& r) {
        std::map<i64, i64> counts;
        for_each_point(g.region, [&](const std::vector<i64>& u) {
          std::vector<i64> x(g.n_dims());
          for (std::size_t d = 0; d < g.n_dims(); ++d) x[d] = r[d] * g.region[d] + u[d];
          ++counts[bank_address(x, g)[0]];
          return true;
        });
        EXPECT_EQ(static_cast<i64>(counts.size()), g.banks[0]) << g.signature();
        for (const auto& [bank, c] : counts) EXPECT_LE(c, g.blocking[0]) << g.signature();
        return true;
      });
    } else {
      for (std::size_t d = 0; d < g.n_dims(); ++d) {
        for (i64 base = 0; base < padded[d]; base += g.region[d]) {
          std::map<i64, i64> counts;
          for (i64 u = 0; u < g.region[d]; ++u) {
            i64 v = (base + u) * g.alpha[d];
            ++counts[floor_mod(floor_div(v, g.blocking[d]), g.banks[d])];
          }
          EXPECT_EQ(static_cast<i64>(counts.size()), g.banks[d]) << g.signature();
          for (const auto& [bank, c] : counts) EXPECT_LE(c, g.blocking[d]) << g.signature();
        }
      }
    }
  }
}

TEST(Geometry, OffsetInjectivity) {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 25; ++trial) {
    HyperplaneGeometry g = fixtures::random_valid_geometry(rng);
    std::set<std::pair<i64, i64>> seen;
    i64 bound = bank_capacity_bound(g);
    for_each_point(g.padded_dims(), [&](const std::vector<i64>& x) {
      i64 ba = bank_linear(bank_address(x, g), g);
      i64 bo = bank_offset(x, g);
      EXPECT_LT(bo, bound) << g.signature();
      EXPECT_TRUE(seen.insert({ba, bo}).second) << g.signature();
      return true;
    });
  }
}

TEST(Metrics, ToyProblemFanOut) {
  Problem p = fixtures::fig5_problem();
  PreparedProblem prep = prepare(p);
  ASSERT_EQ(prep.groups.size(), 1u);
  ASSERT_EQ(prep.groups[0].members.size(), 4u);

  // Six banks, unit stride: every access stays on one bank.
  HyperplaneGeometry opt3 = flat_geom(6, 1, {1}, {36});
  opt3.region = select_parallelotope(opt3);
  SchemeMetrics m3 = metrics(prep.groups, prep.unrolled.accesses, opt3);
  for (i64 fo : m3.fan_out) EXPECT_EQ(fo, 1);

  // Five banks: every access sweeps all of them.
  HyperplaneGeometry opt1 = flat_geom(5, 1, {1}, {36});
  opt1.region = select_parallelotope(opt1);
  SchemeMetrics m1 = metrics(prep.groups, prep.unrolled.accesses, opt1);
  for (i64 fo : m1.fan_out) EXPECT_EQ(fo, 5);

  for (const SchemeMetrics* m : {&m3, &m1}) {
    i64 fo_sum = 0, fi_sum = 0;
    for (i64 v : m->fan_out) fo_sum += v;
    for (i64 v : m->fan_in) fi_sum += v;
    EXPECT_EQ(fo_sum, fi_sum);
  }
}

TEST(Metrics, PaddingExample) {
  HyperplaneGeometry g = flat_geom(4, 1, {1}, {16}, {5});
  EXPECT_EQ(g.padding(), (std::vector<i64>{4}));  // ceil(16/5)*5 - 16
}

TEST(Validate, ToyProblemSchemes) {
  Problem p = fixtures::fig5_problem();
  PreparedProblem prep = prepare(p);

  HyperplaneGeometry six = flat_geom(6, 1, {1}, {36});
  EXPECT_TRUE(validate(prep.groups, prep.unrolled.accesses, six, 1));

  // Two banks: 6t+1 and 6t+5 are both odd, so they collide on bank 1.
  HyperplaneGeometry two = flat_geom(2, 1, {1}, {36});
  EXPECT_FALSE(validate(prep.groups, prep.unrolled.accesses, two, 1));
}

TEST(Validate, SingletonGroupAlwaysValid) {
  Problem p = fixtures::single_access_problem();
  PreparedProblem prep = prepare(p);
  HyperplaneGeometry g = flat_geom(3, 2, {5}, {16});
  EXPECT_TRUE(validate(prep.groups, prep.unrolled.accesses, g, 1));
}
