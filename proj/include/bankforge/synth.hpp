#pragma once

#include <random>

#include "bankforge/costmodel.hpp"
#include "bankforge/geometry.hpp"
#include "bankforge/rewrite.hpp"

namespace bankforge {

/// Raw feature vector assembled from scheme parameters, schema order.
inline std::vector<double> assemble_features(const HyperplaneGeometry& g, const DagCensus& c,
                                             i64 capacity, i64 element_bits, i64 duplication,
                                             i64 readers, i64 writers, i64 max_fo, i64 max_fi,
                                             i64 groups, i64 depth) {
  std::vector<double> f(kRawFeatureCount, 0.0);
  for (std::size_t d = 0; d < 4; ++d) {
    f[0 + d] = d < g.banks.size() ? static_cast<double>(g.banks[d]) : 1.0;
    f[4 + d] = d < g.blocking.size() ? static_cast<double>(g.blocking[d]) : 1.0;
    f[8 + d] = d < g.alpha.size() ? static_cast<double>(g.alpha[d]) : 0.0;
    f[12 + d] = d < g.region.size() ? static_cast<double>(g.region[d]) : 1.0;
  }
  std::vector<i64> pad = g.padding();
  for (std::size_t d = 0; d < 4; ++d) f[16 + d] = d < pad.size() ? static_cast<double>(pad[d]) : 0.0;
  f[20] = static_cast<double>(g.total_banks());
  f[21] = static_cast<double>(capacity);
  f[22] = static_cast<double>(g.ports);
  f[23] = static_cast<double>(element_bits);
  f[24] = static_cast<double>(duplication);
  f[25] = static_cast<double>(c.add);
  f[26] = static_cast<double>(c.sub);
  f[27] = static_cast<double>(c.shift);
  f[28] = static_cast<double>(c.mux);
  f[29] = static_cast<double>(c.mul);
  f[30] = static_cast<double>(c.div);
  f[31] = static_cast<double>(c.mod);
  f[32] = static_cast<double>(readers);
  f[33] = static_cast<double>(writers);
  f[34] = static_cast<double>(max_fo);
  f[35] = static_cast<double>(max_fi);
  f[36] = static_cast<double>(groups);
  f[37] = static_cast<double>(depth);
  return f;
}

/// Seeded synthetic stand-in for a place-and-route dataset: real geometries
/// (so parameters, padding, capacities and DAG censuses are mutually
/// consistent) with resource targets from analytic crossbar/arithmetic
/// formulas plus relative noise.
inline Dataset generate_dataset(std::size_t rows, u64 seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<i64>& v) {
    return v[static_cast<std::size_t>(rng() % v.size())];
  };
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset data;
  while (data.rows.size() < rows) {
    std::size_t n = 1 + static_cast<std::size_t>(rng() % 3);
    HyperplaneGeometry g;
    g.dims.resize(n);
    g.alpha.resize(n);
    for (std::size_t d = 0; d < n; ++d)
      g.dims[d] = pick(n == 1 ? std::vector<i64>{16, 32, 64, 128}
                              : (n == 2 ? std::vector<i64>{8, 12, 16, 32}
                                        : std::vector<i64>{4, 8, 16}));
    bool multi = n > 1 && (rng() % 5 < 2);
    if (multi) {
      g.style = GeometryStyle::Multidimensional;
      g.banks.resize(n);
      g.blocking.resize(n);
      for (std::size_t d = 0; d < n; ++d) {
        g.banks[d] = pick({1, 2, 2, 3, 4});
        g.blocking[d] = pick({1, 1, 1, 2});
        g.alpha[d] = pick({1, 1, 2, 3});
      }
    } else {
      g.style = GeometryStyle::Flat;
      g.banks = {pick({1, 2, 3, 4, 5, 6, 7, 8, 12, 16})};
      g.blocking = {pick({1, 1, 1, 2, 3, 4})};
      for (std::size_t d = 0; d < n; ++d) g.alpha[d] = pick({0, 1, 1, 2, 3, 4, 5, 6, 7, 8});
      bool all_zero = true;
      for (i64 a : g.alpha)
        if (a) all_zero = false;
      if (all_zero) g.alpha[0] = 1;
    }
    g.ports = pick({1, 1, 1, 2});
    g = normalize(g);
    try {
      g.region = select_parallelotope(g);
    } catch (const error&) {
      continue;  // not every sampled tuple covers all banks
    }

    ResolutionDag dag = build_resolution(g);
    DagCensus c = census(dag);
    i64 capacity = bank_capacity_bound(g);
    i64 element_bits = pick({8, 16, 32, 32});
    i64 duplication = pick({1, 1, 1, 1, 2, 4});
    i64 readers = 1 + static_cast<i64>(rng() % 16);
    i64 writers = 1 + static_cast<i64>(rng() % 8);
    i64 n_total = g.total_banks();
    i64 max_fo = 1 + static_cast<i64>(rng() % static_cast<u64>(std::min<i64>(n_total, 8)));
    i64 max_fi = 1 + static_cast<i64>(rng() % static_cast<u64>(readers + writers));
    i64 groups = 1 + static_cast<i64>(rng() % 3);
    i64 depth = 1 + static_cast<i64>(rng() % 5);

    std::vector<double> f = assemble_features(g, c, capacity, element_bits, duplication, readers,
                                              writers, max_fo, max_fi, groups, depth);

    double dn = static_cast<double>(n_total);
    double lut = 14.0 * c.add + 11.0 * c.sub + 4.0 * c.shift + 22.0 * c.mux + 95.0 * c.mul +
                 160.0 * c.div + 150.0 * c.mod + 2.0 * max_fo * dn +
                 1.6 * max_fi * (readers + writers) + 6.0 * g.ports * dn +
                 0.3 * element_bits * max_fo + 35.0 * groups + 12.0 * depth;
    double ff = 9.0 * (c.add + c.sub) + 2.0 * c.shift + 7.0 * c.mux + 30.0 * c.mul +
                55.0 * (c.div + c.mod) + 0.6 * element_bits * max_fi +
                0.4 * element_bits * g.ports + 1.2 * dn + 18.0 * depth;
    double bits_per_bank = static_cast<double>(capacity) * element_bits;
    double bram = duplication * dn * std::max(1.0, std::ceil(bits_per_bank / 18432.0));

    lut *= 1.0 + 0.05 * gauss(rng);
    ff *= 1.0 + 0.05 * gauss(rng);
    bram *= 1.0 + 0.03 * gauss(rng);

    data.rows.push_back(std::move(f));
    data.lut.push_back(std::max(0.0, lut));
    data.ff.push_back(std::max(0.0, ff));
    data.bram.push_back(std::max(1.0, bram));
  }
  return data;
}

}  // namespace bankforge
