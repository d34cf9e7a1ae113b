#pragma once

#include <vector>

#include "bankforge/polytope.hpp"

namespace bankforge {

struct ValidationStats {
  i64 emptiness_checks = 0;
};

namespace detail {

/// Adjacency matrix of pairwise non-empty conflict polytopes within a group.
inline std::vector<std::vector<bool>> conflict_graph(const AccessGroup& group,
                                                     const std::vector<AffineAccess>& accesses,
                                                     const HyperplaneGeometry& g, i64 budget,
                                                     ValidationStats* stats) {
  std::size_t n = group.members.size();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      ConflictPolytope p =
          build_conflict(accesses[group.members[i]], accesses[group.members[j]], g);
      if (stats) ++stats->emptiness_checks;
      if (!is_empty(p, budget)) adj[i][j] = adj[j][i] = true;
    }
  return adj;
}

inline bool clique_search(const std::vector<std::vector<bool>>& adj,
                          std::vector<std::size_t>& clique, std::size_t start,
                          std::size_t target) {
  if (clique.size() == target) return true;
  for (std::size_t v = start; v < adj.size(); ++v) {
    bool fits = true;
    for (std::size_t u : clique)
      if (!adj[u][v]) {
        fits = false;
        break;
      }
    if (!fits) continue;
    clique.push_back(v);
    if (clique_search(adj, clique, v + 1, target)) return true;
    clique.pop_back();
  }
  return false;
}

inline bool has_clique(const std::vector<std::vector<bool>>& adj, std::size_t size) {
  std::vector<std::size_t> clique;
  return clique_search(adj, clique, 0, size);
}

}  // namespace detail

/// A geometry is valid for a k-ported memory when no group's conflict graph
/// contains a clique of size k+1. At k = 1 this is the usual rule: every
/// pairwise conflict polytope must be empty.
inline bool validate(const std::vector<AccessGroup>& groups,
                     const std::vector<AffineAccess>& accesses, const HyperplaneGeometry& g,
                     i64 ports, i64 budget = 10'000'000, ValidationStats* stats = nullptr) {
  for (const AccessGroup& grp : groups) {
    auto adj = detail::conflict_graph(grp, accesses, g, budget, stats);
    if (detail::has_clique(adj, static_cast<std::size_t>(ports) + 1)) return false;
  }
  return true;
}

}  // namespace bankforge
