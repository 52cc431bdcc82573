#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gomix/graybox.hpp"
#include "gomix/linkage.hpp"

namespace gomix {

// Interaction graph over linkage sets: two sets are adjacent when they share
// a variable or when some interaction edge joins a variable of one to a
// variable of the other. Non-adjacent sets can be mixed in the same batch:
// no subfunction depends on variables from both.
struct Lmig {
  std::size_t num_sets = 0;
  std::vector<std::vector<std::size_t>> adjacency;

  bool has_edge(std::size_t i, std::size_t j) const {
    const auto& a = adjacency[i];
    return std::binary_search(a.begin(), a.end(), j);
  }
  std::size_t num_edges() const {
    std::size_t twice = 0;
    for (const auto& a : adjacency) twice += a.size();
    return twice / 2;
  }
};

inline Lmig build_lmig(const Fos& fos, const Vig& vig) {
  const std::size_t m = fos.sets.size();
  std::vector<std::vector<std::size_t>> var_sets(vig.num_vertices);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t u : fos.sets[i]) {
      if (u >= vig.num_vertices)
        throw std::invalid_argument("scheduling: linkage set references unknown variable");
      var_sets[u].push_back(i);
    }
  }

  Lmig lmig;
  lmig.num_sets = m;
  lmig.adjacency.resize(m);
  std::vector<std::uint64_t> stamp(m, 0);
  std::uint64_t epoch = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ++epoch;
    stamp[i] = epoch;  // no self-loop
    auto touch = [&](std::size_t j) {
      if (stamp[j] != epoch) {
        stamp[j] = epoch;
        lmig.adjacency[i].push_back(j);
      }
    };
    for (std::size_t u : fos.sets[i]) {
      for (std::size_t j : var_sets[u]) touch(j);          // shared variable
      for (std::size_t v : vig.adjacency[u])
        for (std::size_t j : var_sets[v]) touch(j);        // bridged interaction
    }
    std::sort(lmig.adjacency[i].begin(), lmig.adjacency[i].end());
  }
  return lmig;
}

// Partition of the linkage sets into color groups of pairwise non-adjacent
// sets; groups are indexed by color, members listed in ascending set order.
struct ColorGroups {
  std::vector<std::vector<std::size_t>> groups;

  std::size_t num_groups() const { return groups.size(); }
  std::size_t num_sets() const {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    return total;
  }
};

// Greedy coloring in order of non-increasing degree (ties: ascending index);
// each vertex takes the smallest color absent from its colored neighbors.
inline ColorGroups welsh_powell(const Lmig& lmig) {
  const std::size_t m = lmig.num_sets;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::size_t da = lmig.adjacency[a].size();
    const std::size_t db = lmig.adjacency[b].size();
    return da != db ? da > db : a < b;
  });

  std::vector<std::size_t> color(m, npos);
  std::vector<std::uint64_t> used(m + 1, 0);
  std::uint64_t epoch = 0;
  std::size_t num_colors = 0;
  for (std::size_t v : order) {
    ++epoch;
    for (std::size_t nb : lmig.adjacency[v])
      if (color[nb] != npos) used[color[nb]] = epoch;
    std::size_t c = 0;
    while (used[c] == epoch) ++c;
    color[v] = c;
    num_colors = std::max(num_colors, c + 1);
  }

  ColorGroups groups;
  groups.groups.resize(num_colors);
  for (std::size_t v = 0; v < m; ++v) groups.groups[color[v]].push_back(v);
  for (auto& g : groups.groups) std::sort(g.begin(), g.end());
  return groups;
}

struct GroupStats {
  std::size_t num_sets = 0;
  std::size_t num_groups = 0;
  std::vector<std::size_t> group_sizes;
  double mean_width = 0.0;  // sets per group, i.e. mean batch width
};

inline GroupStats group_stats(const ColorGroups& groups) {
  GroupStats stats;
  stats.num_groups = groups.num_groups();
  for (const auto& g : groups.groups) {
    stats.group_sizes.push_back(g.size());
    stats.num_sets += g.size();
  }
  stats.mean_width = stats.num_groups == 0
                         ? 0.0
                         : static_cast<double>(stats.num_sets) /
                               static_cast<double>(stats.num_groups);
  return stats;
}

// Text report, one line per group.
inline std::string format_group_report(const ColorGroups& groups) {
  const GroupStats stats = group_stats(groups);
  std::ostringstream out;
  out << "sets " << stats.num_sets << "\n";
  out << "groups " << stats.num_groups << "\n";
  out << "mean_width " << stats.mean_width << "\n";
  for (std::size_t c = 0; c < groups.groups.size(); ++c) {
    out << "group " << c << " size " << groups.groups[c].size() << ":";
    for (std::size_t v : groups.groups[c]) out << ' ' << v;
    out << "\n";
  }
  return out.str();
}

}  // namespace gomix
