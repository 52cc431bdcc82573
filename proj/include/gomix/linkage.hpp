#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gomix/graybox.hpp"
#include "gomix/maxcut.hpp"

namespace gomix {

// Symmetric pairwise similarity with a zero diagonal.
class SimilarityMatrix {
 public:
  explicit SimilarityMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double at(std::size_t u, std::size_t v) const { return data_[u * n_ + v]; }
  void set(std::size_t u, std::size_t v, double value) {
    data_[u * n_ + v] = value;
    data_[v * n_ + u] = value;
  }

  bool well_formed() const {
    for (std::size_t u = 0; u < n_; ++u) {
      if (at(u, u) != 0.0) return false;
      for (std::size_t v = 0; v < n_; ++v) {
        const double s = at(u, v);
        if (!std::isfinite(s) || s < 0.0 || s != at(v, u)) return false;
      }
    }
    return true;
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// Empirical pairwise mutual information over a binary population, natural
// log, with the 0 * ln(0) terms dropped. Population columns are bit-packed
// so each pair costs a handful of popcounts.
inline SimilarityMatrix mi_similarity(std::span<const Genotype> population) {
  if (population.empty())
    throw std::invalid_argument("linkage: empty population");
  const std::size_t n = population.size();
  const std::size_t num_vars = population[0].size();
  for (const Genotype& g : population) {
    if (g.size() != num_vars)
      throw std::invalid_argument("linkage: genotype length mismatch");
    for (Allele a : g)
      if (a > 1)
        throw std::invalid_argument("linkage: mutual information needs binary genotypes");
  }

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> columns(num_vars * words, 0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t u = 0; u < num_vars; ++u)
      if (population[s][u])
        columns[u * words + s / 64] |= 1ull << (s % 64);

  std::vector<std::uint64_t> ones(num_vars, 0);
  for (std::size_t u = 0; u < num_vars; ++u)
    for (std::size_t w = 0; w < words; ++w)
      ones[u] += std::popcount(columns[u * words + w]);

  const double dn = static_cast<double>(n);
  auto term = [dn](std::uint64_t n_ab, std::uint64_t n_a, std::uint64_t n_b) {
    if (n_ab == 0) return 0.0;
    const double p = static_cast<double>(n_ab) / dn;
    return p * std::log(static_cast<double>(n_ab) * dn /
                        (static_cast<double>(n_a) * static_cast<double>(n_b)));
  };

  SimilarityMatrix sim(num_vars);
  for (std::size_t u = 0; u < num_vars; ++u) {
    for (std::size_t v = u + 1; v < num_vars; ++v) {
      std::uint64_t n11 = 0;
      for (std::size_t w = 0; w < words; ++w)
        n11 += std::popcount(columns[u * words + w] & columns[v * words + w]);
      const std::uint64_t cu = ones[u], cv = ones[v];
      const std::uint64_t n10 = cu - n11;
      const std::uint64_t n01 = cv - n11;
      const std::uint64_t n00 = n - cu - cv + n11;
      double mi = term(n11, cu, cv) + term(n10, cu, n - cv) +
                  term(n01, n - cu, cv) + term(n00, n - cu, n - cv);
      sim.set(u, v, std::max(mi, 0.0));
    }
  }
  return sim;
}

// Graph-derived similarity: endpoints of an edge are as similar as the edge
// weight is strong, sign ignored.
inline SimilarityMatrix weight_similarity(const MaxCutInstance& inst) {
  validate_instance(inst);
  SimilarityMatrix sim(inst.num_vertices);
  for (const auto& e : inst.edges) sim.set(e.u, e.v, std::fabs(e.w));
  return sim;
}

// 0/1 similarity straight from interaction adjacency; the fallback when no
// weights are available.
inline SimilarityMatrix vig_similarity(const Vig& vig) {
  SimilarityMatrix sim(vig.num_vertices);
  for (std::size_t u = 0; u < vig.num_vertices; ++u)
    for (std::size_t v : vig.adjacency[u])
      if (u < v) sim.set(u, v, 1.0);
  return sim;
}

// Family of linkage sets. Singletons come first in variable order; merged
// sets follow in merge order. children[i] holds the two member sets a merge
// united, or {-1, -1} for leaves.
struct Fos {
  std::size_t num_variables = 0;
  std::vector<std::vector<std::size_t>> sets;
  std::vector<std::pair<std::int64_t, std::int64_t>> children;
  std::optional<std::size_t> size_bound;

  std::size_t size() const { return sets.size(); }
};

// Bottom-up average-linkage clustering over the similarity matrix. Each step
// merges the pair of clusters with the highest mean inter-cluster similarity;
// equal scores break toward the lexicographically smallest pair of cluster
// representatives (a cluster's representative is its minimum variable).
// Merges whose result would exceed `size_bound` are skipped; clustering halts
// when no merge is allowed. The full variable set is never emitted.
inline Fos learn_tree_upgma(const SimilarityMatrix& sim,
                            std::optional<std::size_t> size_bound = std::nullopt) {
  const std::size_t n = sim.size();
  if (n < 2) throw std::invalid_argument("linkage: need at least two variables");
  if (size_bound && *size_bound == 0)
    throw std::invalid_argument("linkage: size bound must be positive");
  const std::size_t bound = size_bound.value_or(n);

  Fos fos;
  fos.num_variables = n;
  fos.size_bound = size_bound;
  fos.sets.reserve(2 * n);
  fos.children.reserve(2 * n);
  for (std::size_t u = 0; u < n; ++u) {
    fos.sets.push_back({u});
    fos.children.push_back({-1, -1});
  }

  // Cluster state lives in fixed slots; a merge reuses one slot and retires
  // the other. Pair scores are kept as (sum, count) so comparisons can cross
  // multiply instead of dividing.
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> csize(n, 1);
  std::vector<std::size_t> rep(n);
  std::vector<std::int64_t> set_of(n);
  std::vector<std::vector<std::size_t>> members(n);
  std::vector<double> sums(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    rep[u] = u;
    set_of[u] = static_cast<std::int64_t>(u);
    members[u] = {u};
    for (std::size_t v = 0; v < n; ++v) sums[u * n + v] = sim.at(u, v);
  }

  struct Candidate {
    double sum = 0.0;
    double weight = 1.0;  // |A| * |B|
    std::size_t partner = npos;
  };

  // (sum_a / w_a) vs (sum_b / w_b) without dividing; ties fall through.
  auto score_less = [](double sum_a, double w_a, double sum_b, double w_b) {
    return sum_a * w_b < sum_b * w_a;
  };
  auto pair_key = [&rep](std::size_t a, std::size_t b) {
    return std::pair(std::min(rep[a], rep[b]), std::max(rep[a], rep[b]));
  };
  // Is candidate pair (a, pa) preferable to (b, pb)?
  auto candidate_before = [&](std::size_t a, const Candidate& ca, std::size_t b,
                              const Candidate& cb) {
    if (score_less(cb.sum, cb.weight, ca.sum, ca.weight)) return true;
    if (score_less(ca.sum, ca.weight, cb.sum, cb.weight)) return false;
    return pair_key(a, ca.partner) < pair_key(b, cb.partner);
  };

  std::vector<Candidate> best(n);
  auto recompute_best = [&](std::size_t a) {
    Candidate c;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || !alive[b] || csize[a] + csize[b] > bound) continue;
      Candidate cand{sums[a * n + b],
                     static_cast<double>(csize[a]) * static_cast<double>(csize[b]),
                     b};
      if (c.partner == npos || candidate_before(a, cand, a, c)) c = cand;
    }
    best[a] = c;
  };
  for (std::size_t a = 0; a < n; ++a) recompute_best(a);

  std::size_t remaining = n;
  while (remaining > 1) {
    std::size_t pick = npos;
    for (std::size_t a = 0; a < n; ++a) {
      if (!alive[a] || best[a].partner == npos) continue;
      if (pick == npos || candidate_before(a, best[a], pick, best[pick]))
        pick = a;
    }
    if (pick == npos) break;  // bound forbids every remaining merge

    const std::size_t a = pick;
    const std::size_t b = best[a].partner;
    const std::size_t merged_size = csize[a] + csize[b];

    std::vector<std::size_t> merged;
    merged.reserve(merged_size);
    std::merge(members[a].begin(), members[a].end(), members[b].begin(),
               members[b].end(), std::back_inserter(merged));

    alive[b] = false;
    csize[a] = merged_size;
    rep[a] = std::min(rep[a], rep[b]);
    members[a] = std::move(merged);
    members[b].clear();

    if (merged_size < n) {
      fos.sets.push_back(members[a]);
      fos.children.push_back({set_of[a], set_of[b]});
      set_of[a] = static_cast<std::int64_t>(fos.sets.size() - 1);
    } else {
      set_of[a] = -1;  // the root is not a linkage set
    }

    for (std::size_t d = 0; d < n; ++d) {
      if (!alive[d] || d == a) continue;
      sums[d * n + a] = sums[d * n + a] + sums[d * n + b];
      sums[a * n + d] = sums[d * n + a];
    }

    --remaining;
    recompute_best(a);
    for (std::size_t d = 0; d < n; ++d) {
      if (!alive[d] || d == a) continue;
      if (best[d].partner == a || best[d].partner == b) {
        recompute_best(d);
      } else if (csize[d] + csize[a] <= bound) {
        Candidate cand{sums[d * n + a],
                       static_cast<double>(csize[d]) * static_cast<double>(csize[a]),
                       a};
        if (best[d].partner == npos || candidate_before(d, cand, d, best[d]))
          best[d] = cand;
      }
    }
  }

  return fos;
}

struct FosValidation {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    ok = false;
    violations.push_back(std::move(what));
  }
};

// Structural checks: sets sorted/unique/in-range, every variable covered, no
// set equal to the full variable set, recorded merges decompose their set,
// and the bound (when present) respected.
inline FosValidation validate_fos(const Fos& fos, std::size_t num_variables) {
  FosValidation report;
  std::vector<bool> covered(num_variables, false);
  for (std::size_t i = 0; i < fos.sets.size(); ++i) {
    const auto& set = fos.sets[i];
    if (set.empty()) {
      report.fail("set " + std::to_string(i) + " is empty");
      continue;
    }
    bool sorted = true;
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (set[j] >= num_variables) {
        report.fail("set " + std::to_string(i) + " references a variable out of range");
        sorted = false;
        break;
      }
      if (j > 0 && set[j] <= set[j - 1]) sorted = false;
      covered[set[j]] = true;
    }
    if (!sorted)
      report.fail("set " + std::to_string(i) + " is not sorted and unique");
    if (set.size() == num_variables && num_variables > 1)
      report.fail("set " + std::to_string(i) + " equals the full variable set");
    if (fos.size_bound && set.size() > *fos.size_bound)
      report.fail("set " + std::to_string(i) + " exceeds the size bound");
  }
  for (std::size_t u = 0; u < num_variables; ++u)
    if (!covered[u])
      report.fail("variable " + std::to_string(u) + " is in no set");

  if (fos.children.size() == fos.sets.size()) {
    for (std::size_t i = 0; i < fos.sets.size(); ++i) {
      const auto [l, r] = fos.children[i];
      if (l < 0 && r < 0) continue;
      if (l < 0 || r < 0 || static_cast<std::size_t>(l) >= i ||
          static_cast<std::size_t>(r) >= i) {
        report.fail("set " + std::to_string(i) + " has malformed member links");
        continue;
      }
      const auto& ls = fos.sets[static_cast<std::size_t>(l)];
      const auto& rs = fos.sets[static_cast<std::size_t>(r)];
      std::vector<std::size_t> merged;
      std::merge(ls.begin(), ls.end(), rs.begin(), rs.end(),
                 std::back_inserter(merged));
      if (merged != fos.sets[i] ||
          ls.size() + rs.size() != fos.sets[i].size())
        report.fail("set " + std::to_string(i) +
                    " is not the disjoint union of its member sets");
    }
  } else if (!fos.children.empty()) {
    report.fail("member links and sets differ in length");
  }
  return report;
}

// Diagnostic serialization: one line per set, space-separated sorted indices.
inline void write_fos(std::ostream& out, const Fos& fos) {
  for (const auto& set : fos.sets) {
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (j) out << ' ';
      out << set[j];
    }
    out << '\n';
  }
}

inline Fos read_fos(std::istream& in, std::size_t num_variables) {
  Fos fos;
  fos.num_variables = num_variables;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::size_t> set;
    long long v = 0;
    while (ls >> v) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_variables)
        throw ParseError(line_no, "variable index out of range");
      set.push_back(static_cast<std::size_t>(v));
    }
    if (!ls.eof()) throw ParseError(line_no, "malformed set line");
    if (set.empty()) continue;
    for (std::size_t j = 1; j < set.size(); ++j)
      if (set[j] <= set[j - 1])
        throw ParseError(line_no, "set indices must be sorted and unique");
    fos.sets.push_back(std::move(set));
    fos.children.push_back({-1, -1});
  }
  if (fos.sets.empty()) throw ParseError(line_no, "no sets");
  return fos;
}

}  // namespace gomix
