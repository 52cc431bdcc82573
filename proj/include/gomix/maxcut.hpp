#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "gomix/graybox.hpp"
#include "gomix/rng.hpp"

namespace gomix {

struct WeightedEdge {
  std::size_t u = 0;  // endpoints, 0-based, u < v
  std::size_t v = 0;
  double w = 1.0;
};

// Undirected weighted graph; edges are canonical (u < v, sorted, unique).
struct MaxCutInstance {
  std::size_t num_vertices = 0;
  std::vector<WeightedEdge> edges;

  bool integer_weights() const {
    for (const auto& e : edges)
      if (e.w != std::floor(e.w) || std::fabs(e.w) > 9e15) return false;
    return true;
  }
};

inline void validate_instance(const MaxCutInstance& inst) {
  if (inst.num_vertices == 0)
    throw std::invalid_argument("maxcut: instance needs at least one vertex");
  for (std::size_t i = 0; i < inst.edges.size(); ++i) {
    const auto& e = inst.edges[i];
    if (e.u >= e.v) throw std::invalid_argument("maxcut: edge endpoints must satisfy u < v");
    if (e.v >= inst.num_vertices)
      throw std::invalid_argument("maxcut: edge endpoint out of range");
    if (!std::isfinite(e.w)) throw std::invalid_argument("maxcut: non-finite edge weight");
    if (i > 0) {
      const auto& p = inst.edges[i - 1];
      if (p.u > e.u || (p.u == e.u && p.v >= e.v))
        throw std::invalid_argument("maxcut: edges must be sorted and unique");
    }
  }
}

// Sum of weights of edges whose endpoints land on opposite sides.
inline double cut_value(const MaxCutInstance& inst, const Genotype& genotype) {
  if (genotype.size() != inst.num_vertices)
    throw std::invalid_argument("maxcut: genotype length mismatch");
  double total = 0.0;
  for (const auto& e : inst.edges)
    if (genotype[e.u] != genotype[e.v]) total += e.w;
  return total;
}

// Gray-box view: one subfunction per edge, inputs {u, v}, value w * [x_u != x_v].
inline GrayBoxProblem as_graybox(const MaxCutInstance& inst) {
  validate_instance(inst);
  std::vector<std::vector<std::size_t>> inputs;
  inputs.reserve(inst.edges.size());
  auto edges = std::make_shared<std::vector<WeightedEdge>>(inst.edges);
  for (const auto& e : *edges) inputs.push_back({e.u, e.v});
  GrayBoxProblem::Evaluator eval =
      [edges](std::size_t i, std::span<const Allele> values) {
        return values[0] != values[1] ? (*edges)[i].w : 0.0;
      };
  return GrayBoxProblem(inst.num_vertices, std::move(inputs), std::move(eval), 2,
                        inst.integer_weights());
}

struct WeightSpec {
  enum class Kind { unit, uniform_int } kind = Kind::unit;
  std::int64_t lo = 1;
  std::int64_t hi = 1;
};

namespace detail {

inline double draw_weight(const WeightSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case WeightSpec::Kind::unit:
      return 1.0;
    case WeightSpec::Kind::uniform_int:
      if (spec.lo > spec.hi)
        throw std::invalid_argument("maxcut: weight range is empty");
      return static_cast<double>(rng.uniform_int(spec.lo, spec.hi));
  }
  return 1.0;
}

}  // namespace detail

// Complete graph on n vertices, edges in (u, v) order.
inline MaxCutInstance generate_complete(std::size_t n, const WeightSpec& weights,
                                        std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("maxcut: complete graph needs >= 2 vertices");
  RngStream rng(seed);
  MaxCutInstance inst;
  inst.num_vertices = n;
  inst.edges.reserve(n * (n - 1) / 2);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      inst.edges.push_back({u, v, detail::draw_weight(weights, rng)});
  validate_instance(inst);
  return inst;
}

// 2-D grid with wrap-around in both directions; every vertex has degree 4,
// so the edge count is exactly 2 * width * height. Both dims must be >= 3
// so the wrap edges never coincide with grid edges.
inline MaxCutInstance generate_torus(std::size_t width, std::size_t height,
                                     const WeightSpec& weights, std::uint64_t seed) {
  if (width < 3 || height < 3)
    throw std::invalid_argument("maxcut: torus dims must be >= 3");
  RngStream rng(seed);
  MaxCutInstance inst;
  inst.num_vertices = width * height;
  inst.edges.reserve(2 * inst.num_vertices);
  auto at = [width](std::size_t r, std::size_t c) { return r * width + c; };
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t v = at(r, c);
      const std::size_t right = at(r, (c + 1) % width);
      const std::size_t down = at((r + 1) % height, c);
      inst.edges.push_back({std::min(v, right), std::max(v, right),
                            detail::draw_weight(weights, rng)});
      inst.edges.push_back({std::min(v, down), std::max(v, down),
                            detail::draw_weight(weights, rng)});
    }
  }
  std::sort(inst.edges.begin(), inst.edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) {
              return a.u != b.u ? a.u < b.u : a.v < b.v;
            });
  validate_instance(inst);
  return inst;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Plain edge-list format: a "<num_vertices> <num_edges>" header followed by
// one "<u> <v> <w>" line per edge with 1-based endpoints. Blank lines and
// lines starting with '#' are skipped.
inline MaxCutInstance load_edge_list(std::istream& in) {
  MaxCutInstance inst;
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared_edges = 0;
  std::unordered_set<std::uint64_t> seen;

  auto next_payload = [&](std::string& out) {
    while (std::getline(in, line)) {
      ++line_no;
      std::size_t i = 0;
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i == line.size() || line[i] == '#') continue;
      out = line;
      return true;
    }
    return false;
  };

  std::string payload;
  if (!next_payload(payload)) throw ParseError(line_no, "missing header");
  {
    std::istringstream hs(payload);
    long long nv = 0, ne = 0;
    std::string extra;
    if (!(hs >> nv >> ne) || (hs >> extra) || nv < 1 || ne < 0)
      throw ParseError(line_no, "malformed header, expected '<num_vertices> <num_edges>'");
    inst.num_vertices = static_cast<std::size_t>(nv);
    declared_edges = static_cast<std::size_t>(ne);
  }

  inst.edges.reserve(declared_edges);
  while (inst.edges.size() < declared_edges) {
    if (!next_payload(payload))
      throw ParseError(line_no, "fewer edge lines than the header declares");
    std::istringstream es(payload);
    long long u = 0, v = 0;
    double w = 0.0;
    std::string extra;
    if (!(es >> u >> v >> w) || (es >> extra))
      throw ParseError(line_no, "malformed edge line, expected '<u> <v> <w>'");
    if (u < 1 || v < 1 || static_cast<std::size_t>(u) > inst.num_vertices ||
        static_cast<std::size_t>(v) > inst.num_vertices)
      throw ParseError(line_no, "vertex index out of range");
    if (u == v) throw ParseError(line_no, "self-loop");
    if (!std::isfinite(w)) throw ParseError(line_no, "non-finite weight");
    std::size_t a = static_cast<std::size_t>(u) - 1;
    std::size_t b = static_cast<std::size_t>(v) - 1;
    if (a > b) std::swap(a, b);
    const std::uint64_t key =
        static_cast<std::uint64_t>(a) * inst.num_vertices + b;
    if (!seen.insert(key).second) throw ParseError(line_no, "duplicate edge");
    inst.edges.push_back({a, b, w});
  }
  if (next_payload(payload))
    throw ParseError(line_no, "more edge lines than the header declares");

  std::sort(inst.edges.begin(), inst.edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) {
              return a.u != b.u ? a.u < b.u : a.v < b.v;
            });
  validate_instance(inst);
  return inst;
}

namespace detail {

inline std::string weight_to_string(double w) {
  if (w == std::floor(w) && std::fabs(w) <= 9e15)
    return std::to_string(static_cast<long long>(w));
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), w);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// Canonical serialization: sorted edges, 1-based endpoints, integral weights
// printed as integers. Loading the output reproduces the instance exactly.
inline void save_edge_list(std::ostream& out, const MaxCutInstance& inst) {
  validate_instance(inst);
  out << inst.num_vertices << ' ' << inst.edges.size() << '\n';
  for (const auto& e : inst.edges)
    out << (e.u + 1) << ' ' << (e.v + 1) << ' ' << detail::weight_to_string(e.w)
        << '\n';
}

struct BruteForceResult {
  double optimum = 0.0;
  Genotype genotype;  // lexicographically smallest optimum, vertex 0 on side 0
};

// Exhaustive maximum over all 2^(n-1) cuts (vertex 0's side is fixed, the
// complement cut is identical). Enumerates in Gray-code order so each step
// updates the running cut along one vertex's incident edges.
inline BruteForceResult brute_force_optimum(const MaxCutInstance& inst) {
  validate_instance(inst);
  const std::size_t n = inst.num_vertices;
  if (n > 26)
    throw std::invalid_argument(
        "maxcut: exhaustive oracle is capped at 26 vertices");

  std::vector<std::vector<std::pair<std::size_t, double>>> incident(n);
  for (const auto& e : inst.edges) {
    incident[e.u].push_back({e.v, e.w});
    incident[e.v].push_back({e.u, e.w});
  }

  const bool exact = inst.integer_weights();
  Genotype state(n, 0);
  BruteForceResult best;
  best.optimum = 0.0;  // all-zeros cut
  best.genotype = state;

  auto exact_cut = [&](const Genotype& g) { return cut_value(inst, g); };

  double running = 0.0;
  const std::uint64_t total = n >= 1 ? (1ull << (n - 1)) : 1ull;
  for (std::uint64_t k = 1; k < total; ++k) {
    // Gray code: step k flips bit ctz(k); vertex 0 stays fixed.
    const unsigned flip = static_cast<unsigned>(__builtin_ctzll(k)) + 1;
    const Allele before = state[flip];
    state[flip] = static_cast<Allele>(1 - before);
    for (const auto& [nb, w] : incident[flip]) {
      if (state[nb] == before)
        running += w;  // edge becomes cut
      else
        running -= w;
    }
    // With integer weights `running` is exact; otherwise widen the gate to
    // absorb drift from the incremental updates and re-derive the value.
    const double gate =
        exact ? best.optimum
              : best.optimum - 1e-9 * std::max(1.0, std::fabs(best.optimum));
    if (running > gate || (running == best.optimum && state < best.genotype)) {
      const double value = exact ? running : exact_cut(state);
      if (value > best.optimum ||
          (value == best.optimum && state < best.genotype)) {
        best.optimum = value;
        best.genotype = state;
      }
    }
  }
  return best;
}

}  // namespace gomix
