#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gomix {

using Allele = std::uint8_t;
using Genotype = std::vector<Allele>;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Fitness ordering. Integer-weight problems compare exactly; otherwise a
// relative tolerance absorbs float noise so that "equal" is symmetric.
struct FitnessComparator {
  bool exact = true;
  double rel_tol = 1e-9;

  double scale(double a, double b) const {
    return rel_tol * std::max({1.0, std::fabs(a), std::fabs(b)});
  }
  bool better(double a, double b) const {
    return exact ? a > b : a - b > scale(a, b);
  }
  bool equal(double a, double b) const {
    return exact ? a == b : std::fabs(a - b) <= scale(a, b);
  }
};

// Additively decomposable problem: fitness(x) = sum_i f_i(x restricted to
// inputs(i)). Immutable after construction; safe to share across threads.
class GrayBoxProblem {
 public:
  using Evaluator =
      std::function<double(std::size_t subfunction, std::span<const Allele> values)>;

  GrayBoxProblem(std::size_t num_variables,
                 std::vector<std::vector<std::size_t>> subfunction_inputs,
                 Evaluator evaluator, std::uint32_t alphabet_size = 2,
                 bool exact_fitness = true)
      : num_variables_(num_variables),
        inputs_(std::move(subfunction_inputs)),
        evaluator_(std::move(evaluator)),
        alphabet_size_(alphabet_size),
        exact_fitness_(exact_fitness) {
    if (num_variables_ == 0)
      throw std::invalid_argument("graybox: need at least one variable");
    if (alphabet_size_ < 2)
      throw std::invalid_argument("graybox: alphabet needs at least two symbols");
    if (!evaluator_) throw std::invalid_argument("graybox: missing evaluator");
    var_to_subfunctions_.resize(num_variables_);
    for (std::size_t i = 0; i < inputs_.size(); ++i) {
      const auto& in = inputs_[i];
      if (in.empty())
        throw std::invalid_argument("graybox: subfunction " + std::to_string(i) +
                                    " has no inputs");
      for (std::size_t j = 0; j < in.size(); ++j) {
        if (in[j] >= num_variables_)
          throw std::invalid_argument("graybox: subfunction " + std::to_string(i) +
                                      " references a variable out of range");
        if (j > 0 && in[j] <= in[j - 1])
          throw std::invalid_argument("graybox: subfunction " + std::to_string(i) +
                                      " inputs must be sorted and unique");
        var_to_subfunctions_[in[j]].push_back(i);
      }
      max_arity_ = std::max(max_arity_, in.size());
    }
  }

  std::size_t num_variables() const { return num_variables_; }
  std::size_t num_subfunctions() const { return inputs_.size(); }
  const std::vector<std::size_t>& inputs(std::size_t i) const { return inputs_[i]; }
  const std::vector<std::vector<std::size_t>>& all_inputs() const { return inputs_; }
  const std::vector<std::size_t>& subfunctions_of(std::size_t variable) const {
    return var_to_subfunctions_[variable];
  }
  std::uint32_t alphabet_size() const { return alphabet_size_; }
  bool exact_fitness() const { return exact_fitness_; }
  FitnessComparator comparator() const { return FitnessComparator{exact_fitness_}; }
  std::size_t max_arity() const { return max_arity_; }

  double evaluate_subfunction(std::size_t i, std::span<const Allele> values) const {
    return evaluator_(i, values);
  }

  // Gray-box convention: one unit of work = q evaluator invocations.
  double evaluation_units(std::uint64_t evaluator_calls) const {
    return inputs_.empty()
               ? 0.0
               : static_cast<double>(evaluator_calls) /
                     static_cast<double>(inputs_.size());
  }

 private:
  std::size_t num_variables_;
  std::vector<std::vector<std::size_t>> inputs_;
  std::vector<std::vector<std::size_t>> var_to_subfunctions_;
  Evaluator evaluator_;
  std::uint32_t alphabet_size_;
  bool exact_fitness_;
  std::size_t max_arity_ = 0;
};

// Genotype plus its fitness and (when maintained) the per-subfunction values
// the fitness is the sum of. The engines always keep the cache populated.
struct EvaluatedSolution {
  Genotype genotype;
  double fitness = 0.0;
  std::optional<std::vector<double>> subfunction_values;
};

namespace detail {

inline void check_genotype(const GrayBoxProblem& problem, const Genotype& genotype) {
  if (genotype.size() != problem.num_variables())
    throw std::invalid_argument("graybox: genotype length mismatch");
  for (Allele a : genotype)
    if (a >= problem.alphabet_size())
      throw std::invalid_argument("graybox: genotype value outside alphabet");
}

}  // namespace detail

inline EvaluatedSolution full_evaluate(const GrayBoxProblem& problem,
                                       const Genotype& genotype) {
  detail::check_genotype(problem, genotype);
  EvaluatedSolution out;
  out.genotype = genotype;
  std::vector<double> cache(problem.num_subfunctions());
  std::vector<Allele> scratch(problem.max_arity());
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.num_subfunctions(); ++i) {
    const auto& in = problem.inputs(i);
    for (std::size_t j = 0; j < in.size(); ++j) scratch[j] = genotype[in[j]];
    cache[i] = problem.evaluate_subfunction(i, std::span(scratch.data(), in.size()));
    sum += cache[i];
  }
  out.fitness = sum;
  out.subfunction_values = std::move(cache);
  return out;
}

// Result of a partial evaluation: the fitness delta plus the recomputed
// values of every affected subfunction, so a later commit needs no re-work.
struct PartialEvaluation {
  double delta = 0.0;
  std::vector<std::size_t> affected;  // subfunction ids, first-touch order
  std::vector<double> new_values;     // aligned with affected
  std::uint64_t evaluator_calls = 0;

  void clear() {
    delta = 0.0;
    affected.clear();
    new_values.clear();
    evaluator_calls = 0;
  }
};

// Reusable scratch for the partial-evaluation path; binding to a problem
// sizes the stamp arrays once, after which no call allocates in steady state.
struct EvalWorkspace {
  std::vector<std::uint64_t> var_stamp;
  std::vector<Allele> override_value;
  std::vector<std::uint64_t> sub_stamp;
  std::vector<Allele> scratch;
  std::uint64_t epoch = 0;
  std::size_t bound_vars = npos;
  std::size_t bound_subs = npos;

  // per-step scratch used by the mixing operators
  std::vector<std::size_t> changed_idx;
  std::vector<Allele> changed_val;
  std::vector<std::size_t> donor_perm;
  std::vector<std::size_t> set_perm;
  PartialEvaluation eval;

  void bind(const GrayBoxProblem& problem) {
    if (bound_vars == problem.num_variables() &&
        bound_subs == problem.num_subfunctions())
      return;
    bound_vars = problem.num_variables();
    bound_subs = problem.num_subfunctions();
    var_stamp.assign(bound_vars, 0);
    override_value.assign(bound_vars, 0);
    sub_stamp.assign(bound_subs, 0);
    scratch.resize(problem.max_arity());
    epoch = 0;
  }
};

// Recomputes only the subfunctions that touch a modified variable; the delta
// is relative to the cached values of `base`, which is left untouched.
inline void partial_evaluate_into(const GrayBoxProblem& problem,
                                  const EvaluatedSolution& base,
                                  std::span<const std::size_t> modified_indices,
                                  std::span<const Allele> new_values,
                                  EvalWorkspace& ws, PartialEvaluation& out) {
  if (!base.subfunction_values)
    throw std::logic_error("partial_evaluate: base solution lacks the subfunction cache");
  if (modified_indices.empty())
    throw std::invalid_argument("partial_evaluate: empty modification set");
  if (modified_indices.size() != new_values.size())
    throw std::invalid_argument("partial_evaluate: indices and values differ in length");
  if (base.genotype.size() != problem.num_variables())
    throw std::invalid_argument("partial_evaluate: genotype length mismatch");

  ws.bind(problem);
  const std::uint64_t epoch = ++ws.epoch;
  for (std::size_t i = 0; i < modified_indices.size(); ++i) {
    const std::size_t v = modified_indices[i];
    if (v >= problem.num_variables())
      throw std::invalid_argument("partial_evaluate: variable index out of range");
    if (new_values[i] >= problem.alphabet_size())
      throw std::invalid_argument("partial_evaluate: value outside alphabet");
    if (ws.var_stamp[v] == epoch)
      throw std::invalid_argument("partial_evaluate: duplicate modified index");
    ws.var_stamp[v] = epoch;
    ws.override_value[v] = new_values[i];
  }

  out.clear();
  const std::vector<double>& cache = *base.subfunction_values;
  for (const std::size_t v : modified_indices) {
    for (const std::size_t sub : problem.subfunctions_of(v)) {
      if (ws.sub_stamp[sub] == epoch) continue;
      ws.sub_stamp[sub] = epoch;
      const auto& in = problem.inputs(sub);
      for (std::size_t k = 0; k < in.size(); ++k) {
        const std::size_t u = in[k];
        ws.scratch[k] = ws.var_stamp[u] == epoch ? ws.override_value[u]
                                                 : base.genotype[u];
      }
      const double value =
          problem.evaluate_subfunction(sub, std::span(ws.scratch.data(), in.size()));
      out.delta += value - cache[sub];
      out.affected.push_back(sub);
      out.new_values.push_back(value);
    }
  }
  out.evaluator_calls = out.affected.size();
}

inline PartialEvaluation partial_evaluate(const GrayBoxProblem& problem,
                                          const EvaluatedSolution& base,
                                          std::span<const std::size_t> modified_indices,
                                          std::span<const Allele> new_values) {
  EvalWorkspace ws;
  PartialEvaluation out;
  partial_evaluate_into(problem, base, modified_indices, new_values, ws, out);
  return out;
}

// In-place commit of a previously computed partial evaluation: writes the new
// variable values, bumps the fitness by the delta, refreshes the cache. No
// evaluator invocations. An empty modification with delta 0 is the identity.
inline void commit_partial(EvaluatedSolution& solution,
                           std::span<const std::size_t> modified_indices,
                           std::span<const Allele> new_values,
                           const PartialEvaluation& eval) {
  if (!solution.subfunction_values)
    throw std::logic_error("apply_partial: solution lacks the subfunction cache");
  if (modified_indices.size() != new_values.size())
    throw std::invalid_argument("apply_partial: indices and values differ in length");
  for (std::size_t i = 0; i < modified_indices.size(); ++i)
    solution.genotype[modified_indices[i]] = new_values[i];
  solution.fitness += eval.delta;
  std::vector<double>& cache = *solution.subfunction_values;
  for (std::size_t i = 0; i < eval.affected.size(); ++i)
    cache[eval.affected[i]] = eval.new_values[i];
}

inline EvaluatedSolution apply_partial(const EvaluatedSolution& base,
                                       std::span<const std::size_t> modified_indices,
                                       std::span<const Allele> new_values,
                                       const PartialEvaluation& eval) {
  EvaluatedSolution out = base;
  commit_partial(out, modified_indices, new_values, eval);
  return out;
}

// Variable interaction graph: one vertex per variable, an edge wherever two
// variables appear together in some subfunction. Adjacency lists are sorted.
struct Vig {
  std::size_t num_vertices = 0;
  std::vector<std::vector<std::size_t>> adjacency;

  bool has_edge(std::size_t u, std::size_t v) const {
    const auto& a = adjacency[u];
    return std::binary_search(a.begin(), a.end(), v);
  }
  std::size_t num_edges() const {
    std::size_t twice = 0;
    for (const auto& a : adjacency) twice += a.size();
    return twice / 2;
  }
};

inline Vig build_vig(const GrayBoxProblem& problem) {
  Vig vig;
  vig.num_vertices = problem.num_variables();
  vig.adjacency.resize(vig.num_vertices);
  for (std::size_t i = 0; i < problem.num_subfunctions(); ++i) {
    const auto& in = problem.inputs(i);
    for (std::size_t a = 0; a < in.size(); ++a) {
      for (std::size_t b = a + 1; b < in.size(); ++b) {
        vig.adjacency[in[a]].push_back(in[b]);
        vig.adjacency[in[b]].push_back(in[a]);
      }
    }
  }
  for (auto& list : vig.adjacency) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return vig;
}

// Test hook: does the stored fitness/cache agree with a fresh evaluation?
inline bool solution_consistent(const GrayBoxProblem& problem,
                                const EvaluatedSolution& solution) {
  const EvaluatedSolution fresh = full_evaluate(problem, solution.genotype);
  const FitnessComparator cmp = problem.comparator();
  if (!cmp.equal(fresh.fitness, solution.fitness)) return false;
  if (!solution.subfunction_values) return true;
  const auto& cached = *solution.subfunction_values;
  const auto& expect = *fresh.subfunction_values;
  if (cached.size() != expect.size()) return false;
  for (std::size_t i = 0; i < cached.size(); ++i)
    if (!cmp.equal(cached[i], expect[i])) return false;
  return true;
}

}  // namespace gomix
