#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "gomix/engine_serial.hpp"
#include "gomix/graybox.hpp"
#include "gomix/ims.hpp"
#include "gomix/linkage.hpp"
#include "gomix/model.hpp"
#include "gomix/parallel_backend.hpp"
#include "gomix/rng.hpp"
#include "gomix/runtime.hpp"
#include "gomix/scheduling.hpp"

namespace gomix {

// Precomputed evaluation footprint of one color group: for every linkage set
// in the group (ascending set id), the subfunctions that touch any of its
// variables. Because same-colored sets are independent, these footprints are
// pairwise disjoint, which is what makes the batched phases collision-free.
struct GroupPlan {
  std::vector<std::size_t> set_ids;            // FOS indices, ascending
  std::vector<std::size_t> entry_subfunction;  // dependent subfunctions, concatenated
  std::vector<std::size_t> set_entry_offset;   // position p spans [off[p], off[p+1])

  std::size_t size() const { return set_ids.size(); }
  std::size_t footprint(std::size_t p) const {
    return set_entry_offset[p + 1] - set_entry_offset[p];
  }
};

inline GroupPlan make_group_plan(const GrayBoxProblem& problem, const Fos& fos,
                                 std::span<const std::size_t> group_members) {
  GroupPlan plan;
  plan.set_ids.assign(group_members.begin(), group_members.end());
  std::sort(plan.set_ids.begin(), plan.set_ids.end());
  plan.set_entry_offset.push_back(0);
  std::vector<std::size_t> deps;
  for (const std::size_t set_id : plan.set_ids) {
    if (set_id >= fos.sets.size())
      throw std::invalid_argument("group plan: linkage set index out of range");
    deps.clear();
    for (const std::size_t v : fos.sets[set_id]) {
      const auto& subs = problem.subfunctions_of(v);
      deps.insert(deps.end(), subs.begin(), subs.end());
    }
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    plan.entry_subfunction.insert(plan.entry_subfunction.end(), deps.begin(),
                                  deps.end());
    plan.set_entry_offset.push_back(plan.entry_subfunction.size());
  }
  return plan;
}

// Scratch and results for one batched group step over the whole population.
// The (solution s, group position p) pair is flattened as s·|G| + p, which is
// also the reduction key of every evaluator contribution the pair emits.
struct GroupBatch {
  std::size_t solutions = 0;
  std::size_t group_size = 0;

  std::vector<std::int32_t> donor;          // donor index, -1 when no donor differs
  std::vector<std::size_t> contrib_offset;  // pair sp's entries start here
  std::vector<std::uint64_t> keys;
  std::vector<double> values_new;           // evaluator results on the modified side
  std::vector<double> values_old;           // cached values of the parent side
  KeyedSums sums_new;
  KeyedSums sums_old;

  std::vector<double> delta;           // per pair; meaningful where present
  std::vector<std::uint8_t> present;   // pair executed (a differing donor existed)
  std::vector<std::uint8_t> accept;
  std::vector<std::uint8_t> parent_is_elitist;  // per solution

  std::uint64_t evaluator_calls = 0;
  std::size_t steps = 0;  // executed pairs

  void bind(std::size_t num_solutions, std::size_t num_sets) {
    solutions = num_solutions;
    group_size = num_sets;
    const std::size_t pairs = num_solutions * num_sets;
    donor.assign(pairs, -1);
    contrib_offset.assign(pairs + 1, 0);
    delta.assign(pairs, 0.0);
    present.assign(pairs, 0);
    accept.assign(pairs, 0);
    parent_is_elitist.assign(num_solutions, 0);
    evaluator_calls = 0;
    steps = 0;
  }
};

// Phase 1 (sequential): pick a donor for every (solution, set) pair of the
// group and write the donated genes into the shadow genotypes. Donors come
// from the current offspring buffer itself, which is frozen during a group
// because commits only happen in the apply phase. Draw order is fixed (set
// position major, then solution), so results never depend on worker count.
inline void insert_donor_genes(const Fos& fos, const GroupPlan& plan,
                               std::span<const EvaluatedSolution> offspring,
                               std::span<Genotype> shadow, RngStream& rng,
                               std::vector<std::size_t>& perm_scratch,
                               GroupBatch& batch) {
  batch.bind(offspring.size(), plan.size());
  for (std::size_t p = 0; p < plan.size(); ++p) {
    const auto& set = fos.sets[plan.set_ids[p]];
    for (std::size_t s = 0; s < offspring.size(); ++s) {
      const std::size_t d =
          select_donor(offspring, offspring[s].genotype, set, rng, perm_scratch);
      if (d == npos) continue;
      batch.donor[s * plan.size() + p] = static_cast<std::int32_t>(d);
      for (const std::size_t v : set) shadow[s][v] = offspring[d].genotype[v];
      ++batch.steps;
    }
  }
}

// Phase 2 (parallel): evaluate every executed pair's footprint on the shadow
// side, pull the parent side from the caches, and reduce both by key. Keys
// are emitted solution-major and position-ascending, hence already grouped
// into runs; the fixed within-run order keeps sums bit-identical across
// worker counts. Each pair's fitness delta is the difference of its two run
// sums; executed pairs with an empty footprint stay at delta 0. The evaluator
// must be safe to call concurrently.
inline void parallel_partial_evaluations(const GrayBoxProblem& problem,
                                         const GroupPlan& plan,
                                         std::span<const EvaluatedSolution> offspring,
                                         std::span<const Genotype> shadow,
                                         WorkerPool& pool,
                                         std::vector<std::vector<Allele>>& scratch,
                                         GroupBatch& batch) {
  const std::size_t n = batch.solutions;
  const std::size_t g = batch.group_size;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t p = 0; p < g; ++p) {
      const std::size_t sp = s * g + p;
      const std::size_t count = batch.donor[sp] < 0 ? 0 : plan.footprint(p);
      batch.contrib_offset[sp + 1] = batch.contrib_offset[sp] + count;
    }
  }
  const std::size_t total = batch.contrib_offset[n * g];
  batch.keys.resize(total);
  batch.values_new.resize(total);
  batch.values_old.resize(total);
  batch.evaluator_calls = total;

  scratch.resize(std::max(scratch.size(), pool.workers()));
  for (auto& buf : scratch) buf.resize(problem.max_arity());

  pool.run(n, [&](std::size_t begin, std::size_t end, std::size_t worker) {
    std::vector<Allele>& gather = scratch[worker];
    for (std::size_t s = begin; s < end; ++s) {
      const std::vector<double>& cache = *offspring[s].subfunction_values;
      const Genotype& modified = shadow[s];
      for (std::size_t p = 0; p < g; ++p) {
        const std::size_t sp = s * g + p;
        if (batch.donor[sp] < 0) continue;
        std::size_t at = batch.contrib_offset[sp];
        for (std::size_t e = plan.set_entry_offset[p];
             e < plan.set_entry_offset[p + 1]; ++e, ++at) {
          const std::size_t sub = plan.entry_subfunction[e];
          const auto& in = problem.inputs(sub);
          for (std::size_t k = 0; k < in.size(); ++k) gather[k] = modified[in[k]];
          batch.keys[at] = sp;
          batch.values_new[at] = problem.evaluate_subfunction(
              sub, std::span(gather.data(), in.size()));
          batch.values_old[at] = cache[sub];
        }
      }
    }
  });

  reduce_by_key(batch.keys, batch.values_new, pool, batch.sums_new);
  reduce_by_key(batch.keys, batch.values_old, pool, batch.sums_old);

  for (std::size_t sp = 0; sp < n * g; ++sp)
    batch.present[sp] = batch.donor[sp] >= 0;
  for (std::size_t r = 0; r < batch.sums_new.keys.size(); ++r) {
    const std::size_t sp = static_cast<std::size_t>(batch.sums_new.keys[r]);
    batch.delta[sp] = batch.sums_new.sums[r] - batch.sums_old.sums[r];
  }
}

// Phase 3 (parallel): the batched acceptance rule. Every executed pair is
// judged against the state the group started from — the parent fitness and
// the elitist genotype are the group-start snapshots, so decisions are order
// free. Keep a move when it improves fitness, or keeps it equal while the
// parent genotype differs from the elitist.
inline void determine_improvements(std::span<const EvaluatedSolution> offspring,
                                   const Genotype& elitist_genotype,
                                   const FitnessComparator& cmp, WorkerPool& pool,
                                   GroupBatch& batch) {
  const std::size_t n = batch.solutions;
  const std::size_t g = batch.group_size;
  pool.run(n, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t s = begin; s < end; ++s) {
      batch.parent_is_elitist[s] = offspring[s].genotype == elitist_genotype;
      const double parent_fitness = offspring[s].fitness;
      for (std::size_t p = 0; p < g; ++p) {
        const std::size_t sp = s * g + p;
        if (!batch.present[sp]) continue;
        const double candidate = parent_fitness + batch.delta[sp];
        batch.accept[sp] =
            cmp.better(candidate, parent_fitness) ||
            (cmp.equal(candidate, parent_fitness) && !batch.parent_is_elitist[s]);
      }
    }
  });
}

// Phase 4 (parallel over solutions): commit accepted pairs into the offspring
// buffer — genes, fitness delta, cache entries — and copy the parent genes
// back over rejected insertions, after which shadow and offspring genotypes
// are exact copies again. Footprints within a group are disjoint, so the
// per-solution deltas add exactly and cache writes never collide.
inline void apply_acceptance(const Fos& fos, const GroupPlan& plan,
                             std::span<EvaluatedSolution> offspring,
                             std::span<Genotype> shadow, WorkerPool& pool,
                             GroupBatch& batch) {
  const std::size_t g = batch.group_size;
  pool.run(batch.solutions, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t s = begin; s < end; ++s) {
      EvaluatedSolution& o = offspring[s];
      std::vector<double>& cache = *o.subfunction_values;
      for (std::size_t p = 0; p < g; ++p) {
        const std::size_t sp = s * g + p;
        if (!batch.present[sp]) continue;
        const auto& set = fos.sets[plan.set_ids[p]];
        if (batch.accept[sp]) {
          for (const std::size_t v : set) o.genotype[v] = shadow[s][v];
          o.fitness += batch.delta[sp];
          std::size_t at = batch.contrib_offset[sp];
          for (std::size_t e = plan.set_entry_offset[p];
               e < plan.set_entry_offset[p + 1]; ++e, ++at)
            cache[plan.entry_subfunction[e]] = batch.values_new[at];
        } else {
          for (const std::size_t v : set) shadow[s][v] = o.genotype[v];
        }
      }
    }
  });
}

// Optimal mixing restructured for data parallelism: the linkage model is
// fixed and colored once, and each color group's n·|G| mixing steps run as
// one batch — sequential donor draws, parallel keyed evaluation, batched
// acceptance, parallel commit. Forced improvement is absent by design; the
// elitist still advances after every group. Results are bit-identical for
// every worker count.
class ParallelEngine final : public GenerationRunner {
 public:
  ParallelEngine(const GrayBoxProblem& problem, EngineConfig cfg, RunContext& ctx,
                 int population_id = 1)
      : problem_(problem),
        cfg_(std::move(cfg)),
        ctx_(ctx),
        cmp_(problem.comparator()),
        rng_(cfg_.seed),
        pool_(cfg_.workers),
        pop_id_(population_id) {
    if (cfg_.population_size == 0)
      throw std::invalid_argument("engine: population must be non-empty");
    if (cfg_.model.kind != LinkageKind::fixed_tree)
      throw std::invalid_argument(
          "batch engine: needs a model that is fixed for the whole run");
    if (cfg_.fixed_model && !cfg_.fixed_model->groups.groups.empty())
      model_ = cfg_.fixed_model;
    else
      model_ = build_fixed_model(problem_, cfg_.model, true);
    for (const auto& members : model_->groups.groups)
      plans_.push_back(make_group_plan(problem_, model_->fos, members));
    counters_.resize(plans_.size());
    for (std::size_t i = 0; i < plans_.size(); ++i)
      counters_[i].sets = plans_[i].size();
    init_population();
  }

  void run_generation() override {
    if (ctx_.control.stop_requested()) return;
    const auto& term = ctx_.control.config();
    if (term.max_generations && generation_ >= *term.max_generations) {
      ctx_.control.request_stop(StopReason::generation_limit);
      return;
    }

    rng_.permutation(group_order_, plans_.size());
    for (const std::size_t gi : group_order_) {
      const GroupPlan& plan = plans_[gi];
      insert_donor_genes(model_->fos, plan, pop_, shadow_, rng_, perm_scratch_,
                         batch_);
      parallel_partial_evaluations(problem_, plan, pop_, shadow_, pool_,
                                   worker_scratch_, batch_);
      ctx_.control.add_evaluator_calls(batch_.evaluator_calls);
      determine_improvements(pop_, elitist_.genotype, cmp_, pool_, batch_);
      apply_acceptance(model_->fos, plan, pop_, shadow_, pool_, batch_);

      counters_[gi].steps += batch_.steps;
      counters_[gi].evaluator_calls += batch_.evaluator_calls;

      for (const auto& s : pop_) {
        if (cmp_.better(s.fitness, elitist_.fitness)) {
          elitist_ = s;
          ctx_.report_improvement(elitist_.fitness, generation_, pop_id_);
        }
      }
      if (ctx_.control.stop_requested()) return;
    }

    ++generation_;
    ctx_.report_boundary(elitist_.fitness, generation_, pop_id_);
  }

  long generation() const override { return generation_; }
  const EvaluatedSolution& elitist() const override { return elitist_; }
  void offer_elitist(const EvaluatedSolution& candidate) override {
    if (cmp_.better(candidate.fitness, elitist_.fitness)) elitist_ = candidate;
  }

  const std::vector<EvaluatedSolution>& population() const { return pop_; }
  const ModelArtifacts& model() const { return *model_; }
  const std::vector<RunResult::GroupCounter>& group_counters() const {
    return counters_;
  }

 private:
  void init_population() {
    pop_.reserve(cfg_.population_size);
    Genotype g(problem_.num_variables());
    for (std::size_t i = 0; i < cfg_.population_size; ++i) {
      for (auto& a : g)
        a = static_cast<Allele>(rng_.uniform_index(problem_.alphabet_size()));
      pop_.push_back(full_evaluate(problem_, g));
      ctx_.control.add_evaluator_calls(problem_.num_subfunctions());
      if (i == 0 || cmp_.better(pop_.back().fitness, elitist_.fitness)) {
        elitist_ = pop_.back();
        ctx_.report_improvement(elitist_.fitness, 0, pop_id_);
      }
    }
    shadow_.reserve(pop_.size());
    for (const auto& s : pop_) shadow_.push_back(s.genotype);
  }

  const GrayBoxProblem& problem_;
  EngineConfig cfg_;
  RunContext& ctx_;
  FitnessComparator cmp_;
  RngStream rng_;
  WorkerPool pool_;
  int pop_id_;

  std::shared_ptr<const ModelArtifacts> model_;
  std::vector<GroupPlan> plans_;
  std::vector<RunResult::GroupCounter> counters_;

  std::vector<EvaluatedSolution> pop_;  // offspring buffer, committed per group
  std::vector<Genotype> shadow_;        // insertion buffer, re-synced per group
  EvaluatedSolution elitist_;
  GroupBatch batch_;
  std::vector<std::size_t> group_order_;
  std::vector<std::size_t> perm_scratch_;
  std::vector<std::vector<Allele>> worker_scratch_;
  long generation_ = 0;
};

}  // namespace gomix
