#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "gomix/graybox.hpp"
#include "gomix/ims.hpp"
#include "gomix/linkage.hpp"
#include "gomix/model.hpp"
#include "gomix/rng.hpp"
#include "gomix/runtime.hpp"

namespace gomix {

struct EngineConfig {
  std::size_t population_size = 16;
  ModelConfig model;
  std::shared_ptr<const ModelArtifacts> fixed_model;  // optional, else built here
  std::uint64_t seed = 1;
  std::size_t workers = 1;  // batch engine only
};

// Scans a fresh uniform random permutation of the pool and returns the first
// member whose genotype differs from the parent somewhere on `set`, or npos
// when every member matches there. The permutation is generated lazily so an
// early hit stops drawing.
inline std::size_t select_donor(std::span<const EvaluatedSolution> pool,
                                const Genotype& parent,
                                std::span<const std::size_t> set, RngStream& rng,
                                std::vector<std::size_t>& perm) {
  const std::size_t n = pool.size();
  perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.uniform_index(n - i);
    std::swap(perm[i], perm[j]);
    const Genotype& candidate = pool[perm[i]].genotype;
    for (const std::size_t v : set) {
      if (candidate[v] != parent[v]) return perm[i];
    }
  }
  return npos;
}

struct GomOutcome {
  bool accepted = false;
  double delta = 0.0;
  std::uint64_t evaluator_calls = 0;
};

// One optimal-mixing step: copy the donor's genes on `set` into `o`, price
// the move by partial evaluation, and keep it when fitness improves or stays
// equal while `o` differs from the elitist genotype. Rejected moves leave
// `o` untouched. The caller must ensure the donor differs on the set.
inline GomOutcome gom_step(const GrayBoxProblem& problem, EvaluatedSolution& o,
                           const Genotype& donor, std::span<const std::size_t> set,
                           const Genotype& elitist_genotype,
                           const FitnessComparator& cmp, EvalWorkspace& ws) {
  ws.changed_idx.clear();
  ws.changed_val.clear();
  for (const std::size_t v : set) {
    if (donor[v] != o.genotype[v]) {
      ws.changed_idx.push_back(v);
      ws.changed_val.push_back(donor[v]);
    }
  }
  if (ws.changed_idx.empty())
    throw std::logic_error("gom_step: donor matches the parent on the linkage set");

  partial_evaluate_into(problem, o, ws.changed_idx, ws.changed_val, ws, ws.eval);
  GomOutcome out;
  out.delta = ws.eval.delta;
  out.evaluator_calls = ws.eval.evaluator_calls;

  const double candidate = o.fitness + ws.eval.delta;
  const bool accept = cmp.better(candidate, o.fitness) ||
                      (cmp.equal(candidate, o.fitness) &&
                       o.genotype != elitist_genotype);
  if (accept) {
    commit_partial(o, ws.changed_idx, ws.changed_val, ws.eval);
    out.accepted = true;
  }
  return out;
}

struct FiOutcome {
  bool strict_improvement = false;
  bool replaced_by_elitist = false;
  std::uint64_t evaluator_calls = 0;
};

// Forced improvement: mix elitist genes into `o` over the family in a fresh
// random order, halting at the first strict fitness improvement; when a full
// pass brings none, `o` becomes a copy of the elitist.
inline FiOutcome forced_improvement(const GrayBoxProblem& problem,
                                    EvaluatedSolution& o,
                                    const EvaluatedSolution& elitist,
                                    const Fos& fos, RngStream& rng,
                                    const FitnessComparator& cmp,
                                    EvalWorkspace& ws) {
  FiOutcome out;
  rng.permutation(ws.set_perm, fos.sets.size());
  for (const std::size_t idx : ws.set_perm) {
    const auto& set = fos.sets[idx];
    bool differs = false;
    for (const std::size_t v : set) {
      if (elitist.genotype[v] != o.genotype[v]) {
        differs = true;
        break;
      }
    }
    if (!differs) continue;
    const double before = o.fitness;
    const GomOutcome step = gom_step(problem, o, elitist.genotype, set,
                                     elitist.genotype, cmp, ws);
    out.evaluator_calls += step.evaluator_calls;
    if (step.accepted && cmp.better(o.fitness, before)) {
      out.strict_improvement = true;
      return out;
    }
  }
  o = elitist;
  out.replaced_by_elitist = true;
  return out;
}

// Faithful single-threaded optimal-mixing engine. Each generation clones
// every parent, walks the linkage sets in a fresh random order donating genes
// from the current population, and falls back to forced improvement when a
// clone accepted nothing or its stagnation budget ran out.
class SerialEngine final : public GenerationRunner {
 public:
  SerialEngine(const GrayBoxProblem& problem, EngineConfig cfg, RunContext& ctx,
               int population_id = 1)
      : problem_(problem),
        cfg_(std::move(cfg)),
        ctx_(ctx),
        cmp_(problem.comparator()),
        rng_(cfg_.seed),
        pop_id_(population_id) {
    if (cfg_.population_size == 0)
      throw std::invalid_argument("engine: population must be non-empty");
    ws_.bind(problem_);
    if (cfg_.model.kind == LinkageKind::fixed_tree) {
      model_ = cfg_.fixed_model ? cfg_.fixed_model
                                : build_fixed_model(problem_, cfg_.model, false);
    }
    fi_threshold_ =
        1 + static_cast<long>(std::floor(std::log10(
                static_cast<double>(cfg_.population_size))));
    init_population();
  }

  void run_generation() override {
    if (ctx_.control.stop_requested()) return;
    const auto& term = ctx_.control.config();
    if (term.max_generations && generation_ >= *term.max_generations) {
      ctx_.control.request_stop(StopReason::generation_limit);
      return;
    }
    if (cfg_.model.kind == LinkageKind::learned_lt && model_stale_) relearn();

    const Fos& fos = current_fos();
    const std::size_t n = pop_.size();
    offspring_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      EvaluatedSolution o = pop_[i];
      const double fitness_at_start = o.fitness;
      bool any_accepted = false;

      rng_.permutation(ws_.set_perm, fos.sets.size());
      fos_order_.assign(ws_.set_perm.begin(), ws_.set_perm.end());
      for (const std::size_t idx : fos_order_) {
        const auto& set = fos.sets[idx];
        const std::size_t donor =
            select_donor(pop_, o.genotype, set, rng_, ws_.donor_perm);
        if (donor == npos) continue;
        const GomOutcome step = gom_step(problem_, o, pop_[donor].genotype, set,
                                         elitist_.genotype, cmp_, ws_);
        ctx_.control.add_evaluator_calls(step.evaluator_calls);
        if (step.accepted) {
          any_accepted = true;
          update_elitist(o);
        }
        if (ctx_.control.stop_requested()) return;  // discard the open generation
      }

      bool improved = cmp_.better(o.fitness, fitness_at_start);
      const long pending_stagnation = improved ? 0 : stagnation_[i] + 1;
      if (!any_accepted || pending_stagnation > fi_threshold_) {
        const FiOutcome fi =
            forced_improvement(problem_, o, elitist_, fos, rng_, cmp_, ws_);
        ctx_.control.add_evaluator_calls(fi.evaluator_calls);
        update_elitist(o);
        improved = cmp_.better(o.fitness, fitness_at_start);
        if (ctx_.control.stop_requested()) return;
      }
      stagnation_[i] = improved ? 0 : stagnation_[i] + 1;
      offspring_[i] = std::move(o);
    }

    pop_.swap(offspring_);
    model_stale_ = true;
    ++generation_;
    ctx_.report_boundary(elitist_.fitness, generation_, pop_id_);
  }

  long generation() const override { return generation_; }
  const EvaluatedSolution& elitist() const override { return elitist_; }
  void offer_elitist(const EvaluatedSolution& candidate) override {
    if (cmp_.better(candidate.fitness, elitist_.fitness)) elitist_ = candidate;
  }

  const std::vector<EvaluatedSolution>& population() const { return pop_; }
  const Fos& linkage_model() const { return current_fos(); }
  long fi_threshold() const { return fi_threshold_; }

 private:
  const Fos& current_fos() const {
    return cfg_.model.kind == LinkageKind::fixed_tree ? model_->fos : learned_fos_;
  }

  void init_population() {
    pop_.reserve(cfg_.population_size);
    stagnation_.assign(cfg_.population_size, 0);
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
    if (cfg_.model.kind == LinkageKind::learned_lt) relearn();
  }

  void relearn() {
    genotype_view_.clear();
    for (const auto& s : pop_) genotype_view_.push_back(s.genotype);
    learned_fos_ = problem_.num_variables() == 1
                       ? Fos{1, {{0}}, {{-1, -1}}, cfg_.model.bound}
                       : learn_tree_upgma(mi_similarity(genotype_view_),
                                          cfg_.model.bound);
    model_stale_ = false;
  }

  void update_elitist(const EvaluatedSolution& s) {
    if (cmp_.better(s.fitness, elitist_.fitness)) {
      elitist_ = s;
      ctx_.report_improvement(elitist_.fitness, generation_, pop_id_);
    }
  }

  const GrayBoxProblem& problem_;
  EngineConfig cfg_;
  RunContext& ctx_;
  FitnessComparator cmp_;
  RngStream rng_;
  int pop_id_;
  long fi_threshold_ = 1;

  std::shared_ptr<const ModelArtifacts> model_;
  Fos learned_fos_;
  bool model_stale_ = false;
  std::vector<Genotype> genotype_view_;
  std::vector<std::size_t> fos_order_;

  std::vector<EvaluatedSolution> pop_;
  std::vector<EvaluatedSolution> offspring_;
  std::vector<long> stagnation_;
  EvaluatedSolution elitist_;
  EvalWorkspace ws_;
  long generation_ = 0;
};

}  // namespace gomix
