#pragma once

#include <memory>
#include <stdexcept>
#include <type_traits>

#include "gomix/engine_parallel.hpp"
#include "gomix/engine_serial.hpp"
#include "gomix/ims.hpp"
#include "gomix/model.hpp"
#include "gomix/rng.hpp"
#include "gomix/runtime.hpp"

namespace gomix {

// Everything a complete optimization run needs. With `use_ims` the population
// size scheme is taken from `ims` and `engine.population_size` is ignored;
// otherwise a single population of that size runs to termination.
struct RunSpec {
  EngineConfig engine;
  TerminationConfig termination;
  bool use_ims = true;
  ImsConfig ims;
};

namespace detail {

inline void require_termination(const TerminationConfig& t) {
  if (!t.max_evaluations && !t.max_seconds && !t.target_fitness &&
      !t.max_generations)
    throw std::invalid_argument("run: needs at least one termination criterion");
}

// Populations must explore independently: each gets its own stream, derived
// from the run seed and its position in the schedule.
inline std::uint64_t population_seed(std::uint64_t run_seed, int population_id) {
  return mix64(run_seed +
               0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(population_id));
}

template <typename Engine>
RunResult run_with(const GrayBoxProblem& problem, const RunSpec& spec,
                   TraceSink* sink, bool with_groups) {
  require_termination(spec.termination);
  RunContext ctx(spec.termination, problem.comparator(),
                 problem.num_subfunctions(), sink);

  EngineConfig shared = spec.engine;
  if (shared.model.kind == LinkageKind::fixed_tree && !shared.fixed_model)
    shared.fixed_model = build_fixed_model(problem, shared.model, with_groups);

  RunResult result;
  auto merge_counters = [&](const std::vector<RunResult::GroupCounter>& add) {
    if (result.group_counters.size() < add.size())
      result.group_counters.resize(add.size());
    for (std::size_t i = 0; i < add.size(); ++i) {
      result.group_counters[i].sets = add[i].sets;
      result.group_counters[i].steps += add[i].steps;
      result.group_counters[i].evaluator_calls += add[i].evaluator_calls;
    }
  };

  if (!spec.use_ims) {
    Engine engine(problem, shared, ctx);
    while (!ctx.control.stop_requested()) engine.run_generation();
    result.best = engine.elitist();
    result.generations = engine.generation();
    result.populations = 1;
    if constexpr (std::is_same_v<Engine, ParallelEngine>)
      merge_counters(engine.group_counters());
  } else {
    ImsDriver driver(
        spec.ims,
        [&](std::size_t population_size, int population_id) {
          EngineConfig cfg = shared;
          cfg.population_size = population_size;
          cfg.seed = population_seed(spec.engine.seed, population_id);
          return std::make_unique<Engine>(problem, cfg, ctx, population_id);
        },
        ctx);
    while (driver.step()) {
    }
    if (const EvaluatedSolution* best = driver.best()) result.best = *best;
    result.generations =
        driver.num_populations() ? driver.runner(0).generation() : 0;
    result.populations = driver.num_populations();
    if constexpr (std::is_same_v<Engine, ParallelEngine>) {
      for (std::size_t i = 0; i < driver.num_populations(); ++i)
        merge_counters(
            static_cast<const ParallelEngine&>(driver.runner(i)).group_counters());
    }
  }

  result.reason = ctx.control.reason();
  result.evaluations = ctx.control.evaluations();
  return result;
}

}  // namespace detail

inline RunResult run_serial(const GrayBoxProblem& problem, const RunSpec& spec,
                            TraceSink* sink = nullptr) {
  return detail::run_with<SerialEngine>(problem, spec, sink, false);
}

inline RunResult run_parallel(const GrayBoxProblem& problem, const RunSpec& spec,
                              TraceSink* sink = nullptr) {
  return detail::run_with<ParallelEngine>(problem, spec, sink, true);
}

}  // namespace gomix
