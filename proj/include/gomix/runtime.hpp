#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "gomix/graybox.hpp"

namespace gomix {

// One row of a run trace. `evaluations` is in gray-box units (evaluator
// invocations divided by the subfunction count).
struct TraceRecord {
  double seconds = 0.0;
  double evaluations = 0.0;
  long generation = 0;
  int population = 1;
  double fitness = 0.0;
};

// Receives every new best-so-far (improvement) and a steady stream of
// boundary snapshots the sink may thin out (e.g. into a timed heartbeat).
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void improvement(const TraceRecord&) {}
  virtual void boundary(const TraceRecord&) {}
};

enum class StopReason {
  none,
  evaluation_budget,
  wall_clock,
  target_reached,
  generation_limit,
};

inline const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::none: return "none";
    case StopReason::evaluation_budget: return "evaluation-budget";
    case StopReason::wall_clock: return "wall-clock";
    case StopReason::target_reached: return "target-reached";
    case StopReason::generation_limit: return "generation-limit";
  }
  return "unknown";
}

struct TerminationConfig {
  std::optional<double> max_evaluations;  // gray-box units
  std::optional<double> max_seconds;
  std::optional<double> target_fitness;
  std::optional<long> max_generations;
};

// Shared stop logic. Evaluator invocations are accumulated as an integer so
// the reported unit count is exactly invocations / q, independent of the
// order in which work was added.
class RunControl {
 public:
  RunControl(TerminationConfig cfg, FitnessComparator cmp,
             std::size_t num_subfunctions)
      : cfg_(cfg), cmp_(cmp), num_subfunctions_(num_subfunctions) {
    start();
  }

  void start() { start_ = std::chrono::steady_clock::now(); }

  double elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

  void add_evaluator_calls(std::uint64_t calls) {
    calls_ += calls;
    if (cfg_.max_evaluations && evaluations() >= *cfg_.max_evaluations)
      request_stop(StopReason::evaluation_budget);
    if ((++tick_ & 0x3ff) == 0) check_time();
  }

  void check_time() {
    if (!stop_ && cfg_.max_seconds && elapsed_seconds() >= *cfg_.max_seconds)
      request_stop(StopReason::wall_clock);
  }

  // Called with every new global best; latches the target stop.
  void note_best(double fitness) {
    if (!stop_ && cfg_.target_fitness &&
        (cmp_.better(fitness, *cfg_.target_fitness) ||
         cmp_.equal(fitness, *cfg_.target_fitness)))
      request_stop(StopReason::target_reached);
  }

  double evaluations() const {
    return num_subfunctions_ == 0 ? 0.0
                                  : static_cast<double>(calls_) /
                                        static_cast<double>(num_subfunctions_);
  }
  std::uint64_t evaluator_calls() const { return calls_; }

  bool stop_requested() const { return stop_; }
  StopReason reason() const { return reason_; }
  void request_stop(StopReason reason) {
    if (!stop_) {
      stop_ = true;
      reason_ = reason;
    }
  }

  const TerminationConfig& config() const { return cfg_; }
  const FitnessComparator& comparator() const { return cmp_; }

 private:
  TerminationConfig cfg_;
  FitnessComparator cmp_;
  std::size_t num_subfunctions_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t calls_ = 0;
  std::uint64_t tick_ = 0;
  bool stop_ = false;
  StopReason reason_ = StopReason::none;
};

// Run-wide state shared by every population of a run: termination control,
// the trace sink, and the best fitness reported so far. Improvements are
// filtered here so multi-population traces stay monotone.
class RunContext {
 public:
  RunContext(TerminationConfig cfg, FitnessComparator cmp,
             std::size_t num_subfunctions, TraceSink* sink = nullptr)
      : control(cfg, cmp, num_subfunctions), sink_(sink), cmp_(cmp) {}

  RunControl control;

  void report_improvement(double fitness, long generation, int population) {
    if (best_ && !cmp_.better(fitness, *best_)) return;
    best_ = fitness;
    control.note_best(fitness);
    if (sink_)
      sink_->improvement({control.elapsed_seconds(), control.evaluations(),
                          generation, population, fitness});
  }

  void report_boundary(double fitness, long generation, int population) {
    control.check_time();
    if (!sink_) return;
    // A heartbeat row describes the run, not one population: never report
    // below the best already on record.
    if (best_ && cmp_.better(*best_, fitness)) fitness = *best_;
    sink_->boundary({control.elapsed_seconds(), control.evaluations(),
                     generation, population, fitness});
  }

  std::optional<double> best_fitness() const { return best_; }

 private:
  TraceSink* sink_;
  FitnessComparator cmp_;
  std::optional<double> best_;
};

struct RunResult {
  EvaluatedSolution best;
  StopReason reason = StopReason::none;
  double evaluations = 0.0;
  long generations = 0;       // generations completed by the first population
  std::size_t populations = 0;

  struct GroupCounter {
    std::size_t sets = 0;
    std::size_t steps = 0;            // batched (solution, set) pairs executed
    std::uint64_t evaluator_calls = 0;
  };
  std::vector<GroupCounter> group_counters;  // batch engine only
};

}  // namespace gomix
