#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "gomix/graybox.hpp"
#include "gomix/runtime.hpp"

namespace gomix {

// One population's engine, as the interleaved scheduler sees it.
class GenerationRunner {
 public:
  virtual ~GenerationRunner() = default;
  virtual void run_generation() = 0;
  virtual long generation() const = 0;
  virtual const EvaluatedSolution& elitist() const = 0;
  // Offered the run-wide best before each generation; adopt it if better.
  virtual void offer_elitist(const EvaluatedSolution&) = 0;
};

struct ImsConfig {
  std::size_t base_population = 16;
  std::size_t subgenerations = 4;   // generations of P_i per generation of P_{i+1}
  std::size_t max_populations = 0;  // 0 = unlimited
};

using RunnerFactory = std::function<std::unique_ptr<GenerationRunner>(
    std::size_t population_size, int population_id)>;

// Interleaved multistart scheme: population i+1 is twice the size of
// population i and runs one generation for every `subgenerations` of its
// predecessor; new populations are created when the schedule first reaches
// them. There is no kill rule. The best solution is shared: it is offered
// to a population right before each of its generations and collected after.
class ImsDriver {
 public:
  ImsDriver(ImsConfig cfg, RunnerFactory factory, RunContext& ctx)
      : cfg_(cfg), factory_(std::move(factory)), ctx_(ctx) {
    if (cfg_.base_population == 0)
      throw std::invalid_argument("ims: base population must be positive");
    if (cfg_.subgenerations == 0)
      throw std::invalid_argument("ims: subgeneration factor must be positive");
  }

  // Advance the smallest population one generation plus whatever larger
  // populations fall due. Returns false once the run has been stopped.
  bool step() {
    if (ctx_.control.stop_requested()) return false;
    advance(0);
    return !ctx_.control.stop_requested();
  }

  std::size_t num_populations() const { return runners_.size(); }
  long generations(std::size_t i) const { return gens_[i]; }
  const GenerationRunner& runner(std::size_t i) const { return *runners_[i]; }
  std::size_t population_size(std::size_t i) const {
    return cfg_.base_population << i;
  }
  const EvaluatedSolution* best() const {
    return have_best_ ? &best_ : nullptr;
  }

 private:
  void advance(std::size_t i) {
    if (ctx_.control.stop_requested()) return;
    if (i >= runners_.size()) {
      if (cfg_.max_populations != 0 && runners_.size() >= cfg_.max_populations)
        return;
      runners_.push_back(factory_(population_size(i), static_cast<int>(i) + 1));
      gens_.push_back(0);
      collect(*runners_[i]);  // the fresh population's initial elitist counts
      if (ctx_.control.stop_requested()) return;
    }
    if (have_best_) runners_[i]->offer_elitist(best_);
    runners_[i]->run_generation();
    ++gens_[i];
    collect(*runners_[i]);
    if (!ctx_.control.stop_requested() &&
        gens_[i] % static_cast<long>(cfg_.subgenerations) == 0)
      advance(i + 1);
  }

  void collect(const GenerationRunner& runner) {
    const EvaluatedSolution& e = runner.elitist();
    if (!have_best_ || ctx_.control.comparator().better(e.fitness, best_.fitness)) {
      best_ = e;
      have_best_ = true;
    }
  }

  ImsConfig cfg_;
  RunnerFactory factory_;
  RunContext& ctx_;
  std::vector<std::unique_ptr<GenerationRunner>> runners_;
  std::vector<long> gens_;
  EvaluatedSolution best_;
  bool have_best_ = false;
};

}  // namespace gomix
